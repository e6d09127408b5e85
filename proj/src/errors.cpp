#include "mcgs/errors.hpp"

namespace mcgs {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::UnknownParent: return "unknown_parent";
    case Errc::UnknownNode: return "unknown_node";
    case Errc::GraphFinalized: return "graph_finalized";
    case Errc::BackwardReference: return "backward_reference";
    case Errc::DuplicateEdge: return "duplicate_edge";
    case Errc::EmptySources: return "empty_sources";
    case Errc::NoExpandableNode: return "no_expandable_node";
    case Errc::MissingMetric: return "missing_metric";
    case Errc::NoEvaluatedSolution: return "no_evaluated_solution";
    case Errc::BudgetExhausted: return "budget_exhausted";
    case Errc::EmptyReferencePool: return "empty_reference_pool";
    case Errc::EngineFailure: return "engine_failure";
    case Errc::ConfigError: return "config_error";
    case Errc::TaskLoadError: return "task_load_error";
    case Errc::IoError: return "io_error";
    case Errc::StructureInvalid: return "structure_invalid";
    case Errc::WorkerPanic: return "worker_panic";
  }
  return "unknown";
}

}  // namespace mcgs
