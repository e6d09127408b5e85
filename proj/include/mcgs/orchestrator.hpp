#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mcgs/config.hpp"
#include "mcgs/engine.hpp"
#include "mcgs/events.hpp"
#include "mcgs/graph.hpp"
#include "mcgs/knowledge.hpp"
#include "mcgs/operators.hpp"
#include "mcgs/search.hpp"
#include "mcgs/synthetic.hpp"

namespace mcgs {

// Test hook into the search loop. Called on the coordinator thread, after
// the named phase of an applied simulation.
class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void after_backprop(const SolutionGraph& graph, NodeId leaf,
                              const std::vector<NodeId>& path, double value) {
    (void)graph; (void)leaf; (void)path; (void)value;
  }
  virtual void after_step(const SolutionGraph& graph, std::int64_t step) {
    (void)graph; (void)step;
  }
};

struct RunResult {
  NodeId best_node = kNoNode;
  std::optional<double> best_metric;
  int steps_completed = 0;
  std::int64_t node_count = 0;
  NodeId ensemble_node = kNoNode;
  std::string output_dir;  // empty when nothing was written
};

// Built-in task used when the config names no task file.
TaskSpec default_task();

// Coordinator for one run: selection, operator scheduling, expansion jobs
// (inline when max_parallel_workers == 1, a worker pool otherwise), reward,
// backpropagation, memory, the event log and the output files.
class Orchestrator {
 public:
  explicit Orchestrator(RunConfig cfg);
  ~Orchestrator();

  // Test seams; call before run().
  void set_engine(std::unique_ptr<ProposalEngine> engine);
  void set_environment(std::unique_ptr<Environment> environment);
  void set_observer(StepObserver* observer) { observer_ = observer; }

  RunResult run();

  const RunConfig& config() const { return cfg_; }
  const TaskSpec& task() const { return task_; }
  const SolutionGraph& graph() const { return graph_; }
  const MemoryTiers& memory() const { return memory_; }
  const std::vector<EventRecord>& events() const { return log_.records(); }
  // Null when the environment is not the synthetic one.
  const SyntheticTaskTables* task_tables() const;

 private:
  // One dispatched-but-unapplied expansion job.
  struct Pending {
    std::int64_t sim_index = 0;
    OperatorChoice choice;  // mode is the final one, after any fallback
    bool fallback = false;
    std::vector<NodeId> refs;
    std::vector<NodeId> overlay_path;
  };

  std::vector<KnowledgeEntry> kb_context_for(OperatorKind op);
  bool dispatch_one(std::int64_t sim_index);
  NodeId commit_success(const Pending& ctx, const SolutionPayload& payload,
                        const ReviewVerdict& verdict,
                        const std::optional<EvalOutcome>& outcome);
  void apply_result(const Pending& ctx, struct JobResult&& result);
  void finalize_run();
  void write_outputs();

  RunConfig cfg_;
  ReferenceModeFlags flags_;
  TaskSpec task_;
  std::unique_ptr<ProposalEngine> engine_;
  std::unique_ptr<Environment> environment_;
  SyntheticEnvironment* synthetic_env_ = nullptr;  // non-owning view
  KnowledgeBase kb_;
  std::vector<KnowledgeEntry> retrieved_;

  SolutionGraph graph_;
  MemoryTiers memory_;
  VisitOverlay overlay_;
  InFlight inflight_;
  EventLog log_;
  Rng scheduler_rng_;
  std::unordered_map<NodeId, std::vector<double>> branch_history_;
  std::int64_t last_agg_step_ = 0;
  std::int64_t sims_dispatched_ = 0;
  int steps_completed_ = 0;
  NodeId ensemble_node_ = kNoNode;
  StepObserver* observer_ = nullptr;

  std::unique_ptr<class JobRunner> runner_;
  std::unordered_map<std::int64_t, Pending> pending_;
};

// Rebuilds the solution graph purely from an event log; the result matches
// the graph serialized at the end of the run that produced the log.
SolutionGraph replay_events(const std::vector<EventRecord>& events);

}  // namespace mcgs
