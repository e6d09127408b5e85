#pragma once

#include <stdexcept>
#include <string>

namespace mcgs {

enum class Errc {
  UnknownParent,
  UnknownNode,
  GraphFinalized,
  BackwardReference,
  DuplicateEdge,
  EmptySources,
  NoExpandableNode,
  MissingMetric,
  NoEvaluatedSolution,
  BudgetExhausted,
  EmptyReferencePool,
  EngineFailure,
  ConfigError,
  TaskLoadError,
  IoError,
  StructureInvalid,
  WorkerPanic,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, std::string(errc_name(code)) + ": " + what);
}

}  // namespace mcgs
