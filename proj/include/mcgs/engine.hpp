#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mcgs/knowledge.hpp"
#include "mcgs/types.hpp"

namespace mcgs {

// Snapshot of a referenced node handed to an engine. Plain values only; the
// engine never sees the graph.
struct ReferencePayload {
  NodeId node = kNoNode;
  SolutionPayload payload;
  std::optional<double> metric;
  ExecState state = ExecState::Evaluated;
};

struct ProposalRequest {
  OperatorKind op = OperatorKind::Draft;
  ExpansionMode mode = ExpansionMode::PrimaryOnly;
  SolutionPayload target;               // empty payload when the target is v0
  std::optional<double> target_metric;
  std::vector<ReferencePayload> references;
  TaskSpec task;
  std::vector<KnowledgeEntry> kb_context;
  std::uint64_t seed = 0;               // per-job; same request => same payload
};

enum class ReviewDecision { Pass, Warn, Reject };

struct ReviewVerdict {
  ReviewDecision decision = ReviewDecision::Pass;
  std::vector<std::string> issues;
};

enum class EvalStatus { Evaluated, Buggy, Failed };

struct EvalOutcome {
  EvalStatus status = EvalStatus::Failed;
  std::optional<double> metric;  // present iff status == Evaluated
  std::string log;
};

class ProposalEngine {
 public:
  virtual ~ProposalEngine() = default;
  // Deterministic in the request, seed included. Throws Error{EngineFailure}.
  virtual SolutionPayload propose(const ProposalRequest& request) = 0;
  // Static inspection of a candidate before simulation.
  virtual ReviewVerdict review(const SolutionPayload& candidate,
                               const TaskSpec& task) = 0;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual EvalOutcome evaluate(const SolutionPayload& payload,
                               const TaskSpec& task) = 0;
  // Combines finalization members into a single payload.
  virtual SolutionPayload ensemble_combine(
      const std::vector<ReferencePayload>& members, const TaskSpec& task) = 0;
};

}  // namespace mcgs
