#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcgs {

using NodeId = std::int64_t;
inline constexpr NodeId kNoNode = -1;
inline constexpr NodeId kRootId = 0;

enum class ExecState { Root, Drafted, Buggy, Evaluated, Failed };

enum class OperatorKind {
  Draft,
  Debug,
  ImproveNormal,
  ImproveFE,
  ImproveCS,
  Fusion,
  CodeReview,
  Ensemble,
};

enum class ExpansionMode { PrimaryOnly, IntraBranch, CrossBranch, MultiBranchAgg };

enum class EdgeKind { Primary, Reference };

// Reference edge flavor, matching the expansion mode that created it.
enum class RefKind { Hist, Cross, Agg };

enum class Direction { Maximize, Minimize };

enum class KnowledgeLevel { Model, Data, Strategy };

const char* to_string(ExecState v);
const char* to_string(OperatorKind v);
const char* to_string(ExpansionMode v);
const char* to_string(EdgeKind v);
const char* to_string(RefKind v);
const char* to_string(Direction v);
const char* to_string(KnowledgeLevel v);

ExecState parse_exec_state(const std::string& s);
OperatorKind parse_operator_kind(const std::string& s);
ExpansionMode parse_expansion_mode(const std::string& s);
EdgeKind parse_edge_kind(const std::string& s);
RefKind parse_ref_kind(const std::string& s);
Direction parse_direction(const std::string& s);
KnowledgeLevel parse_knowledge_level(const std::string& s);

// Visit count N and accumulated reward sum Q.
struct NodeStats {
  std::int64_t visits = 0;
  double value = 0.0;
};

struct SolutionPayload {
  std::string plan;
  std::string artifact;  // opaque blob; the engine defines the encoding
  std::string analysis;
  // Node ids of incoming reference edge sources, ascending. Maintained by
  // the graph, not by engines.
  std::vector<NodeId> provenance;
};

struct SolutionNode {
  NodeId node_id = kNoNode;
  std::optional<NodeId> parent_id;        // absent for root
  NodeId branch_id = kNoNode;             // node_id of the root-child ancestor
  int depth = 0;
  SolutionPayload payload;
  ExecState state = ExecState::Drafted;
  std::optional<double> metric;           // present iff state == Evaluated
  NodeStats stats;
  std::int64_t created_step = 0;          // simulation counter at creation
  int debug_count = 0;                    // consecutive Debug steps up the lineage
  std::optional<OperatorKind> operator_used;  // absent for root
  bool review_warned = false;
};

struct EdgeRecord {
  NodeId source = kNoNode;
  NodeId target = kNoNode;
  EdgeKind kind = EdgeKind::Primary;
  std::optional<RefKind> ref_kind;  // present iff kind == Reference
};

struct TaskSpec {
  std::string task_id;
  std::string description;
  std::string metric_name;
  Direction direction = Direction::Maximize;
  double eval_noise_sigma = 0.0;
  double time_budget_seconds = 0.0;  // 0 = unlimited
  int design_dims = 8;
  int design_cardinality = 16;
};

inline double direction_sign(Direction d) {
  return d == Direction::Maximize ? 1.0 : -1.0;
}

// True when a is strictly better than b under the task direction.
inline bool metric_better(Direction d, double a, double b) {
  return d == Direction::Maximize ? a > b : a < b;
}

}  // namespace mcgs
