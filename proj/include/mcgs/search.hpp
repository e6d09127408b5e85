#pragma once

#include <functional>
#include <map>
#include <unordered_map>
#include <vector>

#include "mcgs/graph.hpp"
#include "mcgs/types.hpp"

namespace mcgs {

struct SearchPolicyConfig {
  double exploration_constant = 1.414;
  double epsilon = 1e-6;  // visit smoothing; lets unvisited children score
};

// UCT(i) = Q_i / (N_i + eps) + c * sqrt(ln(N_v + 1) / (N_i + eps))
// where Q is the accumulated reward sum and N_v the parent visit count.
double uct_score(const NodeStats& child, std::int64_t parent_visits,
                 const SearchPolicyConfig& config);

// Pending visit counts for dispatched-but-unfinished expansions. Selection
// reads N + pending so in-flight paths look discouraged; NodeStats itself is
// never decremented.
struct VisitOverlay {
  std::unordered_map<NodeId, std::int64_t> pending;

  std::int64_t of(NodeId id) const {
    auto it = pending.find(id);
    return it == pending.end() ? 0 : it->second;
  }
  void add_path(const std::vector<NodeId>& path) {
    for (NodeId id : path) ++pending[id];
  }
  void remove_path(const std::vector<NodeId>& path) {
    for (NodeId id : path) {
      auto it = pending.find(id);
      if (it != pending.end() && --it->second <= 0) pending.erase(it);
    }
  }
};

using ExpandablePred = std::function<bool(NodeId)>;

// Descends from v0 along primary edges, at each node preferring the child
// with the highest UCT score (exact ties toward the lower node_id), until a
// node the predicate accepts is found. Subtrees that bottom out without an
// expandable node are skipped in score order. Throws NoExpandableNode when
// the whole tree is exhausted.
NodeId select(const SolutionGraph& graph, const SearchPolicyConfig& config,
              const ExpandablePred& expandable,
              const VisitOverlay* overlay = nullptr);

struct RewardComponents {
  double improvement = 0.0;
  double debug_bonus = 0.0;
  double penalty = 0.0;
};

struct RewardRecord {
  double value = 0.0;  // clamp(improvement + debug_bonus + penalty, -1, 1)
  RewardComponents components;
};

// Failure (child Buggy/Failed) => penalty -1. Repair (parent Buggy/Failed,
// child Evaluated) => debug_bonus +0.5 plus the improvement term when the
// parent carries a metric. Both evaluated => improvement = clamp(dir *
// (m_child - m_parent) / max(|m_parent|, 1e-8), -1, 1). A review warning on
// the child adds penalty -0.25. Throws MissingMetric for an evaluated child
// without a metric.
RewardRecord compute_reward(const SolutionNode& parent, const SolutionNode& child,
                            const TaskSpec& task);

// Adds reward.value to Q and 1 to N on every node of the leaf -> root primary
// path, nothing else. Returns the path, leaf first. Throws UnknownNode.
std::vector<NodeId> backpropagate(SolutionGraph& graph, NodeId leaf,
                                  const RewardRecord& reward);

struct MemoryEntry {
  NodeId node = kNoNode;
  double metric = 0.0;
  std::int64_t created_step = 0;
};

// Three-tier experience memory: full payloads stay on the nodes themselves
// (tier 1); these are the per-branch and global top-k indexes (tiers 2, 3).
// Ordering is direction-aware; ties prefer the earlier created_step, then the
// lower node id.
struct MemoryTiers {
  int branch_top_k = 5;
  int global_top_k = 10;
  std::map<NodeId, std::vector<MemoryEntry>> per_branch;
  std::vector<MemoryEntry> global;
};

// Inserts an Evaluated node into its branch tier and the global tier,
// truncating to the configured k. Returns true when any tier changed.
// Throws MissingMetric for nodes without a metric.
bool update_memory(MemoryTiers& memory, const SolutionNode& node,
                   const TaskSpec& task);

// Best entry of the global tier. Throws NoEvaluatedSolution when empty.
NodeId best_solution(const MemoryTiers& memory, const TaskSpec& task);

}  // namespace mcgs
