#include "mcgs/search.hpp"

#include <algorithm>
#include <cmath>

#include "mcgs/errors.hpp"

namespace mcgs {

double uct_score(const NodeStats& child, std::int64_t parent_visits,
                 const SearchPolicyConfig& config) {
  const double n = static_cast<double>(child.visits) + config.epsilon;
  const double exploit = child.value / n;
  const double explore = config.exploration_constant *
                         std::sqrt(std::log(static_cast<double>(parent_visits) + 1.0) / n);
  return exploit + explore;
}

namespace {

struct ScoredChild {
  NodeId id;
  double score;
};

// Children of v ordered best-first: score descending, exact ties toward the
// lower node id.
std::vector<ScoredChild> ranked_children(const SolutionGraph& graph, NodeId v,
                                         const SearchPolicyConfig& config,
                                         const VisitOverlay* overlay) {
  const auto& kids = graph.primary_children(v);
  const std::int64_t parent_visits =
      graph.node(v).stats.visits + (overlay ? overlay->of(v) : 0);
  std::vector<ScoredChild> out;
  out.reserve(kids.size());
  for (NodeId c : kids) {
    NodeStats stats = graph.node(c).stats;
    if (overlay) stats.visits += overlay->of(c);
    out.push_back({c, uct_score(stats, parent_visits, config)});
  }
  std::sort(out.begin(), out.end(), [](const ScoredChild& a, const ScoredChild& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return out;
}

NodeId descend(const SolutionGraph& graph, NodeId v,
               const SearchPolicyConfig& config, const ExpandablePred& expandable,
               const VisitOverlay* overlay) {
  if (expandable(v)) return v;
  for (const ScoredChild& c : ranked_children(graph, v, config, overlay)) {
    const NodeId found = descend(graph, c.id, config, expandable, overlay);
    if (found != kNoNode) return found;
  }
  return kNoNode;
}

}  // namespace

NodeId select(const SolutionGraph& graph, const SearchPolicyConfig& config,
              const ExpandablePred& expandable, const VisitOverlay* overlay) {
  const NodeId found = descend(graph, kRootId, config, expandable, overlay);
  if (found == kNoNode) {
    raise(Errc::NoExpandableNode, "every node is terminal or budget-capped");
  }
  return found;
}

namespace {

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

RewardRecord compute_reward(const SolutionNode& parent, const SolutionNode& child,
                            const TaskSpec& task) {
  RewardRecord r;
  const bool failed =
      child.state == ExecState::Failed || child.state == ExecState::Buggy;
  if (failed) {
    r.components.penalty = -1.0;
  } else if (child.state == ExecState::Evaluated) {
    if (!child.metric) {
      raise(Errc::MissingMetric, "node " + std::to_string(child.node_id));
    }
    const bool repaired_parent =
        parent.state == ExecState::Buggy || parent.state == ExecState::Failed;
    if (repaired_parent) r.components.debug_bonus = 0.5;
    if (parent.metric) {
      const double base = std::max(std::abs(*parent.metric), 1e-8);
      r.components.improvement = clamp1(
          direction_sign(task.direction) * (*child.metric - *parent.metric) / base);
    }
  } else {
    raise(Errc::MissingMetric,
          "node " + std::to_string(child.node_id) + " was never simulated");
  }
  if (child.review_warned) r.components.penalty += -0.25;
  r.value = clamp1(r.components.improvement + r.components.debug_bonus +
                   r.components.penalty);
  return r;
}

std::vector<NodeId> backpropagate(SolutionGraph& graph, NodeId leaf,
                                  const RewardRecord& reward) {
  std::vector<NodeId> path = graph.primary_path_to_root(leaf);
  for (NodeId id : path) graph.add_visit(id, reward.value);
  return path;
}

namespace {

bool entry_before(Direction dir, const MemoryEntry& a, const MemoryEntry& b) {
  if (a.metric != b.metric) return metric_better(dir, a.metric, b.metric);
  if (a.created_step != b.created_step) return a.created_step < b.created_step;
  return a.node < b.node;
}

// Returns true if the tier changed.
bool insert_top_k(std::vector<MemoryEntry>& tier, const MemoryEntry& entry,
                  int k, Direction dir) {
  if (k <= 0) return false;
  auto pos = std::lower_bound(
      tier.begin(), tier.end(), entry,
      [dir](const MemoryEntry& a, const MemoryEntry& b) { return entry_before(dir, a, b); });
  if (tier.size() >= static_cast<std::size_t>(k) && pos == tier.end()) return false;
  tier.insert(pos, entry);
  if (tier.size() > static_cast<std::size_t>(k)) tier.pop_back();
  return true;
}

}  // namespace

bool update_memory(MemoryTiers& memory, const SolutionNode& node,
                   const TaskSpec& task) {
  if (node.state != ExecState::Evaluated || !node.metric) {
    raise(Errc::MissingMetric, "node " + std::to_string(node.node_id));
  }
  const MemoryEntry entry{node.node_id, *node.metric, node.created_step};
  const bool branch_changed = insert_top_k(memory.per_branch[node.branch_id], entry,
                                           memory.branch_top_k, task.direction);
  if (memory.per_branch[node.branch_id].empty()) memory.per_branch.erase(node.branch_id);
  const bool global_changed =
      insert_top_k(memory.global, entry, memory.global_top_k, task.direction);
  return branch_changed || global_changed;
}

NodeId best_solution(const MemoryTiers& memory, const TaskSpec&) {
  if (memory.global.empty()) {
    raise(Errc::NoEvaluatedSolution, "no evaluated solution recorded");
  }
  return memory.global.front().node;
}

}  // namespace mcgs
