#include "mcgs/operators.hpp"

#include <algorithm>
#include <set>

#include "mcgs/errors.hpp"

namespace mcgs {

bool is_stagnant(const std::vector<double>& branch_metrics, int window,
                 Direction direction) {
  const int n = static_cast<int>(branch_metrics.size());
  if (window < 1 || n < window) return false;
  std::vector<double> running(branch_metrics.size());
  double best = branch_metrics.front();
  for (int i = 0; i < n; ++i) {
    if (metric_better(direction, branch_metrics[i], best)) best = branch_metrics[i];
    running[i] = best;
  }
  return running[n - 1] == running[n - window];
}

std::unordered_map<NodeId, int> branch_evaluated_counts(const SolutionGraph& graph) {
  std::unordered_map<NodeId, int> counts;
  for (NodeId id = 0; id < static_cast<NodeId>(graph.size()); ++id) {
    const SolutionNode& n = graph.node(id);
    if (n.state == ExecState::Evaluated && n.branch_id != kNoNode) {
      counts[n.branch_id] += 1;
    }
  }
  return counts;
}

bool aggregation_ready(const SolutionGraph& graph, const OperatorBudgets& budgets,
                       std::int64_t current_step, std::int64_t last_agg_step) {
  if (current_step - last_agg_step < budgets.agg_cooldown_steps) return false;
  int qualifying = 0;
  for (const auto& [branch, count] : branch_evaluated_counts(graph)) {
    if (count >= budgets.agg_min_trajectories) ++qualifying;
  }
  return qualifying >= 2;
}

bool is_expandable(const SolutionGraph& graph, NodeId id,
                   const OperatorBudgets& budgets, const InFlight& inflight,
                   bool root_aggregation_ready) {
  const SolutionNode& n = graph.node(id);
  switch (n.state) {
    case ExecState::Root:
      if (graph.draft_children_of_root() + inflight.root_drafts <
          budgets.max_draft_num) {
        return true;
      }
      return root_aggregation_ready;
    case ExecState::Buggy:
      return graph.primary_children(id).empty() && inflight.children_of(id) == 0;
    case ExecState::Evaluated:
      return static_cast<int>(graph.primary_children(id).size()) +
                 inflight.children_of(id) <
             budgets.max_children_per_node;
    case ExecState::Drafted:
    case ExecState::Failed:
      return false;
  }
  return false;
}

OperatorDecision choose_operator(const SolutionGraph& graph, NodeId node,
                                 const SchedulerInputs& in, Rng& rng) {
  OperatorDecision d;
  d.choice.node = node;
  const SolutionNode& n = graph.node(node);

  if (node == kRootId) {
    if (graph.draft_children_of_root() + in.inflight.root_drafts <
        in.budgets.max_draft_num) {
      d.choice.op = OperatorKind::Draft;
      d.choice.mode = ExpansionMode::PrimaryOnly;
      return d;
    }
    if (in.agg_enabled && in.aggregation_ready) {
      d.choice.op = OperatorKind::Fusion;
      d.choice.mode = ExpansionMode::MultiBranchAgg;
      return d;
    }
    raise(Errc::NoExpandableNode, "root selected without draft or aggregation capacity");
  }

  if (n.state == ExecState::Buggy) {
    if (n.debug_count < in.budgets.max_debug_num) {
      d.choice.op = OperatorKind::Debug;
      d.choice.mode = ExpansionMode::PrimaryOnly;
      return d;
    }
    d.budget_exhausted = true;
    d.choice.op = OperatorKind::Debug;
    d.choice.mode = ExpansionMode::PrimaryOnly;
    return d;
  }

  if (in.branch_stagnant && in.cross_enabled) {
    d.choice.op = OperatorKind::Fusion;
    d.choice.mode = ExpansionMode::CrossBranch;
    return d;
  }

  const double sum = in.weights.normal + in.weights.fe + in.weights.cs;
  const double u = rng.uniform01() * (sum > 0.0 ? sum : 1.0);
  if (u < in.weights.normal) {
    d.choice.op = OperatorKind::ImproveNormal;
  } else if (u < in.weights.normal + in.weights.fe) {
    d.choice.op = OperatorKind::ImproveFE;
  } else {
    d.choice.op = OperatorKind::ImproveCS;
  }
  d.choice.mode = in.intra_enabled ? ExpansionMode::IntraBranch
                                   : ExpansionMode::PrimaryOnly;
  return d;
}

namespace {

// Primary-tree distance between two nodes via their lowest common ancestor.
int tree_distance(const SolutionGraph& g, NodeId a, NodeId b) {
  auto pa = g.primary_path_to_root(a);
  auto pb = g.primary_path_to_root(b);
  std::set<NodeId> on_a(pa.begin(), pa.end());
  for (std::size_t i = 0; i < pb.size(); ++i) {
    if (on_a.count(pb[i]) != 0) {
      const NodeId lca = pb[i];
      const auto it = std::find(pa.begin(), pa.end(), lca);
      return static_cast<int>(it - pa.begin()) + static_cast<int>(i);
    }
  }
  return static_cast<int>(pa.size() + pb.size());
}

std::vector<NodeId> history_refs(const SolutionGraph& g, NodeId anchor, int cap) {
  const SolutionNode& a = g.node(anchor);
  struct Cand {
    NodeId id;
    int distance;
    bool ancestor;
    std::int64_t created_step;
  };
  std::vector<Cand> cands;
  for (NodeId id = 1; id < static_cast<NodeId>(g.size()); ++id) {
    if (id == anchor) continue;
    const SolutionNode& n = g.node(id);
    if (n.branch_id != a.branch_id) continue;
    if (n.state == ExecState::Drafted) continue;
    cands.push_back({id, tree_distance(g, anchor, id), g.is_ancestor(id, anchor),
                     n.created_step});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    if (x.ancestor != y.ancestor) return x.ancestor;
    if (x.created_step != y.created_step) return x.created_step > y.created_step;
    return x.id > y.id;
  });
  if (static_cast<int>(cands.size()) > cap) cands.resize(cap);
  std::vector<NodeId> out;
  for (const Cand& c : cands) out.push_back(c.id);
  return out;
}

std::vector<NodeId> cross_refs(const SolutionGraph& g, NodeId anchor, int cap,
                               Direction dir) {
  const NodeId own_branch = g.node(anchor).branch_id;
  std::vector<NodeId> cands;
  for (NodeId id = 1; id < static_cast<NodeId>(g.size()); ++id) {
    const SolutionNode& n = g.node(id);
    if (n.state != ExecState::Evaluated || !n.metric) continue;
    if (n.branch_id == own_branch || n.branch_id == kNoNode) continue;
    cands.push_back(id);
  }
  std::sort(cands.begin(), cands.end(), [&g, dir](NodeId x, NodeId y) {
    const SolutionNode& nx = g.node(x);
    const SolutionNode& ny = g.node(y);
    if (*nx.metric != *ny.metric) return metric_better(dir, *nx.metric, *ny.metric);
    if (nx.debug_count != ny.debug_count) return nx.debug_count < ny.debug_count;
    return x < y;
  });
  if (static_cast<int>(cands.size()) > cap) cands.resize(cap);
  return cands;
}

std::vector<NodeId> agg_refs(const SolutionGraph& g, const MemoryTiers& memory,
                             int cap, Direction dir, int min_trajectories) {
  const auto counts = branch_evaluated_counts(g);
  std::vector<MemoryEntry> pool;
  for (const auto& [branch, entries] : memory.per_branch) {
    const auto it = counts.find(branch);
    if (it == counts.end() || it->second < min_trajectories) continue;
    pool.insert(pool.end(), entries.begin(), entries.end());
  }
  std::sort(pool.begin(), pool.end(),
            [&g, dir](const MemoryEntry& x, const MemoryEntry& y) {
              if (x.metric != y.metric) return metric_better(dir, x.metric, y.metric);
              if (x.created_step != y.created_step) {
                return x.created_step < y.created_step;
              }
              return x.node < y.node;
            });
  std::vector<NodeId> out;
  std::set<NodeId> branches;
  for (const MemoryEntry& e : pool) {
    if (static_cast<int>(out.size()) >= cap) break;
    out.push_back(e.node);
    branches.insert(g.node(e.node).branch_id);
  }
  // The truncation must keep the multi-branch character: swap the tail for
  // the best entry of a second branch when everything came from one.
  if (branches.size() < 2 && !out.empty()) {
    const NodeId only = *branches.begin();
    for (const MemoryEntry& e : pool) {
      if (g.node(e.node).branch_id != only) {
        if (static_cast<int>(out.size()) >= cap) out.pop_back();
        out.push_back(e.node);
        branches.insert(g.node(e.node).branch_id);
        break;
      }
    }
  }
  if (branches.size() < 2) return {};
  return out;
}

}  // namespace

std::vector<NodeId> build_reference_set(const SolutionGraph& graph, NodeId anchor,
                                        ExpansionMode mode, const ReferenceCaps& caps,
                                        Direction direction, const MemoryTiers* memory,
                                        int agg_min_trajectories) {
  switch (mode) {
    case ExpansionMode::PrimaryOnly:
      return {};
    case ExpansionMode::IntraBranch:
      return history_refs(graph, anchor, caps.max_history_num);
    case ExpansionMode::CrossBranch:
      return cross_refs(graph, anchor, caps.max_ref_num, direction);
    case ExpansionMode::MultiBranchAgg:
      if (memory == nullptr) {
        raise(Errc::EmptyReferencePool, "aggregation needs the memory tiers");
      }
      return agg_refs(graph, *memory, caps.max_agg_num, direction,
                      agg_min_trajectories);
  }
  return {};
}

RefKind ref_kind_for(ExpansionMode mode) {
  switch (mode) {
    case ExpansionMode::IntraBranch: return RefKind::Hist;
    case ExpansionMode::CrossBranch: return RefKind::Cross;
    case ExpansionMode::MultiBranchAgg: return RefKind::Agg;
    case ExpansionMode::PrimaryOnly: break;
  }
  raise(Errc::EmptyReferencePool, "primary-only expansions carry no references");
}

ProposalRequest build_proposal_request(const SolutionGraph& graph,
                                       const OperatorChoice& choice,
                                       const std::vector<NodeId>& refs,
                                       const TaskSpec& task,
                                       std::vector<KnowledgeEntry> kb_context,
                                       std::uint64_t seed) {
  ProposalRequest req;
  req.op = choice.op;
  req.mode = choice.mode;
  const SolutionNode& target = graph.node(choice.node);
  req.target = target.payload;
  req.target_metric = target.metric;
  for (NodeId id : refs) {
    const SolutionNode& n = graph.node(id);
    req.references.push_back({id, n.payload, n.metric, n.state});
  }
  req.task = task;
  req.kb_context = std::move(kb_context);
  req.seed = seed;
  return req;
}

}  // namespace mcgs
