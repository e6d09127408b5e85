#pragma once

#include <unordered_map>
#include <vector>

#include "mcgs/engine.hpp"
#include "mcgs/graph.hpp"
#include "mcgs/rng.hpp"
#include "mcgs/search.hpp"
#include "mcgs/types.hpp"

namespace mcgs {

struct OperatorBudgets {
  int max_draft_num = 7;
  int max_debug_num = 20;
  int max_children_per_node = 3;
  int stagnation_window = 5;
  int agg_min_trajectories = 5;
  int agg_cooldown_steps = 50;
};

struct ReferenceCaps {
  int max_history_num = 7;
  int max_ref_num = 7;
  int max_agg_num = 7;
};

// Sampling weights for the Improve variants; the scheduler normalizes.
struct ImproveWeights {
  double normal = 0.5;
  double fe = 0.3;
  double cs = 0.2;
};

// A branch stalls when its running best has not moved across the last
// `window` evaluations: with n metrics in evaluation order, stagnant iff
// n >= window and running_best[n-1] == running_best[n-window].
bool is_stagnant(const std::vector<double>& branch_metrics, int window,
                 Direction direction);

// Count of Evaluated nodes per branch id.
std::unordered_map<NodeId, int> branch_evaluated_counts(const SolutionGraph& graph);

// Multi-branch aggregation fires when at least two branches hold
// agg_min_trajectories evaluated nodes each and the cooldown since the last
// aggregation (step 0 initially) has elapsed.
bool aggregation_ready(const SolutionGraph& graph, const OperatorBudgets& budgets,
                       std::int64_t current_step, std::int64_t last_agg_step);

// Counts of dispatched-but-unfinished expansions, for parallel search.
struct InFlight {
  std::unordered_map<NodeId, int> children;  // parent -> pending child count
  int root_drafts = 0;

  int children_of(NodeId id) const {
    auto it = children.find(id);
    return it == children.end() ? 0 : it->second;
  }
};

// Which nodes selection may stop at. Root: draft budget remaining, or an
// aggregation is due. Buggy: childless (a single repair lineage per bug).
// Evaluated: fewer than max_children_per_node children. Drafted and Failed
// nodes are never expandable.
bool is_expandable(const SolutionGraph& graph, NodeId id,
                   const OperatorBudgets& budgets, const InFlight& inflight,
                   bool root_aggregation_ready);

struct OperatorChoice {
  OperatorKind op = OperatorKind::Draft;
  ExpansionMode mode = ExpansionMode::PrimaryOnly;
  NodeId node = kRootId;  // expansion target (the new node's parent)
};

struct SchedulerInputs {
  OperatorBudgets budgets;
  ImproveWeights weights;
  bool intra_enabled = true;
  bool cross_enabled = true;
  bool agg_enabled = true;
  bool aggregation_ready = false;  // precomputed for this step
  bool branch_stagnant = false;    // precomputed for the node's branch
  InFlight inflight;
};

struct OperatorDecision {
  // True for a Buggy node whose debug budget is spent: the caller marks it
  // Failed, records the exhaustion, and reselects without consuming a step.
  bool budget_exhausted = false;
  OperatorChoice choice;
};

// Operator for one selected node, by priority: root drafts, then root
// aggregation; Buggy nodes get Debug while budget lasts; a stagnant branch
// escalates to cross-branch Fusion; otherwise an Improve variant is sampled
// from the weights (one uniform draw), expanding intra-branch when enabled.
OperatorDecision choose_operator(const SolutionGraph& graph, NodeId node,
                                 const SchedulerInputs& inputs, Rng& rng);

// Reference sources for an expansion at `anchor`, already ordered for the
// engine. IntraBranch: same-branch history (failures included as evidence),
// nearest by primary-path distance, ancestors first, then most recent.
// CrossBranch: best Evaluated nodes from other branches (metric, then lower
// debug_count, then id). MultiBranchAgg: branch-tier tops of every branch
// holding agg_min_trajectories evaluations, best metric first, truncated to
// max_agg_num but always spanning at least two branches. PrimaryOnly: empty.
std::vector<NodeId> build_reference_set(const SolutionGraph& graph, NodeId anchor,
                                        ExpansionMode mode, const ReferenceCaps& caps,
                                        Direction direction,
                                        const MemoryTiers* memory = nullptr,
                                        int agg_min_trajectories = 5);

RefKind ref_kind_for(ExpansionMode mode);  // IntraBranch/CrossBranch/MultiBranchAgg

// Assembles the engine request: the target node's payload and metric, one
// ReferencePayload per source, the task, the injected knowledge entries and
// the per-job seed.
ProposalRequest build_proposal_request(const SolutionGraph& graph,
                                       const OperatorChoice& choice,
                                       const std::vector<NodeId>& refs,
                                       const TaskSpec& task,
                                       std::vector<KnowledgeEntry> kb_context,
                                       std::uint64_t seed);

}  // namespace mcgs
