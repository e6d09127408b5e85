#include <doctest.h>

#include <string>
#include <vector>

#include "mcgs/errors.hpp"
#include "mcgs/operators.hpp"
#include "mcgs/rng.hpp"

using namespace mcgs;

namespace {

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error to be thrown");
  return Errc::ConfigError;
}

SolutionPayload pay(const std::string& tag) {
  SolutionPayload p;
  p.plan = tag;
  return p;
}

NodeId grow(SolutionGraph& g, NodeId parent, std::int64_t step,
            OperatorKind op = OperatorKind::ImproveNormal) {
  g.set_current_step(step);
  return g.add_child(parent, pay("n" + std::to_string(step)), op);
}

NodeId grow_eval(SolutionGraph& g, NodeId parent, std::int64_t step, double metric,
                 OperatorKind op = OperatorKind::ImproveNormal) {
  const NodeId id = grow(g, parent, step, op);
  g.record_outcome(id, ExecState::Evaluated, metric);
  return id;
}

TaskSpec max_task() {
  TaskSpec t;
  t.task_id = "t";
  t.metric_name = "score";
  return t;
}

}  // namespace

TEST_CASE("stagnation compares the running best across the window") {
  const Direction max = Direction::Maximize;
  // Six evaluations, flat since the second one: the last five are identical.
  CHECK(is_stagnant({0.5, 0.6, 0.6, 0.6, 0.6, 0.6}, 5, max));
  // Only five: the window still sees the initial climb.
  CHECK_FALSE(is_stagnant({0.5, 0.6, 0.6, 0.6, 0.6}, 5, max));
  // A fresh record at the end resets the clock.
  CHECK_FALSE(is_stagnant({0.5, 0.5, 0.5, 0.5, 0.5, 0.6}, 5, max));
  // Worse metrics do not move the running best, so they count as stalling.
  CHECK(is_stagnant({0.6, 0.5, 0.4, 0.3, 0.2, 0.1}, 5, max));
  CHECK_FALSE(is_stagnant({0.5, 0.6}, 5, max));
  CHECK_FALSE(is_stagnant({}, 5, max));
  CHECK_FALSE(is_stagnant({0.5, 0.5, 0.5}, 0, max));

  const Direction min = Direction::Minimize;
  CHECK(is_stagnant({0.5, 0.4, 0.4, 0.4, 0.4, 0.4}, 5, min));
  CHECK_FALSE(is_stagnant({0.5, 0.5, 0.5, 0.5, 0.5, 0.4}, 5, min));
}

TEST_CASE("branch evaluated counts ignore everything but evaluated nodes") {
  SolutionGraph g;
  const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
  const NodeId b = grow(g, kRootId, 2, OperatorKind::Draft);
  g.record_outcome(a, ExecState::Evaluated, 0.5);
  g.record_outcome(b, ExecState::Buggy, std::nullopt);
  grow_eval(g, a, 3, 0.6);
  grow(g, a, 4);  // still drafted

  const auto counts = branch_evaluated_counts(g);
  REQUIRE(counts.size() == 1);
  CHECK(counts.at(a) == 2);
}

TEST_CASE("aggregation readiness needs two stocked branches and a cooled timer") {
  SolutionGraph g;
  OperatorBudgets budgets;
  budgets.agg_min_trajectories = 2;
  budgets.agg_cooldown_steps = 10;

  const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
  const NodeId b = grow(g, kRootId, 2, OperatorKind::Draft);
  g.record_outcome(a, ExecState::Evaluated, 0.5);
  g.record_outcome(b, ExecState::Evaluated, 0.4);
  grow_eval(g, a, 3, 0.6);

  // Branch b holds only one evaluation.
  CHECK_FALSE(aggregation_ready(g, budgets, 20, 0));
  grow_eval(g, b, 4, 0.45);
  CHECK(aggregation_ready(g, budgets, 20, 0));
  // The cooldown blocks until enough steps since the last aggregation pass.
  CHECK_FALSE(aggregation_ready(g, budgets, 20, 15));
  CHECK(aggregation_ready(g, budgets, 25, 15));
}

TEST_CASE("expandability follows the node state table") {
  SolutionGraph g;
  OperatorBudgets budgets;
  budgets.max_draft_num = 2;
  budgets.max_children_per_node = 2;
  InFlight none;

  SUBCASE("root expands while draft budget remains") {
    CHECK(is_expandable(g, kRootId, budgets, none, false));
    grow(g, kRootId, 1, OperatorKind::Draft);
    CHECK(is_expandable(g, kRootId, budgets, none, false));
    grow(g, kRootId, 2, OperatorKind::Draft);
    CHECK_FALSE(is_expandable(g, kRootId, budgets, none, false));
    CHECK(is_expandable(g, kRootId, budgets, none, true));  // aggregation due
  }
  SUBCASE("in-flight root drafts count against the budget") {
    grow(g, kRootId, 1, OperatorKind::Draft);
    InFlight inflight;
    inflight.root_drafts = 1;
    CHECK_FALSE(is_expandable(g, kRootId, budgets, inflight, false));
  }
  SUBCASE("buggy nodes take exactly one repair lineage") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    g.record_outcome(a, ExecState::Buggy, std::nullopt);
    CHECK(is_expandable(g, a, budgets, none, false));
    InFlight inflight;
    inflight.children[a] = 1;
    CHECK_FALSE(is_expandable(g, a, budgets, inflight, false));
    grow(g, a, 2, OperatorKind::Debug);
    CHECK_FALSE(is_expandable(g, a, budgets, none, false));
  }
  SUBCASE("evaluated nodes honor the child cap, in-flight included") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    g.record_outcome(a, ExecState::Evaluated, 0.5);
    CHECK(is_expandable(g, a, budgets, none, false));
    InFlight inflight;
    inflight.children[a] = 1;
    CHECK(is_expandable(g, a, budgets, inflight, false));
    inflight.children[a] = 2;
    CHECK_FALSE(is_expandable(g, a, budgets, inflight, false));
    grow(g, a, 2);
    grow(g, a, 3);
    CHECK_FALSE(is_expandable(g, a, budgets, none, false));
  }
  SUBCASE("drafted and failed nodes never expand") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    CHECK_FALSE(is_expandable(g, a, budgets, none, false));
    g.record_outcome(a, ExecState::Failed, std::nullopt);
    CHECK_FALSE(is_expandable(g, a, budgets, none, false));
  }
}

TEST_CASE("operator choice follows the priority ladder") {
  SolutionGraph g;
  SchedulerInputs in;
  in.budgets.max_draft_num = 1;
  in.budgets.max_debug_num = 2;
  Rng rng(1);

  SUBCASE("root prefers drafting") {
    const OperatorDecision d = choose_operator(g, kRootId, in, rng);
    CHECK_FALSE(d.budget_exhausted);
    CHECK(d.choice.op == OperatorKind::Draft);
    CHECK(d.choice.mode == ExpansionMode::PrimaryOnly);
    CHECK(d.choice.node == kRootId);
  }
  SUBCASE("a drafted-out root escalates to aggregation when ready") {
    grow(g, kRootId, 1, OperatorKind::Draft);
    in.aggregation_ready = true;
    const OperatorDecision d = choose_operator(g, kRootId, in, rng);
    CHECK(d.choice.op == OperatorKind::Fusion);
    CHECK(d.choice.mode == ExpansionMode::MultiBranchAgg);
  }
  SUBCASE("a drafted-out root without aggregation refuses the pick") {
    grow(g, kRootId, 1, OperatorKind::Draft);
    CHECK(code_of([&] { choose_operator(g, kRootId, in, rng); }) ==
          Errc::NoExpandableNode);
    in.aggregation_ready = true;
    in.agg_enabled = false;
    CHECK(code_of([&] { choose_operator(g, kRootId, in, rng); }) ==
          Errc::NoExpandableNode);
  }
  SUBCASE("in-flight drafts count against the root budget") {
    in.inflight.root_drafts = 1;
    in.aggregation_ready = true;
    const OperatorDecision d = choose_operator(g, kRootId, in, rng);
    CHECK(d.choice.mode == ExpansionMode::MultiBranchAgg);
  }
  SUBCASE("buggy nodes get a debug step while budget remains") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    g.record_outcome(a, ExecState::Buggy, std::nullopt);
    const OperatorDecision d = choose_operator(g, a, in, rng);
    CHECK_FALSE(d.budget_exhausted);
    CHECK(d.choice.op == OperatorKind::Debug);
    CHECK(d.choice.mode == ExpansionMode::PrimaryOnly);
  }
  SUBCASE("a spent debug chain reports budget exhaustion") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    g.record_outcome(a, ExecState::Buggy, std::nullopt);
    const NodeId b = grow(g, a, 2, OperatorKind::Debug);
    g.record_outcome(b, ExecState::Buggy, std::nullopt);
    const NodeId c = grow(g, b, 3, OperatorKind::Debug);
    g.record_outcome(c, ExecState::Buggy, std::nullopt);
    CHECK(g.node(c).debug_count == 2);
    const OperatorDecision d = choose_operator(g, c, in, rng);
    CHECK(d.budget_exhausted);
  }
  SUBCASE("a stagnant branch escalates to cross-branch fusion") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    g.record_outcome(a, ExecState::Evaluated, 0.5);
    in.branch_stagnant = true;
    const OperatorDecision d = choose_operator(g, a, in, rng);
    CHECK(d.choice.op == OperatorKind::Fusion);
    CHECK(d.choice.mode == ExpansionMode::CrossBranch);
  }
  SUBCASE("stagnation without cross-branch references falls back to improve") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    g.record_outcome(a, ExecState::Evaluated, 0.5);
    in.branch_stagnant = true;
    in.cross_enabled = false;
    const OperatorDecision d = choose_operator(g, a, in, rng);
    CHECK((d.choice.op == OperatorKind::ImproveNormal ||
           d.choice.op == OperatorKind::ImproveFE ||
           d.choice.op == OperatorKind::ImproveCS));
  }
  SUBCASE("improve expands intra-branch only when enabled") {
    const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
    g.record_outcome(a, ExecState::Evaluated, 0.5);
    OperatorDecision d = choose_operator(g, a, in, rng);
    CHECK(d.choice.mode == ExpansionMode::IntraBranch);
    in.intra_enabled = false;
    d = choose_operator(g, a, in, rng);
    CHECK(d.choice.mode == ExpansionMode::PrimaryOnly);
  }
}

TEST_CASE("improve variants are sampled by normalized weight") {
  SolutionGraph g;
  const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
  g.record_outcome(a, ExecState::Evaluated, 0.5);
  SchedulerInputs in;  // weights 0.5 / 0.3 / 0.2

  Rng rng(2024);
  int normal = 0, fe = 0, cs = 0;
  const int trials = 30000;
  for (int i = 0; i < trials; ++i) {
    switch (choose_operator(g, a, in, rng).choice.op) {
      case OperatorKind::ImproveNormal: ++normal; break;
      case OperatorKind::ImproveFE: ++fe; break;
      case OperatorKind::ImproveCS: ++cs; break;
      default: FAIL("unexpected operator");
    }
  }
  CHECK(static_cast<double>(normal) / trials == doctest::Approx(0.5).epsilon(0.035));
  CHECK(static_cast<double>(fe) / trials == doctest::Approx(0.3).epsilon(0.06));
  CHECK(static_cast<double>(cs) / trials == doctest::Approx(0.2).epsilon(0.09));

  // Unnormalized weights behave like their normalized counterparts.
  in.weights = {4.0, 0.0, 0.0};
  for (int i = 0; i < 50; ++i) {
    CHECK(choose_operator(g, a, in, rng).choice.op == OperatorKind::ImproveNormal);
  }
  in.weights = {0.0, 0.0, 2.5};
  for (int i = 0; i < 50; ++i) {
    CHECK(choose_operator(g, a, in, rng).choice.op == OperatorKind::ImproveCS);
  }
}

TEST_CASE("history references walk the branch nearest-first") {
  SolutionGraph g;
  // Branch 1: a -> b -> c -> d plus a sibling under c; branch 2 is noise.
  const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
  const NodeId other = grow(g, kRootId, 2, OperatorKind::Draft);
  const NodeId b = grow(g, a, 3);
  const NodeId c = grow(g, b, 4);
  const NodeId d = grow(g, c, 5);
  for (NodeId id : {a, other, b, c, d}) g.record_outcome(id, ExecState::Evaluated, 0.5);
  ReferenceCaps caps;

  SUBCASE("ancestors come nearest-first and the cap truncates") {
    caps.max_history_num = 2;
    const auto refs = build_reference_set(g, d, ExpansionMode::IntraBranch, caps,
                                          Direction::Maximize);
    CHECK(refs == std::vector<NodeId>{c, b});
  }
  SUBCASE("the full branch history excludes the anchor and other branches") {
    const auto refs = build_reference_set(g, d, ExpansionMode::IntraBranch, caps,
                                          Direction::Maximize);
    CHECK(refs == std::vector<NodeId>{c, b, a});
  }
  SUBCASE("ancestors outrank siblings at equal distance") {
    const NodeId sibling = grow_eval(g, c, 6, 0.7);
    // From d: c is 1 away; b and the sibling are both 2 away.
    const auto refs = build_reference_set(g, d, ExpansionMode::IntraBranch, caps,
                                          Direction::Maximize);
    CHECK(refs == std::vector<NodeId>{c, b, sibling, a});
  }
  SUBCASE("equal-distance non-ancestors prefer the newest") {
    const NodeId s1 = grow_eval(g, c, 6, 0.7);
    const NodeId s2 = grow_eval(g, c, 7, 0.8);
    const auto refs = build_reference_set(g, d, ExpansionMode::IntraBranch, caps,
                                          Direction::Maximize);
    CHECK(refs == std::vector<NodeId>{c, b, s2, s1, a});
  }
  SUBCASE("failures stay in history as evidence, drafts do not") {
    const NodeId buggy = grow(g, c, 6);
    g.record_outcome(buggy, ExecState::Buggy, std::nullopt);
    const NodeId drafted = grow(g, c, 7);
    (void)drafted;
    const auto refs = build_reference_set(g, d, ExpansionMode::IntraBranch, caps,
                                          Direction::Maximize);
    CHECK(refs == std::vector<NodeId>{c, b, buggy, a});
  }
}

TEST_CASE("cross references pick the best evaluated nodes of other branches") {
  SolutionGraph g;
  const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);   // anchor branch
  const NodeId b = grow(g, kRootId, 2, OperatorKind::Draft);
  const NodeId c = grow(g, kRootId, 3, OperatorKind::Draft);
  g.record_outcome(a, ExecState::Evaluated, 0.9);
  g.record_outcome(b, ExecState::Evaluated, 0.6);
  g.record_outcome(c, ExecState::Evaluated, 0.8);
  const NodeId b2 = grow_eval(g, b, 4, 0.8);       // ties with c on metric
  const NodeId buggy = grow(g, c, 5);
  g.record_outcome(buggy, ExecState::Buggy, std::nullopt);
  ReferenceCaps caps;

  const auto refs =
      build_reference_set(g, a, ExpansionMode::CrossBranch, caps, Direction::Maximize);
  // 0.8 tie between c (id 3) and b2 (id 4): equal debug counts, lower id first.
  CHECK(refs == std::vector<NodeId>{c, b2, b});

  caps.max_ref_num = 2;
  CHECK(build_reference_set(g, a, ExpansionMode::CrossBranch, caps,
                            Direction::Maximize) == std::vector<NodeId>{c, b2});

  // Minimize flips the metric order.
  caps.max_ref_num = 7;
  CHECK(build_reference_set(g, a, ExpansionMode::CrossBranch, caps,
                            Direction::Minimize) == std::vector<NodeId>{b, c, b2});

  // Fewer debug repairs win a metric tie.
  SolutionGraph h;
  const NodeId anchor = grow(h, kRootId, 1, OperatorKind::Draft);
  const NodeId x = grow(h, kRootId, 2, OperatorKind::Draft);
  h.record_outcome(anchor, ExecState::Evaluated, 0.1);
  h.record_outcome(x, ExecState::Buggy, std::nullopt);
  const NodeId fixed = grow_eval(h, x, 3, 0.5, OperatorKind::Debug);
  const NodeId y = grow(h, kRootId, 4, OperatorKind::Draft);
  h.record_outcome(y, ExecState::Evaluated, 0.5);
  CHECK(h.node(fixed).debug_count == 1);
  CHECK(build_reference_set(h, anchor, ExpansionMode::CrossBranch, caps,
                            Direction::Maximize) == std::vector<NodeId>{y, fixed});
}

TEST_CASE("aggregation references span branches and respect the cap") {
  SolutionGraph g;
  const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
  const NodeId b = grow(g, kRootId, 2, OperatorKind::Draft);
  g.record_outcome(a, ExecState::Evaluated, 0.90);
  g.record_outcome(b, ExecState::Evaluated, 0.10);
  const NodeId a2 = grow_eval(g, a, 3, 0.85);
  const NodeId a3 = grow_eval(g, a, 4, 0.80);
  const NodeId b2 = grow_eval(g, b, 5, 0.20);
  ReferenceCaps caps;
  const TaskSpec task = max_task();

  MemoryTiers memory;
  for (NodeId id : {a, a2, a3, b, b2}) update_memory(memory, g.node(id), task);

  SUBCASE("qualifying branches pool their tiers best-first") {
    const auto refs = build_reference_set(g, kRootId, ExpansionMode::MultiBranchAgg,
                                          caps, Direction::Maximize, &memory, 2);
    CHECK(refs == std::vector<NodeId>{a, a2, a3, b2, b});
  }
  SUBCASE("the cap keeps the best entries but never collapses to one branch") {
    caps.max_agg_num = 3;
    const auto refs = build_reference_set(g, kRootId, ExpansionMode::MultiBranchAgg,
                                          caps, Direction::Maximize, &memory, 2);
    CHECK(refs == std::vector<NodeId>{a, a2, b2});  // a3 swapped for branch b's best
  }
  SUBCASE("branches below the trajectory floor are excluded") {
    const auto refs = build_reference_set(g, kRootId, ExpansionMode::MultiBranchAgg,
                                          caps, Direction::Maximize, &memory, 3);
    // Branch b has two evaluations only; a single qualifying branch aborts.
    CHECK(refs.empty());
  }
  SUBCASE("aggregation without memory tiers is a usage error") {
    CHECK(code_of([&] {
            build_reference_set(g, kRootId, ExpansionMode::MultiBranchAgg, caps,
                                Direction::Maximize, nullptr, 2);
          }) == Errc::EmptyReferencePool);
  }
}

TEST_CASE("primary-only expansions carry no references") {
  SolutionGraph g;
  ReferenceCaps caps;
  CHECK(build_reference_set(g, kRootId, ExpansionMode::PrimaryOnly, caps,
                            Direction::Maximize)
            .empty());
  CHECK(ref_kind_for(ExpansionMode::IntraBranch) == RefKind::Hist);
  CHECK(ref_kind_for(ExpansionMode::CrossBranch) == RefKind::Cross);
  CHECK(ref_kind_for(ExpansionMode::MultiBranchAgg) == RefKind::Agg);
  CHECK(code_of([] { ref_kind_for(ExpansionMode::PrimaryOnly); }) ==
        Errc::EmptyReferencePool);
}

TEST_CASE("proposal requests snapshot the graph for the engine") {
  SolutionGraph g;
  const NodeId a = grow(g, kRootId, 1, OperatorKind::Draft);
  g.record_outcome(a, ExecState::Evaluated, 0.5);
  const NodeId b = grow(g, kRootId, 2, OperatorKind::Draft);
  g.record_outcome(b, ExecState::Buggy, std::nullopt);
  const NodeId c = grow_eval(g, a, 3, 0.7);

  OperatorChoice choice;
  choice.op = OperatorKind::Fusion;
  choice.mode = ExpansionMode::CrossBranch;
  choice.node = c;

  KnowledgeEntry e;
  e.entry_id = "k";
  const ProposalRequest req = build_proposal_request(
      g, choice, {a, b}, max_task(), {e}, 12345);

  CHECK(req.op == OperatorKind::Fusion);
  CHECK(req.mode == ExpansionMode::CrossBranch);
  CHECK(req.target.plan == g.node(c).payload.plan);
  CHECK(req.target_metric == 0.7);
  REQUIRE(req.references.size() == 2);
  CHECK(req.references[0].node == a);
  CHECK(req.references[0].metric == 0.5);
  CHECK(req.references[0].state == ExecState::Evaluated);
  CHECK(req.references[1].node == b);
  CHECK_FALSE(req.references[1].metric.has_value());
  CHECK(req.references[1].state == ExecState::Buggy);
  CHECK(req.task.task_id == "t");
  REQUIRE(req.kb_context.size() == 1);
  CHECK(req.kb_context[0].entry_id == "k");
  CHECK(req.seed == 12345);
}
