#include "reference_mcts.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcgs/errors.hpp"
#include "mcgs/orchestrator.hpp"
#include "mcgs/rng.hpp"
#include "mcgs/serde.hpp"
#include "mcgs/synthetic.hpp"

namespace refmcts {

using namespace mcgs;

namespace {

struct MemEntry {
  NodeId node;
  double metric;
  std::int64_t step;
  bool operator==(const MemEntry& o) const {
    return node == o.node && metric == o.metric && step == o.step;
  }
};

bool entry_precedes(Direction dir, const MemEntry& a, const MemEntry& b) {
  if (a.metric != b.metric) {
    return dir == Direction::Maximize ? a.metric > b.metric : a.metric < b.metric;
  }
  if (a.step != b.step) return a.step < b.step;
  return a.node < b.node;
}

class Driver {
 public:
  explicit Driver(const RunConfig& cfg)
      : cfg_(cfg),
        task_(cfg.task_file.empty() ? default_task() : TaskSpec{}),
        engine_(SyntheticParams{cfg.kb_init_ref_prob, cfg.bug_injection_prob}),
        env_(task_, cfg.seed),
        sched_(mix_seed(cfg.seed, 0x9e3779b97f4a7c15ULL)) {
    if (cfg.mode != "tree" || cfg.max_parallel_workers != 1 ||
        !cfg.kb_file.empty() || !cfg.task_file.empty()) {
      throw std::logic_error(
          "the reference driver covers tree mode, one worker, no kb");
    }
    SolutionNode root;
    root.node_id = kRootId;
    root.branch_id = kRootId;
    root.state = ExecState::Root;
    nodes_.push_back(root);
    children_.emplace_back();
  }

  std::vector<EventRecord> run() {
    std::int64_t dispatched = 0;
    for (std::int64_t sim = 1; sim <= cfg_.max_steps; ++sim) {
      if (!simulate(sim)) break;
      ++dispatched;
      ++steps_completed_;
    }
    finalize(dispatched);
    return std::move(log_);
  }

 private:
  // ---- event log ----------------------------------------------------------
  void append(std::int64_t step, EventKind kind, Json payload) {
    log_.push_back({next_seq_++, step, kind, std::move(payload)});
  }

  // ---- selection (independent UCT descent) --------------------------------
  double score_of(const SolutionNode& child, std::int64_t parent_visits) const {
    const double n = static_cast<double>(child.stats.visits) + cfg_.epsilon;
    return child.stats.value / n +
           cfg_.exploration_constant *
               std::sqrt(std::log(static_cast<double>(parent_visits) + 1.0) / n);
  }

  bool expandable(NodeId id) const {
    const SolutionNode& n = nodes_[id];
    switch (n.state) {
      case ExecState::Root:
        return root_draft_children() < cfg_.max_draft_num;
      case ExecState::Buggy:
        return children_[id].empty();
      case ExecState::Evaluated:
        return static_cast<int>(children_[id].size()) < cfg_.max_children_per_node;
      case ExecState::Drafted:
      case ExecState::Failed:
        return false;
    }
    return false;
  }

  int root_draft_children() const {
    int count = 0;
    for (NodeId c : children_[kRootId]) {
      if (nodes_[c].operator_used == OperatorKind::Draft) ++count;
    }
    return count;
  }

  NodeId descend(NodeId v) const {
    if (expandable(v)) return v;
    std::vector<std::pair<double, NodeId>> ranked;
    for (NodeId c : children_[v]) {
      ranked.emplace_back(score_of(nodes_[c], nodes_[v].stats.visits), c);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (const auto& [score, c] : ranked) {
      const NodeId found = descend(c);
      if (found != kNoNode) return found;
    }
    return kNoNode;
  }

  // ---- one simulation ------------------------------------------------------
  bool simulate(std::int64_t sim) {
    OperatorKind op = OperatorKind::Draft;
    NodeId target = kNoNode;
    for (;;) {
      target = descend(kRootId);
      if (target == kNoNode) return false;
      const SolutionNode& t = nodes_[target];
      if (target == kRootId) {
        op = OperatorKind::Draft;  // capacity guaranteed by expandable()
        break;
      }
      if (t.state == ExecState::Buggy) {
        if (t.debug_count < cfg_.max_debug_num) {
          op = OperatorKind::Debug;
          break;
        }
        append(sim, EventKind::OperatorChosen,
               Json{{"node", target},
                    {"op", to_string(OperatorKind::Debug)},
                    {"mode", to_string(ExpansionMode::PrimaryOnly)},
                    {"fallback", false},
                    {"outcome", "budget_exhausted"}});
        nodes_[target].state = ExecState::Failed;
        continue;  // reselect without consuming the step
      }
      const double sum = cfg_.improve_normal_weight + cfg_.improve_fe_weight +
                         cfg_.improve_cs_weight;
      const double u = sched_.uniform01() * (sum > 0.0 ? sum : 1.0);
      if (u < cfg_.improve_normal_weight) {
        op = OperatorKind::ImproveNormal;
      } else if (u < cfg_.improve_normal_weight + cfg_.improve_fe_weight) {
        op = OperatorKind::ImproveFE;
      } else {
        op = OperatorKind::ImproveCS;
      }
      break;
    }

    ProposalRequest req;
    req.op = op;
    req.mode = ExpansionMode::PrimaryOnly;
    req.target = nodes_[target].payload;
    req.target_metric = nodes_[target].metric;
    req.task = task_;
    req.seed = mix_seed(cfg_.seed, static_cast<std::uint64_t>(sim));

    // Inline execution of the expansion job.
    SolutionPayload payload;
    ReviewVerdict verdict;
    std::optional<EvalOutcome> outcome;
    std::string stage = "propose";
    try {
      payload = engine_.propose(req);
      stage = "review";
      verdict = engine_.review(payload, task_);
      if (verdict.decision != ReviewDecision::Reject) {
        stage = "evaluate";
        outcome = env_.evaluate(payload, task_);
      }
    } catch (const Error& e) {
      append(sim, EventKind::OperatorChosen,
             Json{{"node", target},
                  {"op", to_string(op)},
                  {"mode", to_string(ExpansionMode::PrimaryOnly)},
                  {"fallback", false},
                  {"outcome", "engine_failure"}});
      append(sim, EventKind::EngineFailure,
             Json{{"stage", stage}, {"message", e.what()}, {"node", Json()}});
      return true;
    }
    commit(sim, target, op, payload, verdict, outcome);
    return true;
  }

  void commit(std::int64_t sim, NodeId target, OperatorKind op,
              const SolutionPayload& payload, const ReviewVerdict& verdict,
              const std::optional<EvalOutcome>& outcome) {
    append(sim, EventKind::OperatorChosen,
           Json{{"node", target},
                {"op", to_string(op)},
                {"mode", to_string(ExpansionMode::PrimaryOnly)},
                {"fallback", false},
                {"outcome", "expanded"}});

    SolutionNode child;
    child.node_id = static_cast<NodeId>(nodes_.size());
    child.parent_id = target;
    child.branch_id = target == kRootId ? child.node_id : nodes_[target].branch_id;
    child.depth = nodes_[target].depth + 1;
    child.payload = payload;
    child.payload.provenance.clear();
    child.state = ExecState::Drafted;
    child.created_step = sim;
    child.debug_count =
        op == OperatorKind::Debug ? nodes_[target].debug_count + 1 : 0;
    child.operator_used = op;
    nodes_.push_back(child);
    children_.emplace_back();
    children_[target].push_back(child.node_id);
    append(sim, EventKind::NodeCreated, Json{{"node", node_to_json(child)}});

    const char* decision = verdict.decision == ReviewDecision::Pass     ? "pass"
                           : verdict.decision == ReviewDecision::Warn   ? "warn"
                                                                        : "reject";
    append(sim, EventKind::ReviewVerdict,
           Json{{"node", child.node_id},
                {"decision", decision},
                {"issues", verdict.issues}});

    SolutionNode& stored = nodes_[child.node_id];
    const char* status = "failed";
    std::optional<double> metric;
    std::string sim_log;
    if (verdict.decision == ReviewDecision::Reject || !outcome) {
      stored.state = ExecState::Failed;
      sim_log = "rejected by review";
    } else {
      if (verdict.decision == ReviewDecision::Warn) stored.review_warned = true;
      switch (outcome->status) {
        case EvalStatus::Evaluated:
          stored.state = ExecState::Evaluated;
          stored.metric = outcome->metric;
          status = "evaluated";
          metric = outcome->metric;
          break;
        case EvalStatus::Buggy:
          stored.state = ExecState::Buggy;
          status = "buggy";
          break;
        case EvalStatus::Failed:
          stored.state = ExecState::Failed;
          break;
      }
      sim_log = outcome->log;
    }

    // Independent reward computation.
    const SolutionNode& parent = nodes_[target];
    double improvement = 0.0, debug_bonus = 0.0, penalty = 0.0;
    if (stored.state == ExecState::Failed || stored.state == ExecState::Buggy) {
      penalty = -1.0;
    } else {
      if (parent.state == ExecState::Buggy || parent.state == ExecState::Failed) {
        debug_bonus = 0.5;
      }
      if (parent.metric) {
        const double sign = task_.direction == Direction::Maximize ? 1.0 : -1.0;
        const double base = std::max(std::abs(*parent.metric), 1e-8);
        improvement = std::clamp(sign * (*stored.metric - *parent.metric) / base,
                                 -1.0, 1.0);
      }
    }
    if (stored.review_warned) penalty += -0.25;
    const double value =
        std::clamp(improvement + debug_bonus + penalty, -1.0, 1.0);

    append(sim, EventKind::Simulated,
           Json{{"node", child.node_id},
                {"status", status},
                {"metric", metric ? Json(*metric) : Json()},
                {"log", sim_log},
                {"reward", Json{{"value", value},
                                {"improvement", improvement},
                                {"debug_bonus", debug_bonus},
                                {"penalty", penalty}}}});

    std::vector<NodeId> path;
    for (NodeId cur = child.node_id;;) {
      path.push_back(cur);
      nodes_[cur].stats.visits += 1;
      nodes_[cur].stats.value += value;
      if (!nodes_[cur].parent_id) break;
      cur = *nodes_[cur].parent_id;
    }
    append(sim, EventKind::Backprop,
           Json{{"leaf", child.node_id}, {"path", path}, {"value", value}});

    if (stored.state == ExecState::Evaluated) {
      evaluated_.push_back({child.node_id, *stored.metric, sim});
      if (refresh_memory()) {
        append(sim, EventKind::MemoryUpdate,
               Json{{"node", child.node_id},
                    {"branch", stored.branch_id},
                    {"metric", *stored.metric}});
      }
    }
  }

  // ---- memory as brute-force top-k ----------------------------------------
  std::vector<MemEntry> top_k(const std::vector<MemEntry>& pool, int k) const {
    std::vector<MemEntry> sorted = pool;
    std::sort(sorted.begin(), sorted.end(),
              [this](const MemEntry& a, const MemEntry& b) {
                return entry_precedes(task_.direction, a, b);
              });
    if (static_cast<int>(sorted.size()) > k) sorted.resize(k);
    return sorted;
  }

  bool refresh_memory() {
    std::map<NodeId, std::vector<MemEntry>> pools;
    for (const MemEntry& e : evaluated_) {
      pools[nodes_[e.node].branch_id].push_back(e);
    }
    std::map<NodeId, std::vector<MemEntry>> branch_tiers;
    for (const auto& [branch, pool] : pools) {
      branch_tiers[branch] = top_k(pool, cfg_.branch_top_k);
    }
    std::vector<MemEntry> global = top_k(evaluated_, cfg_.global_top_k);
    const bool changed = branch_tiers != branch_tiers_ || global != global_;
    branch_tiers_ = std::move(branch_tiers);
    global_ = std::move(global);
    return changed;
  }

  // ---- run finalization ----------------------------------------------------
  void finalize(std::int64_t dispatched) {
    if (cfg_.ensemble_num >= 2 && global_.size() >= 2) {
      const std::size_t k = std::min<std::size_t>(
          static_cast<std::size_t>(cfg_.ensemble_num), global_.size());
      std::vector<ReferencePayload> members;
      for (std::size_t i = 0; i < k; ++i) {
        const SolutionNode& n = nodes_[global_[i].node];
        members.push_back({n.node_id, n.payload, n.metric, n.state});
      }
      const std::int64_t sim = dispatched + 1;
      try {
        const SolutionPayload payload = env_.ensemble_combine(members, task_);
        const ReviewVerdict verdict = engine_.review(payload, task_);
        std::optional<EvalOutcome> outcome;
        if (verdict.decision != ReviewDecision::Reject) {
          outcome = env_.evaluate(payload, task_);
        }
        ensemble_node_ = static_cast<NodeId>(nodes_.size());
        commit(sim, kRootId, OperatorKind::Ensemble, payload, verdict, outcome);
      } catch (const Error& e) {
        ensemble_node_ = kNoNode;
        append(sim, EventKind::EngineFailure,
               Json{{"stage", "ensemble"}, {"message", e.what()}, {"node", Json()}});
      }
    }
    NodeId best = kNoNode;
    std::optional<double> best_metric;
    if (!global_.empty()) {
      best = global_.front().node;
      best_metric = global_.front().metric;
    }
    append(0, EventKind::Finalized,
           Json{{"best_node", best == kNoNode ? Json() : Json(best)},
                {"best_metric", best_metric ? Json(*best_metric) : Json()},
                {"direction", to_string(task_.direction)},
                {"task_id", task_.task_id},
                {"metric_name", task_.metric_name},
                {"steps_completed", steps_completed_},
                {"node_count", static_cast<std::int64_t>(nodes_.size())},
                {"ensemble_node",
                 ensemble_node_ == kNoNode ? Json() : Json(ensemble_node_)}});
  }

  RunConfig cfg_;
  TaskSpec task_;
  SyntheticEngine engine_;
  SyntheticEnvironment env_;
  Rng sched_;
  std::vector<SolutionNode> nodes_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<MemEntry> evaluated_;
  std::map<NodeId, std::vector<MemEntry>> branch_tiers_;
  std::vector<MemEntry> global_;
  std::vector<EventRecord> log_;
  std::int64_t next_seq_ = 1;
  int steps_completed_ = 0;
  NodeId ensemble_node_ = kNoNode;
};

}  // namespace

std::vector<EventRecord> run_reference(const RunConfig& cfg) {
  return Driver(cfg).run();
}

std::string to_jsonl(const std::vector<EventRecord>& events) {
  std::string out;
  for (const EventRecord& e : events) out += event_to_json(e).dump() + "\n";
  return out;
}

}  // namespace refmcts
