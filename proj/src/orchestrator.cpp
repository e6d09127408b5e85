#include "mcgs/orchestrator.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "mcgs/errors.hpp"
#include "mcgs/llm_engine.hpp"
#include "mcgs/report.hpp"

namespace mcgs {

namespace {

constexpr std::uint64_t kSchedulerStream = 0x9e3779b97f4a7c15ULL;

const char* decision_name(ReviewDecision d) {
  switch (d) {
    case ReviewDecision::Pass: return "pass";
    case ReviewDecision::Warn: return "warn";
    case ReviewDecision::Reject: return "reject";
  }
  return "pass";
}

}  // namespace

TaskSpec default_task() {
  TaskSpec t;
  t.task_id = "tabular-default";
  t.description =
      "tabular classification with feature engineering, model selection and "
      "ensembling";
  t.metric_name = "score";
  t.direction = Direction::Maximize;
  t.eval_noise_sigma = 0.05;
  return t;
}

struct Job {
  std::int64_t sim_index = 0;
  ProposalRequest req;
};

struct JobResult {
  std::int64_t sim_index = 0;
  bool ok = false;
  std::string stage;    // phase that failed, when !ok
  std::string message;  // failure description, when !ok
  SolutionPayload payload;
  ReviewVerdict verdict;
  EvalOutcome outcome;
  bool has_outcome = false;  // false when review rejected (or failed earlier)
};

namespace {

JobResult execute_job(Job&& job, ProposalEngine* engine, Environment* env) {
  JobResult r;
  r.sim_index = job.sim_index;
  try {
    r.stage = "propose";
    r.payload = engine->propose(job.req);
    r.stage = "review";
    r.verdict = engine->review(r.payload, job.req.task);
    if (r.verdict.decision != ReviewDecision::Reject) {
      r.stage = "evaluate";
      r.outcome = env->evaluate(r.payload, job.req.task);
      r.has_outcome = true;
    }
    r.ok = true;
    r.stage.clear();
  } catch (const std::exception& e) {
    r.ok = false;
    r.message = e.what();
  }
  return r;
}

}  // namespace

// Runs expansion jobs off the coordinator. The inline variant keeps
// single-worker runs free of threading (and bitwise reproducible); the pool
// variant fans out to max_parallel_workers threads.
class JobRunner {
 public:
  virtual ~JobRunner() = default;
  virtual void submit(Job job) = 0;
  virtual JobResult wait_any() = 0;
};

namespace {

class InlineRunner : public JobRunner {
 public:
  InlineRunner(ProposalEngine* engine, Environment* env)
      : engine_(engine), env_(env) {}

  void submit(Job job) override {
    done_.push_back(execute_job(std::move(job), engine_, env_));
  }

  JobResult wait_any() override {
    JobResult r = std::move(done_.front());
    done_.pop_front();
    return r;
  }

 private:
  ProposalEngine* engine_;
  Environment* env_;
  std::deque<JobResult> done_;
};

class PoolRunner : public JobRunner {
 public:
  PoolRunner(int workers, ProposalEngine* engine, Environment* env)
      : engine_(engine), env_(env) {
    for (int i = 0; i < workers; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~PoolRunner() override {
    {
      std::lock_guard<std::mutex> lock(m_);
      stop_ = true;
    }
    cv_jobs_.notify_all();
    for (std::thread& t : threads_) t.join();
  }

  void submit(Job job) override {
    {
      std::lock_guard<std::mutex> lock(m_);
      jobs_.push_back(std::move(job));
    }
    cv_jobs_.notify_one();
  }

  JobResult wait_any() override {
    std::unique_lock<std::mutex> lock(m_);
    cv_done_.wait(lock, [this] { return !done_.empty(); });
    JobResult r = std::move(done_.front());
    done_.pop_front();
    return r;
  }

 private:
  void worker_loop() {
    for (;;) {
      Job job;
      {
        std::unique_lock<std::mutex> lock(m_);
        cv_jobs_.wait(lock, [this] { return stop_ || !jobs_.empty(); });
        if (jobs_.empty()) return;  // stop_ set and queue drained
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      JobResult r = execute_job(std::move(job), engine_, env_);
      {
        std::lock_guard<std::mutex> lock(m_);
        done_.push_back(std::move(r));
      }
      cv_done_.notify_one();
    }
  }

  ProposalEngine* engine_;
  Environment* env_;
  std::mutex m_;
  std::condition_variable cv_jobs_;
  std::condition_variable cv_done_;
  std::deque<Job> jobs_;
  std::deque<JobResult> done_;
  bool stop_ = false;
  std::vector<std::thread> threads_;
};

TaskSpec load_task(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::TaskLoadError, "cannot open task file '" + path + "'");
  Json j = Json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    raise(Errc::TaskLoadError, "task file '" + path + "' is not valid JSON");
  }
  return task_from_json(j);
}

}  // namespace

Orchestrator::Orchestrator(RunConfig cfg)
    : cfg_(std::move(cfg)),
      memory_{cfg_.branch_top_k, cfg_.global_top_k},
      scheduler_rng_(mix_seed(cfg_.seed, kSchedulerStream)) {
  validate_config(cfg_);
  flags_ = reference_mode_flags(cfg_);
  task_ = cfg_.task_file.empty() ? default_task() : load_task(cfg_.task_file);

  const SyntheticParams params{cfg_.kb_init_ref_prob, cfg_.bug_injection_prob};
  if (cfg_.engine == "synthetic") {
    engine_ = std::make_unique<SyntheticEngine>(params);
  } else {
    LlmOptions opt;
    opt.base_url = cfg_.llm_base_url;
    opt.model = cfg_.llm_model;
    opt.token_env = cfg_.llm_token_env;
    opt.max_retries = cfg_.llm_max_retries;
    opt.timeout_seconds = cfg_.llm_timeout_seconds;
    opt.temperature = cfg_.temperature;
    engine_ = std::make_unique<LlmEngine>(opt);
  }
  auto env = std::make_unique<SyntheticEnvironment>(task_, cfg_.seed);
  synthetic_env_ = env.get();
  environment_ = std::move(env);

  if (!cfg_.kb_file.empty()) {
    kb_ = load_knowledge_base(cfg_.kb_file);
    retrieved_ = retrieve(kb_, task_);
  }
}

Orchestrator::~Orchestrator() = default;

void Orchestrator::set_engine(std::unique_ptr<ProposalEngine> engine) {
  engine_ = std::move(engine);
}

void Orchestrator::set_environment(std::unique_ptr<Environment> environment) {
  environment_ = std::move(environment);
  synthetic_env_ = dynamic_cast<SyntheticEnvironment*>(environment_.get());
}

const SyntheticTaskTables* Orchestrator::task_tables() const {
  return synthetic_env_ ? &synthetic_env_->tables() : nullptr;
}

std::vector<KnowledgeEntry> Orchestrator::kb_context_for(OperatorKind op) {
  if (retrieved_.empty()) return {};
  const KbPhase phase = op == OperatorKind::Draft ? KbPhase::Init : KbPhase::Search;
  return injection_context(retrieved_, phase, op, cfg_.kb_init_ref_prob,
                           scheduler_rng_);
}

bool Orchestrator::dispatch_one(std::int64_t sim_index) {
  const OperatorBudgets budgets{cfg_.max_draft_num,      cfg_.max_debug_num,
                                cfg_.max_children_per_node, cfg_.stagnation_window,
                                cfg_.agg_min_trajectories,  cfg_.agg_cooldown_steps};
  const ReferenceCaps caps{cfg_.max_history_num, cfg_.max_ref_num, cfg_.max_agg_num};
  const SearchPolicyConfig policy{cfg_.exploration_constant, cfg_.epsilon};

  for (;;) {
    const bool agg_ready =
        flags_.agg && aggregation_ready(graph_, budgets, sim_index, last_agg_step_);
    const auto pred = [&](NodeId id) {
      return is_expandable(graph_, id, budgets, inflight_, agg_ready);
    };
    NodeId target = kNoNode;
    try {
      target = select(graph_, policy, pred, &overlay_);
    } catch (const Error& e) {
      if (e.code() == Errc::NoExpandableNode) return false;
      throw;
    }

    SchedulerInputs in;
    in.budgets = budgets;
    in.weights = {cfg_.improve_normal_weight, cfg_.improve_fe_weight,
                  cfg_.improve_cs_weight};
    in.intra_enabled = flags_.intra;
    in.cross_enabled = flags_.cross;
    in.agg_enabled = flags_.agg;
    in.aggregation_ready = agg_ready;
    in.inflight = inflight_;
    if (target != kRootId) {
      const auto it = branch_history_.find(graph_.node(target).branch_id);
      in.branch_stagnant =
          it != branch_history_.end() &&
          is_stagnant(it->second, cfg_.stagnation_window, task_.direction);
    }

    const OperatorDecision decision =
        choose_operator(graph_, target, in, scheduler_rng_);
    if (decision.budget_exhausted) {
      log_.append(sim_index, EventKind::OperatorChosen,
                  Json{{"node", target},
                       {"op", to_string(OperatorKind::Debug)},
                       {"mode", to_string(ExpansionMode::PrimaryOnly)},
                       {"fallback", false},
                       {"outcome", "budget_exhausted"}});
      graph_.mark_failed(target);
      continue;  // reselect; the step index is not consumed
    }

    Pending p;
    p.sim_index = sim_index;
    p.choice = decision.choice;
    if (p.choice.mode != ExpansionMode::PrimaryOnly) {
      p.refs = build_reference_set(graph_, target, p.choice.mode, caps,
                                   task_.direction, &memory_,
                                   cfg_.agg_min_trajectories);
      if (p.refs.empty()) {
        p.choice.mode = ExpansionMode::PrimaryOnly;
        p.fallback = true;
      }
    }
    if (p.choice.mode == ExpansionMode::MultiBranchAgg) last_agg_step_ = sim_index;

    ProposalRequest req = build_proposal_request(
        graph_, p.choice, p.refs, task_, kb_context_for(p.choice.op),
        mix_seed(cfg_.seed, static_cast<std::uint64_t>(sim_index)));

    p.overlay_path = graph_.primary_path_to_root(target);
    overlay_.add_path(p.overlay_path);
    inflight_.children[target] += 1;
    if (target == kRootId && p.choice.op == OperatorKind::Draft) {
      inflight_.root_drafts += 1;
    }
    pending_.emplace(sim_index, std::move(p));
    runner_->submit(Job{sim_index, std::move(req)});
    return true;
  }
}

NodeId Orchestrator::commit_success(const Pending& ctx, const SolutionPayload& payload,
                                    const ReviewVerdict& verdict,
                                    const std::optional<EvalOutcome>& outcome) {
  const std::int64_t sim = ctx.sim_index;
  log_.append(sim, EventKind::OperatorChosen,
              Json{{"node", ctx.choice.node},
                   {"op", to_string(ctx.choice.op)},
                   {"mode", to_string(ctx.choice.mode)},
                   {"fallback", ctx.fallback},
                   {"outcome", "expanded"}});

  graph_.set_current_step(sim);
  const NodeId child = graph_.add_child(ctx.choice.node, payload, ctx.choice.op);
  const Json node_json = node_to_json(graph_.node(child));
  if (!ctx.refs.empty()) {
    graph_.add_reference_edges(ctx.refs, child, ref_kind_for(ctx.choice.mode));
  }
  log_.append(sim, EventKind::NodeCreated, Json{{"node", node_json}});
  if (!ctx.refs.empty()) {
    log_.append(sim, EventKind::ReferenceEdges,
                Json{{"target", child},
                     {"kind", to_string(ref_kind_for(ctx.choice.mode))},
                     {"sources", ctx.refs}});
  }
  if (ctx.choice.mode == ExpansionMode::MultiBranchAgg) {
    std::set<NodeId> branches;
    for (NodeId id : ctx.refs) branches.insert(graph_.node(id).branch_id);
    log_.append(sim, EventKind::AggregationSpawned,
                Json{{"node", child},
                     {"sources", ctx.refs},
                     {"branches", std::vector<NodeId>(branches.begin(),
                                                      branches.end())}});
  }

  log_.append(sim, EventKind::ReviewVerdict,
              Json{{"node", child},
                   {"decision", decision_name(verdict.decision)},
                   {"issues", verdict.issues}});

  const char* status = "failed";
  std::optional<double> metric;
  std::string sim_log;
  if (verdict.decision == ReviewDecision::Reject || !outcome) {
    graph_.record_outcome(child, ExecState::Failed, std::nullopt);
    sim_log = "rejected by review";
  } else {
    if (verdict.decision == ReviewDecision::Warn) graph_.mark_review_warned(child);
    switch (outcome->status) {
      case EvalStatus::Evaluated:
        graph_.record_outcome(child, ExecState::Evaluated, outcome->metric);
        status = "evaluated";
        metric = outcome->metric;
        break;
      case EvalStatus::Buggy:
        graph_.record_outcome(child, ExecState::Buggy, std::nullopt);
        status = "buggy";
        break;
      case EvalStatus::Failed:
        graph_.record_outcome(child, ExecState::Failed, std::nullopt);
        break;
    }
    sim_log = outcome->log;
  }

  const RewardRecord reward =
      compute_reward(graph_.node(ctx.choice.node), graph_.node(child), task_);
  log_.append(sim, EventKind::Simulated,
              Json{{"node", child},
                   {"status", status},
                   {"metric", metric ? Json(*metric) : Json()},
                   {"log", sim_log},
                   {"reward", Json{{"value", reward.value},
                                   {"improvement", reward.components.improvement},
                                   {"debug_bonus", reward.components.debug_bonus},
                                   {"penalty", reward.components.penalty}}}});

  const std::vector<NodeId> path = backpropagate(graph_, child, reward);
  log_.append(sim, EventKind::Backprop,
              Json{{"leaf", child}, {"path", path}, {"value", reward.value}});
  if (observer_) observer_->after_backprop(graph_, child, path, reward.value);

  const SolutionNode& node = graph_.node(child);
  if (node.state == ExecState::Evaluated) {
    if (update_memory(memory_, node, task_)) {
      log_.append(sim, EventKind::MemoryUpdate,
                  Json{{"node", child},
                       {"branch", node.branch_id},
                       {"metric", *node.metric}});
    }
    branch_history_[node.branch_id].push_back(*node.metric);
  }
  if (observer_) observer_->after_step(graph_, sim);
  return child;
}

void Orchestrator::apply_result(const Pending& ctx, JobResult&& result) {
  overlay_.remove_path(ctx.overlay_path);
  auto it = inflight_.children.find(ctx.choice.node);
  if (it != inflight_.children.end() && --it->second <= 0) {
    inflight_.children.erase(it);
  }
  if (ctx.choice.node == kRootId && ctx.choice.op == OperatorKind::Draft) {
    inflight_.root_drafts -= 1;
  }

  if (!result.ok) {
    log_.append(ctx.sim_index, EventKind::OperatorChosen,
                Json{{"node", ctx.choice.node},
                     {"op", to_string(ctx.choice.op)},
                     {"mode", to_string(ctx.choice.mode)},
                     {"fallback", ctx.fallback},
                     {"outcome", "engine_failure"}});
    log_.append(ctx.sim_index, EventKind::EngineFailure,
                Json{{"stage", result.stage},
                     {"message", result.message},
                     {"node", Json()}});
    return;
  }

  std::optional<EvalOutcome> outcome;
  if (result.has_outcome) outcome = std::move(result.outcome);
  commit_success(ctx, result.payload, result.verdict, outcome);
}

void Orchestrator::finalize_run() {
  if (cfg_.ensemble_num >= 2 && memory_.global.size() >= 2) {
    const std::size_t k = std::min<std::size_t>(
        static_cast<std::size_t>(cfg_.ensemble_num), memory_.global.size());
    std::vector<ReferencePayload> members;
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < k; ++i) {
      const SolutionNode& n = graph_.node(memory_.global[i].node);
      members.push_back({n.node_id, n.payload, n.metric, n.state});
      ids.push_back(n.node_id);
    }
    const std::int64_t sim = sims_dispatched_ + 1;
    try {
      const SolutionPayload payload = environment_->ensemble_combine(members, task_);
      const ReviewVerdict verdict = engine_->review(payload, task_);
      std::optional<EvalOutcome> outcome;
      if (verdict.decision != ReviewDecision::Reject) {
        outcome = environment_->evaluate(payload, task_);
      }
      Pending ctx;
      ctx.sim_index = sim;
      ctx.choice.op = OperatorKind::Ensemble;
      ctx.choice.node = kRootId;
      // Tree mode keeps the member provenance out of the edge set.
      if (cfg_.mode == "graph") {
        ctx.choice.mode = ExpansionMode::MultiBranchAgg;
        ctx.refs = ids;
      } else {
        ctx.choice.mode = ExpansionMode::PrimaryOnly;
      }
      ensemble_node_ = commit_success(ctx, payload, verdict, outcome);
    } catch (const Error& e) {
      log_.append(sim, EventKind::EngineFailure,
                  Json{{"stage", "ensemble"}, {"message", e.what()}, {"node", Json()}});
    }
  }

  NodeId best = kNoNode;
  std::optional<double> best_metric;
  if (!memory_.global.empty()) {
    best = memory_.global.front().node;
    best_metric = memory_.global.front().metric;
  }
  graph_.finalize();
  log_.append(0, EventKind::Finalized,
              Json{{"best_node", best == kNoNode ? Json() : Json(best)},
                   {"best_metric", best_metric ? Json(*best_metric) : Json()},
                   {"direction", to_string(task_.direction)},
                   {"task_id", task_.task_id},
                   {"metric_name", task_.metric_name},
                   {"steps_completed", steps_completed_},
                   {"node_count", static_cast<std::int64_t>(graph_.size())},
                   {"ensemble_node",
                    ensemble_node_ == kNoNode ? Json() : Json(ensemble_node_)}});
}

void Orchestrator::write_outputs() {
  log_.flush();
  if (cfg_.output_dir.empty()) return;
  const std::filesystem::path dir(cfg_.output_dir);
  write_text_file((dir / "graph.json").string(), graph_.to_json().dump(2) + "\n");
  write_text_file((dir / "report.csv").string(), render_report_csv(log_.records()));
  write_text_file((dir / "summary.json").string(),
                  build_summary(log_.records()).dump(2) + "\n");
  if (synthetic_env_) {
    write_text_file((dir / "task_tables.json").string(),
                    synthetic_env_->tables().to_json().dump(2) + "\n");
  }
}

RunResult Orchestrator::run() {
  if (graph_.finalized()) raise(Errc::GraphFinalized, "run() may only be called once");
  if (!cfg_.output_dir.empty()) {
    std::filesystem::create_directories(cfg_.output_dir);
    log_.open_sink((std::filesystem::path(cfg_.output_dir) / "events.jsonl").string());
  }
  if (cfg_.max_parallel_workers == 1) {
    runner_ = std::make_unique<InlineRunner>(engine_.get(), environment_.get());
  } else {
    runner_ = std::make_unique<PoolRunner>(cfg_.max_parallel_workers, engine_.get(),
                                           environment_.get());
  }

  const double budget =
      cfg_.time_budget > 0.0 ? cfg_.time_budget : task_.time_budget_seconds;
  const auto started = std::chrono::steady_clock::now();
  const auto expired = [&] {
    if (budget <= 0.0) return false;
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - started;
    return elapsed.count() >= budget;
  };

  std::int64_t next = 1;
  int inflight_count = 0;
  bool stop_dispatch = false;
  while (true) {
    while (!stop_dispatch && inflight_count < cfg_.max_parallel_workers &&
           next <= cfg_.max_steps) {
      if (expired()) {
        stop_dispatch = true;
        break;
      }
      if (!dispatch_one(next)) {
        stop_dispatch = true;
        break;
      }
      ++sims_dispatched_;
      ++next;
      ++inflight_count;
    }
    if (inflight_count == 0) break;
    JobResult result = runner_->wait_any();
    const auto it = pending_.find(result.sim_index);
    apply_result(it->second, std::move(result));
    pending_.erase(it);
    --inflight_count;
    ++steps_completed_;
  }

  finalize_run();
  write_outputs();
  runner_.reset();

  RunResult out;
  if (!memory_.global.empty()) {
    out.best_node = memory_.global.front().node;
    out.best_metric = memory_.global.front().metric;
  }
  out.steps_completed = steps_completed_;
  out.node_count = static_cast<std::int64_t>(graph_.size());
  out.ensemble_node = ensemble_node_;
  out.output_dir = cfg_.output_dir;
  return out;
}

SolutionGraph replay_events(const std::vector<EventRecord>& events) {
  SolutionGraph g;
  for (const EventRecord& e : events) {
    switch (e.kind) {
      case EventKind::OperatorChosen:
        if (get_string(e.payload, "outcome") == "budget_exhausted") {
          g.mark_failed(get_int(e.payload, "node"));
        }
        break;
      case EventKind::NodeCreated: {
        SolutionNode n = node_from_json(require_field(e.payload, "node"));
        const std::optional<NodeId> parent = n.parent_id;
        const NodeId id = n.node_id;
        g.restore_node(std::move(n));
        if (parent) {
          g.restore_edge(EdgeRecord{*parent, id, EdgeKind::Primary, std::nullopt});
        }
        break;
      }
      case EventKind::ReferenceEdges: {
        const Json& src = require_field(e.payload, "sources");
        g.add_reference_edges(src.get<std::vector<NodeId>>(),
                              get_int(e.payload, "target"),
                              parse_ref_kind(get_string(e.payload, "kind")));
        break;
      }
      case EventKind::ReviewVerdict:
        if (get_string(e.payload, "decision") == "warn") {
          g.mark_review_warned(get_int(e.payload, "node"));
        }
        break;
      case EventKind::Simulated: {
        const NodeId node = get_int(e.payload, "node");
        const std::string status = get_string(e.payload, "status");
        if (status == "evaluated") {
          g.record_outcome(node, ExecState::Evaluated,
                           require_field(e.payload, "metric").get<double>());
        } else if (status == "buggy") {
          g.record_outcome(node, ExecState::Buggy, std::nullopt);
        } else {
          g.record_outcome(node, ExecState::Failed, std::nullopt);
        }
        break;
      }
      case EventKind::Backprop: {
        const double value = get_double(e.payload, "value");
        for (NodeId id :
             require_field(e.payload, "path").get<std::vector<NodeId>>()) {
          g.add_visit(id, value);
        }
        break;
      }
      case EventKind::Finalized:
        g.finalize();
        break;
      case EventKind::AggregationSpawned:
      case EventKind::MemoryUpdate:
      case EventKind::EngineFailure:
        break;
    }
  }
  return g;
}

}  // namespace mcgs
