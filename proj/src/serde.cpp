#include "mcgs/serde.hpp"

#include "mcgs/errors.hpp"

namespace mcgs {

const char* to_string(ExecState v) {
  switch (v) {
    case ExecState::Root: return "root";
    case ExecState::Drafted: return "drafted";
    case ExecState::Buggy: return "buggy";
    case ExecState::Evaluated: return "evaluated";
    case ExecState::Failed: return "failed";
  }
  return "?";
}

const char* to_string(OperatorKind v) {
  switch (v) {
    case OperatorKind::Draft: return "draft";
    case OperatorKind::Debug: return "debug";
    case OperatorKind::ImproveNormal: return "improve_normal";
    case OperatorKind::ImproveFE: return "improve_fe";
    case OperatorKind::ImproveCS: return "improve_cs";
    case OperatorKind::Fusion: return "fusion";
    case OperatorKind::CodeReview: return "code_review";
    case OperatorKind::Ensemble: return "ensemble";
  }
  return "?";
}

const char* to_string(ExpansionMode v) {
  switch (v) {
    case ExpansionMode::PrimaryOnly: return "primary_only";
    case ExpansionMode::IntraBranch: return "intra_branch";
    case ExpansionMode::CrossBranch: return "cross_branch";
    case ExpansionMode::MultiBranchAgg: return "multi_branch_agg";
  }
  return "?";
}

const char* to_string(EdgeKind v) {
  return v == EdgeKind::Primary ? "primary" : "reference";
}

const char* to_string(RefKind v) {
  switch (v) {
    case RefKind::Hist: return "hist";
    case RefKind::Cross: return "cross";
    case RefKind::Agg: return "agg";
  }
  return "?";
}

const char* to_string(Direction v) {
  return v == Direction::Maximize ? "maximize" : "minimize";
}

const char* to_string(KnowledgeLevel v) {
  switch (v) {
    case KnowledgeLevel::Model: return "model";
    case KnowledgeLevel::Data: return "data";
    case KnowledgeLevel::Strategy: return "strategy";
  }
  return "?";
}

namespace {

[[noreturn]] void bad_enum(const char* what, const std::string& s) {
  raise(Errc::ConfigError, std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace

ExecState parse_exec_state(const std::string& s) {
  if (s == "root") return ExecState::Root;
  if (s == "drafted") return ExecState::Drafted;
  if (s == "buggy") return ExecState::Buggy;
  if (s == "evaluated") return ExecState::Evaluated;
  if (s == "failed") return ExecState::Failed;
  bad_enum("exec state", s);
}

OperatorKind parse_operator_kind(const std::string& s) {
  if (s == "draft") return OperatorKind::Draft;
  if (s == "debug") return OperatorKind::Debug;
  if (s == "improve_normal") return OperatorKind::ImproveNormal;
  if (s == "improve_fe") return OperatorKind::ImproveFE;
  if (s == "improve_cs") return OperatorKind::ImproveCS;
  if (s == "fusion") return OperatorKind::Fusion;
  if (s == "code_review") return OperatorKind::CodeReview;
  if (s == "ensemble") return OperatorKind::Ensemble;
  bad_enum("operator", s);
}

ExpansionMode parse_expansion_mode(const std::string& s) {
  if (s == "primary_only") return ExpansionMode::PrimaryOnly;
  if (s == "intra_branch") return ExpansionMode::IntraBranch;
  if (s == "cross_branch") return ExpansionMode::CrossBranch;
  if (s == "multi_branch_agg") return ExpansionMode::MultiBranchAgg;
  bad_enum("expansion mode", s);
}

EdgeKind parse_edge_kind(const std::string& s) {
  if (s == "primary") return EdgeKind::Primary;
  if (s == "reference") return EdgeKind::Reference;
  bad_enum("edge kind", s);
}

RefKind parse_ref_kind(const std::string& s) {
  if (s == "hist") return RefKind::Hist;
  if (s == "cross") return RefKind::Cross;
  if (s == "agg") return RefKind::Agg;
  bad_enum("reference kind", s);
}

Direction parse_direction(const std::string& s) {
  if (s == "maximize") return Direction::Maximize;
  if (s == "minimize") return Direction::Minimize;
  bad_enum("direction", s);
}

KnowledgeLevel parse_knowledge_level(const std::string& s) {
  if (s == "model") return KnowledgeLevel::Model;
  if (s == "data") return KnowledgeLevel::Data;
  if (s == "strategy") return KnowledgeLevel::Strategy;
  bad_enum("knowledge level", s);
}

const Json& require_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    raise(Errc::ConfigError, std::string("missing field '") + key + "'");
  }
  return *it;
}

std::string get_string(const Json& j, const char* key) {
  const Json& v = require_field(j, key);
  if (!v.is_string()) {
    raise(Errc::ConfigError, std::string("field '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

double get_double(const Json& j, const char* key) {
  const Json& v = require_field(j, key);
  if (!v.is_number()) {
    raise(Errc::ConfigError, std::string("field '") + key + "' must be a number");
  }
  return v.get<double>();
}

std::int64_t get_int(const Json& j, const char* key) {
  const Json& v = require_field(j, key);
  if (!v.is_number_integer()) {
    raise(Errc::ConfigError, std::string("field '") + key + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

Json payload_to_json(const SolutionPayload& p) {
  return Json{{"plan", p.plan},
              {"artifact", p.artifact},
              {"analysis", p.analysis},
              {"provenance", p.provenance}};
}

SolutionPayload payload_from_json(const Json& j) {
  SolutionPayload p;
  p.plan = get_string(j, "plan");
  p.artifact = get_string(j, "artifact");
  p.analysis = get_string(j, "analysis");
  p.provenance = require_field(j, "provenance").get<std::vector<NodeId>>();
  return p;
}

Json node_to_json(const SolutionNode& n) {
  Json j{{"node_id", n.node_id},
         {"branch_id", n.branch_id},
         {"depth", n.depth},
         {"payload", payload_to_json(n.payload)},
         {"state", to_string(n.state)},
         {"stats", Json{{"visits", n.stats.visits}, {"value", n.stats.value}}},
         {"created_step", n.created_step},
         {"debug_count", n.debug_count},
         {"review_warned", n.review_warned}};
  j["parent_id"] = n.parent_id ? Json(*n.parent_id) : Json(nullptr);
  j["metric"] = n.metric ? Json(*n.metric) : Json(nullptr);
  j["operator_used"] =
      n.operator_used ? Json(to_string(*n.operator_used)) : Json(nullptr);
  return j;
}

SolutionNode node_from_json(const Json& j) {
  SolutionNode n;
  n.node_id = get_int(j, "node_id");
  const Json& parent = require_field(j, "parent_id");
  if (!parent.is_null()) n.parent_id = parent.get<NodeId>();
  n.branch_id = get_int(j, "branch_id");
  n.depth = static_cast<int>(get_int(j, "depth"));
  n.payload = payload_from_json(require_field(j, "payload"));
  n.state = parse_exec_state(get_string(j, "state"));
  const Json& metric = require_field(j, "metric");
  if (!metric.is_null()) n.metric = metric.get<double>();
  const Json& stats = require_field(j, "stats");
  n.stats.visits = get_int(stats, "visits");
  n.stats.value = get_double(stats, "value");
  n.created_step = get_int(j, "created_step");
  n.debug_count = static_cast<int>(get_int(j, "debug_count"));
  const Json& op = require_field(j, "operator_used");
  if (!op.is_null()) n.operator_used = parse_operator_kind(op.get<std::string>());
  n.review_warned = require_field(j, "review_warned").get<bool>();
  return n;
}

Json edge_to_json(const EdgeRecord& e) {
  Json j{{"source", e.source},
         {"target", e.target},
         {"kind", to_string(e.kind)}};
  j["ref_kind"] = e.ref_kind ? Json(to_string(*e.ref_kind)) : Json(nullptr);
  return j;
}

EdgeRecord edge_from_json(const Json& j) {
  EdgeRecord e;
  e.source = get_int(j, "source");
  e.target = get_int(j, "target");
  e.kind = parse_edge_kind(get_string(j, "kind"));
  const Json& rk = require_field(j, "ref_kind");
  if (!rk.is_null()) e.ref_kind = parse_ref_kind(rk.get<std::string>());
  return e;
}

Json task_to_json(const TaskSpec& t) {
  return Json{{"task_id", t.task_id},
              {"description", t.description},
              {"metric_name", t.metric_name},
              {"direction", to_string(t.direction)},
              {"eval_noise_sigma", t.eval_noise_sigma},
              {"time_budget_seconds", t.time_budget_seconds},
              {"design_dims", t.design_dims},
              {"design_cardinality", t.design_cardinality}};
}

TaskSpec task_from_json(const Json& j) {
  TaskSpec t;
  t.task_id = get_string(j, "task_id");
  t.description = get_string(j, "description");
  t.metric_name = get_string(j, "metric_name");
  t.direction = parse_direction(get_string(j, "direction"));
  if (j.contains("eval_noise_sigma")) t.eval_noise_sigma = get_double(j, "eval_noise_sigma");
  if (j.contains("time_budget_seconds")) t.time_budget_seconds = get_double(j, "time_budget_seconds");
  if (j.contains("design_dims")) t.design_dims = static_cast<int>(get_int(j, "design_dims"));
  if (j.contains("design_cardinality")) {
    t.design_cardinality = static_cast<int>(get_int(j, "design_cardinality"));
  }
  if (t.design_dims < 1) raise(Errc::TaskLoadError, "design_dims must be >= 1");
  if (t.design_cardinality < 2) raise(Errc::TaskLoadError, "design_cardinality must be >= 2");
  if (t.eval_noise_sigma < 0) raise(Errc::TaskLoadError, "eval_noise_sigma must be >= 0");
  return t;
}

}  // namespace mcgs
