#include "mcgs/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "mcgs/errors.hpp"

namespace mcgs {

namespace {

using Field = std::variant<int RunConfig::*, double RunConfig::*,
                           std::uint64_t RunConfig::*, std::string RunConfig::*>;

const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = {
      {"max_steps", &RunConfig::max_steps},
      {"exploration_constant", &RunConfig::exploration_constant},
      {"temperature", &RunConfig::temperature},
      {"max_parallel_workers", &RunConfig::max_parallel_workers},
      {"max_draft_num", &RunConfig::max_draft_num},
      {"max_debug_num", &RunConfig::max_debug_num},
      {"branch_top_k", &RunConfig::branch_top_k},
      {"global_top_k", &RunConfig::global_top_k},
      {"max_history_num", &RunConfig::max_history_num},
      {"max_ref_num", &RunConfig::max_ref_num},
      {"max_agg_num", &RunConfig::max_agg_num},
      {"ensemble_num", &RunConfig::ensemble_num},
      {"kb_init_ref_prob", &RunConfig::kb_init_ref_prob},
      {"stagnation_window", &RunConfig::stagnation_window},
      {"agg_min_trajectories", &RunConfig::agg_min_trajectories},
      {"agg_cooldown_steps", &RunConfig::agg_cooldown_steps},
      {"max_children_per_node", &RunConfig::max_children_per_node},
      {"improve_normal_weight", &RunConfig::improve_normal_weight},
      {"improve_fe_weight", &RunConfig::improve_fe_weight},
      {"improve_cs_weight", &RunConfig::improve_cs_weight},
      {"epsilon", &RunConfig::epsilon},
      {"bug_injection_prob", &RunConfig::bug_injection_prob},
      {"enabled_reference_modes", &RunConfig::enabled_reference_modes},
      {"mode", &RunConfig::mode},
      {"seed", &RunConfig::seed},
      {"engine", &RunConfig::engine},
      {"task_file", &RunConfig::task_file},
      {"kb_file", &RunConfig::kb_file},
      {"output_dir", &RunConfig::output_dir},
      {"time_budget", &RunConfig::time_budget},
      {"llm_base_url", &RunConfig::llm_base_url},
      {"llm_model", &RunConfig::llm_model},
      {"llm_token_env", &RunConfig::llm_token_env},
      {"llm_max_retries", &RunConfig::llm_max_retries},
      {"llm_timeout_seconds", &RunConfig::llm_timeout_seconds},
  };
  return table;
}

[[noreturn]] void bad_key(const std::string& key) {
  raise(Errc::ConfigError, "unknown config key '" + key + "'");
}

void assign_json(RunConfig& cfg, const std::string& key, const Field& field,
                 const Json& value) {
  if (const auto* p = std::get_if<int RunConfig::*>(&field)) {
    if (!value.is_number_integer()) {
      raise(Errc::ConfigError, "config key '" + key + "' expects an integer");
    }
    cfg.**p = value.get<int>();
  } else if (const auto* p = std::get_if<double RunConfig::*>(&field)) {
    if (!value.is_number()) {
      raise(Errc::ConfigError, "config key '" + key + "' expects a number");
    }
    cfg.**p = value.get<double>();
  } else if (const auto* p = std::get_if<std::uint64_t RunConfig::*>(&field)) {
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
      raise(Errc::ConfigError,
            "config key '" + key + "' expects a non-negative integer");
    }
    cfg.**p = value.get<std::uint64_t>();
  } else {
    const auto* s = std::get_if<std::string RunConfig::*>(&field);
    if (!value.is_string()) {
      raise(Errc::ConfigError, "config key '" + key + "' expects a string");
    }
    cfg.**s = value.get<std::string>();
  }
}

}  // namespace

void apply_config_json(RunConfig& cfg, const Json& j) {
  if (!j.is_object()) {
    raise(Errc::ConfigError, "config root must be a JSON object");
  }
  const auto& table = field_table();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) bad_key(key);
    assign_json(cfg, key, it->second, value);
  }
}

void apply_config_override(RunConfig& cfg, const std::string& key,
                           const std::string& value) {
  const auto& table = field_table();
  const auto it = table.find(key);
  if (it == table.end()) bad_key(key);
  Json parsed;
  if (std::holds_alternative<std::string RunConfig::*>(it->second)) {
    parsed = value;
  } else {
    parsed = Json::parse(value, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_number()) {
      raise(Errc::ConfigError,
            "config key '" + key + "' expects a numeric value, got '" + value + "'");
    }
  }
  assign_json(cfg, key, it->second, parsed);
}

RunConfig load_run_config(const std::string& path) {
  RunConfig cfg;
  std::ifstream in(path);
  if (!in) raise(Errc::ConfigError, "cannot open config file '" + path + "'");
  Json j = Json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    raise(Errc::ConfigError, "config file '" + path + "' is not valid JSON");
  }
  apply_config_json(cfg, j);
  validate_config(cfg);
  return cfg;
}

void validate_config(const RunConfig& cfg) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) raise(Errc::ConfigError, what);
  };
  require(cfg.max_steps >= 1, "max_steps must be >= 1");
  require(cfg.max_parallel_workers >= 1, "max_parallel_workers must be >= 1");
  require(cfg.max_draft_num >= 1, "max_draft_num must be >= 1");
  require(cfg.max_debug_num >= 0, "max_debug_num must be >= 0");
  require(cfg.branch_top_k >= 1 && cfg.global_top_k >= 1,
          "memory top-k values must be >= 1");
  require(cfg.max_history_num >= 1 && cfg.max_ref_num >= 1 && cfg.max_agg_num >= 2,
          "reference caps must allow at least one source (two for aggregation)");
  require(cfg.ensemble_num >= 0, "ensemble_num must be >= 0");
  require(cfg.kb_init_ref_prob >= 0.0 && cfg.kb_init_ref_prob <= 1.0,
          "kb_init_ref_prob must lie in [0, 1]");
  require(cfg.bug_injection_prob >= 0.0 && cfg.bug_injection_prob <= 1.0,
          "bug_injection_prob must lie in [0, 1]");
  require(cfg.stagnation_window >= 1, "stagnation_window must be >= 1");
  require(cfg.agg_min_trajectories >= 1, "agg_min_trajectories must be >= 1");
  require(cfg.agg_cooldown_steps >= 0, "agg_cooldown_steps must be >= 0");
  require(cfg.max_children_per_node >= 1, "max_children_per_node must be >= 1");
  require(cfg.improve_normal_weight >= 0.0 && cfg.improve_fe_weight >= 0.0 &&
              cfg.improve_cs_weight >= 0.0,
          "improve weights must be non-negative");
  require(cfg.improve_normal_weight + cfg.improve_fe_weight +
                  cfg.improve_cs_weight >
              0.0,
          "improve weights must not all be zero");
  require(cfg.epsilon > 0.0, "epsilon must be positive");
  require(cfg.exploration_constant >= 0.0, "exploration_constant must be >= 0");
  require(cfg.engine == "synthetic" || cfg.engine == "llm",
          "engine must be 'synthetic' or 'llm'");
  require(cfg.mode == "graph" || cfg.mode == "tree",
          "mode must be 'graph' or 'tree'");
  require(cfg.time_budget >= 0.0, "time_budget must be >= 0");
  require(cfg.llm_max_retries >= 0, "llm_max_retries must be >= 0");
  require(cfg.llm_timeout_seconds > 0.0, "llm_timeout_seconds must be positive");
  reference_mode_flags(cfg);
}

ReferenceModeFlags reference_mode_flags(const RunConfig& cfg) {
  ReferenceModeFlags flags;
  std::stringstream ss(cfg.enabled_reference_modes);
  std::string token;
  while (std::getline(ss, token, ',')) {
    const auto begin = token.find_first_not_of(" \t");
    if (begin == std::string::npos) continue;
    const auto end = token.find_last_not_of(" \t");
    token = token.substr(begin, end - begin + 1);
    if (token == "intra") {
      flags.intra = true;
    } else if (token == "cross") {
      flags.cross = true;
    } else if (token == "agg") {
      flags.agg = true;
    } else if (token != "none") {
      raise(Errc::ConfigError,
            "enabled_reference_modes token '" + token + "' is not one of "
            "intra, cross, agg, none");
    }
  }
  if (cfg.mode == "tree") return {};
  return flags;
}

}  // namespace mcgs
