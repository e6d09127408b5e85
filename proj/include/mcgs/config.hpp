#pragma once

#include <cstdint>
#include <string>

#include "mcgs/serde.hpp"

namespace mcgs {

// Every knob of a run. The defaults here are the shipped configuration; an
// empty config file reproduces them exactly.
struct RunConfig {
  // Search shape
  int max_steps = 500;
  double exploration_constant = 1.414;
  double temperature = 0.5;
  int max_parallel_workers = 3;
  int max_draft_num = 7;
  int max_debug_num = 20;
  int branch_top_k = 5;
  int global_top_k = 10;
  int max_history_num = 7;
  int max_ref_num = 7;
  int max_agg_num = 7;
  int ensemble_num = 6;
  double kb_init_ref_prob = 0.8;

  // Scheduling details
  int stagnation_window = 5;
  int agg_min_trajectories = 5;
  int agg_cooldown_steps = 50;
  int max_children_per_node = 3;
  double improve_normal_weight = 0.5;
  double improve_fe_weight = 0.3;
  double improve_cs_weight = 0.2;
  double epsilon = 1e-6;
  double bug_injection_prob = 0.1;
  // Comma-separated subset of {intra, cross, agg}; "none" disables all.
  std::string enabled_reference_modes = "intra,cross,agg";
  // "graph" keeps reference edges; "tree" is the plain-MCTS reduction.
  std::string mode = "graph";

  // Run plumbing
  std::uint64_t seed = 0;
  std::string engine = "synthetic";  // synthetic | llm
  std::string task_file;             // empty: built-in default task
  std::string kb_file;               // empty: knowledge base off
  std::string output_dir;            // empty: nothing written
  double time_budget = 0.0;          // seconds; 0 = unlimited

  // LLM engine
  std::string llm_base_url = "http://127.0.0.1:8080";
  std::string llm_model = "default";
  std::string llm_token_env = "MCGS_API_TOKEN";
  int llm_max_retries = 2;
  double llm_timeout_seconds = 30.0;
};

// Merge a JSON object into cfg. Unknown keys and type mismatches raise
// ConfigError.
void apply_config_json(RunConfig& cfg, const Json& j);

// Merge a single textual override (CLI / C API). Numeric keys parse the
// value; raises ConfigError on unknown key or bad number.
void apply_config_override(RunConfig& cfg, const std::string& key,
                           const std::string& value);

// Defaults merged with the JSON object in `path`. Raises ConfigError.
RunConfig load_run_config(const std::string& path);

// Range and enum checks; raises ConfigError.
void validate_config(const RunConfig& cfg);

struct ReferenceModeFlags {
  bool intra = false;
  bool cross = false;
  bool agg = false;
};

// Parses enabled_reference_modes and applies the tree-mode reduction (tree
// forces every flag off). Raises ConfigError on unknown tokens.
ReferenceModeFlags reference_mode_flags(const RunConfig& cfg);

}  // namespace mcgs
