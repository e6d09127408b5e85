#include "mcgs/mcgs.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "mcgs/config.hpp"
#include "mcgs/errors.hpp"
#include "mcgs/graph.hpp"
#include "mcgs/orchestrator.hpp"
#include "mcgs/report.hpp"

struct mcgs_config {
  mcgs::RunConfig cfg;
};

struct mcgs_run {
  mcgs::RunResult result;
  std::string graph_json;
  std::string summary_json;
};

namespace {

thread_local std::string g_last_error;

int code_of(mcgs::Errc c) { return static_cast<int>(c) + 1; }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const mcgs::Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MCGS_ERR_INTERNAL;
  }
}

int usage_error(const char* what) {
  g_last_error = what;
  return MCGS_ERR_INTERNAL;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) return nullptr;
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

mcgs_config* mcgs_config_new(void) { return new (std::nothrow) mcgs_config(); }

void mcgs_config_free(mcgs_config* config) { delete config; }

int mcgs_config_load_file(mcgs_config* config, const char* path) {
  if (config == nullptr || path == nullptr) return usage_error("null argument");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) {
      mcgs::raise(mcgs::Errc::ConfigError,
                  std::string("cannot open config file '") + path + "'");
    }
    mcgs::Json j = mcgs::Json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      mcgs::raise(mcgs::Errc::ConfigError,
                  std::string("config file '") + path + "' is not valid JSON");
    }
    mcgs::apply_config_json(config->cfg, j);
    mcgs::validate_config(config->cfg);
    return MCGS_OK;
  });
}

int mcgs_config_set(mcgs_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return usage_error("null argument");
  }
  return guarded([&] {
    mcgs::apply_config_override(config->cfg, key, value);
    return MCGS_OK;
  });
}

int mcgs_run_execute(const mcgs_config* config, mcgs_run** out_run) {
  if (config == nullptr || out_run == nullptr) return usage_error("null argument");
  *out_run = nullptr;
  return guarded([&] {
    mcgs::Orchestrator orch(config->cfg);
    auto run = std::make_unique<mcgs_run>();
    run->result = orch.run();
    run->graph_json = orch.graph().to_json().dump(2) + "\n";
    run->summary_json = mcgs::build_summary(orch.events()).dump(2) + "\n";
    *out_run = run.release();
    return MCGS_OK;
  });
}

void mcgs_run_free(mcgs_run* run) { delete run; }

int mcgs_run_best_metric(const mcgs_run* run, double* out_metric) {
  if (run == nullptr || out_metric == nullptr) return usage_error("null argument");
  if (!run->result.best_metric) {
    g_last_error = "the run evaluated no solution";
    return MCGS_ERR_NO_EVALUATED_SOLUTION;
  }
  *out_metric = *run->result.best_metric;
  return MCGS_OK;
}

long long mcgs_run_best_node(const mcgs_run* run) {
  return run == nullptr ? -1 : static_cast<long long>(run->result.best_node);
}

long long mcgs_run_node_count(const mcgs_run* run) {
  return run == nullptr ? 0 : static_cast<long long>(run->result.node_count);
}

long long mcgs_run_steps_completed(const mcgs_run* run) {
  return run == nullptr ? 0 : static_cast<long long>(run->result.steps_completed);
}

char* mcgs_run_graph_json(const mcgs_run* run) {
  return run == nullptr ? nullptr : copy_string(run->graph_json);
}

char* mcgs_run_summary_json(const mcgs_run* run) {
  return run == nullptr ? nullptr : copy_string(run->summary_json);
}

int mcgs_report_emit(const char* run_dir) {
  if (run_dir == nullptr) return usage_error("null argument");
  return guarded([&] {
    mcgs::emit_report(run_dir);
    return MCGS_OK;
  });
}

int mcgs_snapshot_validate(const char* graph_json_path) {
  if (graph_json_path == nullptr) return usage_error("null argument");
  return guarded([&] {
    std::ifstream in(graph_json_path);
    if (!in) {
      mcgs::raise(mcgs::Errc::IoError,
                  std::string("cannot open snapshot '") + graph_json_path + "'");
    }
    mcgs::Json j = mcgs::Json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      mcgs::raise(mcgs::Errc::StructureInvalid, "snapshot is not valid JSON");
    }
    const mcgs::SolutionGraph graph = mcgs::SolutionGraph::from_json(j);
    const mcgs::StructureReport report = graph.validate_structure();
    if (!report.ok()) {
      std::ostringstream msg;
      for (std::size_t i = 0; i < report.violations.size(); ++i) {
        if (i) msg << "; ";
        msg << report.violations[i];
      }
      g_last_error = msg.str();
      return MCGS_ERR_STRUCTURE_INVALID;
    }
    return MCGS_OK;
  });
}

const char* mcgs_status_message(int code) {
  if (code == MCGS_OK) return "ok";
  if (code == MCGS_ERR_INTERNAL) return "internal_error";
  const int index = code - 1;
  if (index >= static_cast<int>(mcgs::Errc::UnknownParent) &&
      index <= static_cast<int>(mcgs::Errc::WorkerPanic)) {
    return mcgs::errc_name(static_cast<mcgs::Errc>(index));
  }
  return "unknown_code";
}

const char* mcgs_last_error(void) { return g_last_error.c_str(); }

void mcgs_string_free(char* s) { std::free(s); }

const char* mcgs_version(void) { return "1.0.0"; }

}  // extern "C"
