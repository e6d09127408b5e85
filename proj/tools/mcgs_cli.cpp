// Command line front end. Talks to the library exclusively through the C
// interface in mcgs/mcgs.h.
#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include <mcgs/mcgs.h>

namespace {

int fail(int code) {
  std::fprintf(stderr, "error (%s): %s\n", mcgs_status_message(code),
               mcgs_last_error());
  return 1;
}

struct RunArgs {
  std::string config_path;
  std::string out_dir;
  std::string engine;
  std::string mode;
  long long seed = -1;
  int steps = -1;
  int workers = -1;
};

int do_run(const RunArgs& args) {
  mcgs_config* config = mcgs_config_new();
  if (config == nullptr) return fail(MCGS_ERR_INTERNAL);
  int rc = mcgs_config_load_file(config, args.config_path.c_str());
  auto set = [&](const char* key, const std::string& value) {
    if (rc == MCGS_OK) rc = mcgs_config_set(config, key, value.c_str());
  };
  if (args.seed >= 0) set("seed", std::to_string(args.seed));
  if (args.steps >= 0) set("max_steps", std::to_string(args.steps));
  if (args.workers >= 0) set("max_parallel_workers", std::to_string(args.workers));
  if (!args.engine.empty()) set("engine", args.engine);
  if (!args.mode.empty()) set("mode", args.mode);
  if (!args.out_dir.empty()) set("output_dir", args.out_dir);
  if (rc != MCGS_OK) {
    mcgs_config_free(config);
    return fail(rc);
  }

  mcgs_run* run = nullptr;
  rc = mcgs_run_execute(config, &run);
  mcgs_config_free(config);
  if (rc != MCGS_OK) return fail(rc);

  const long long steps = mcgs_run_steps_completed(run);
  const long long nodes = mcgs_run_node_count(run);
  double best = 0.0;
  if (mcgs_run_best_metric(run, &best) == MCGS_OK) {
    std::printf("best node %lld with metric %.6g after %lld steps (%lld nodes)\n",
                mcgs_run_best_node(run), best, steps, nodes);
  } else {
    std::printf("no evaluated solution after %lld steps (%lld nodes)\n", steps,
                nodes);
  }
  if (!args.out_dir.empty()) {
    std::printf("outputs written to %s\n", args.out_dir.c_str());
  }
  mcgs_run_free(run);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo graph search runner"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "Execute a search run");
  run->add_option("--config", run_args.config_path, "JSON config file")
      ->required();
  run->add_option("--seed", run_args.seed, "Override the run seed");
  run->add_option("--steps", run_args.steps, "Override max_steps");
  run->add_option("--workers", run_args.workers, "Override max_parallel_workers");
  run->add_option("--engine", run_args.engine, "Engine: synthetic or llm");
  run->add_option("--mode", run_args.mode, "Search mode: graph or tree");
  run->add_option("--out", run_args.out_dir, "Output directory");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "Rebuild report files for a run");
  report->add_option("--run", report_dir, "Run output directory")->required();

  std::string snapshot_path;
  CLI::App* validate = app.add_subcommand("validate", "Check a graph snapshot");
  validate->add_option("--snapshot", snapshot_path, "graph.json file")->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return do_run(run_args);
  if (report->parsed()) {
    const int rc = mcgs_report_emit(report_dir.c_str());
    if (rc != MCGS_OK) return fail(rc);
    std::printf("report rebuilt in %s\n", report_dir.c_str());
    return 0;
  }
  if (validate->parsed()) {
    const int rc = mcgs_snapshot_validate(snapshot_path.c_str());
    if (rc != MCGS_OK) return fail(rc);
    std::printf("snapshot ok\n");
    return 0;
  }
  return 1;
}
