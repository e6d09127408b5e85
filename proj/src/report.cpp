#include "mcgs/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mcgs/errors.hpp"
#include "mcgs/types.hpp"

namespace mcgs {

namespace {

// Shortest round-trip decimal form, same as the JSON files use.
std::string format_metric(double v) { return Json(v).dump(); }

Direction direction_from(const std::vector<EventRecord>& events) {
  for (const EventRecord& e : events) {
    if (e.kind == EventKind::Finalized) {
      return parse_direction(get_string(e.payload, "direction"));
    }
  }
  return Direction::Maximize;
}

}  // namespace

std::string render_report_csv(const std::vector<EventRecord>& events) {
  const Direction dir = direction_from(events);
  std::map<std::int64_t, std::optional<double>> by_step;
  for (const EventRecord& e : events) {
    if (e.kind != EventKind::Simulated) continue;
    const Json& metric = require_field(e.payload, "metric");
    by_step[e.step] = metric.is_null() ? std::optional<double>()
                                       : std::optional<double>(metric.get<double>());
  }
  std::ostringstream out;
  out << "step,best_metric\n";
  std::optional<double> best;
  for (const auto& [step, metric] : by_step) {
    if (metric && (!best || metric_better(dir, *metric, *best))) best = metric;
    if (best) out << step << ',' << format_metric(*best) << '\n';
  }
  return out.str();
}

Json build_summary(const std::vector<EventRecord>& events) {
  std::int64_t nodes_created = 0;
  std::int64_t simulations = 0;
  std::int64_t evaluated = 0;
  std::int64_t buggy = 0;
  std::int64_t failed = 0;
  std::int64_t review_warnings = 0;
  std::int64_t review_rejections = 0;
  std::int64_t reference_edges = 0;
  std::int64_t aggregations = 0;
  std::int64_t budget_exhausted = 0;
  std::int64_t engine_failures = 0;
  std::map<std::string, std::int64_t> operator_counts;
  Json finalized;

  for (const EventRecord& e : events) {
    switch (e.kind) {
      case EventKind::OperatorChosen: {
        const std::string outcome = get_string(e.payload, "outcome");
        if (outcome == "budget_exhausted") {
          ++budget_exhausted;
        } else {
          ++operator_counts[get_string(e.payload, "op")];
        }
        break;
      }
      case EventKind::NodeCreated:
        ++nodes_created;
        break;
      case EventKind::ReferenceEdges:
        reference_edges += static_cast<std::int64_t>(
            require_field(e.payload, "sources").size());
        break;
      case EventKind::AggregationSpawned:
        ++aggregations;
        break;
      case EventKind::ReviewVerdict: {
        const std::string d = get_string(e.payload, "decision");
        if (d == "warn") ++review_warnings;
        if (d == "reject") ++review_rejections;
        break;
      }
      case EventKind::Simulated: {
        ++simulations;
        const std::string status = get_string(e.payload, "status");
        if (status == "evaluated") ++evaluated;
        if (status == "buggy") ++buggy;
        if (status == "failed") ++failed;
        break;
      }
      case EventKind::EngineFailure:
        ++engine_failures;
        break;
      case EventKind::Backprop:
      case EventKind::MemoryUpdate:
        break;
      case EventKind::Finalized:
        finalized = e.payload;
        break;
    }
  }

  Json summary{{"nodes_created", nodes_created},
               {"simulations", simulations},
               {"evaluated", evaluated},
               {"buggy", buggy},
               {"failed", failed},
               {"review_warnings", review_warnings},
               {"review_rejections", review_rejections},
               {"reference_edge_count", reference_edges},
               {"aggregations", aggregations},
               {"budget_exhausted", budget_exhausted},
               {"engine_failures", engine_failures},
               {"operator_counts", operator_counts}};
  if (!finalized.is_null()) {
    summary["best_node"] = finalized.at("best_node");
    summary["best_metric"] = finalized.at("best_metric");
    summary["direction"] = finalized.at("direction");
    summary["task_id"] = finalized.at("task_id");
    summary["metric_name"] = finalized.at("metric_name");
    summary["ensemble_node"] = finalized.at("ensemble_node");
    summary["steps_completed"] = finalized.at("steps_completed");
  }
  return summary;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::out | std::ios::trunc);
  if (!out) raise(Errc::IoError, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) raise(Errc::IoError, "short write to '" + path + "'");
}

void emit_report(const std::string& run_dir) {
  const std::filesystem::path dir(run_dir);
  const auto events = read_event_log((dir / "events.jsonl").string());
  write_text_file((dir / "report.csv").string(), render_report_csv(events));
  write_text_file((dir / "summary.json").string(),
                  build_summary(events).dump(2) + "\n");
}

}  // namespace mcgs
