#pragma once

#include <string>
#include <vector>

#include "mcgs/events.hpp"

namespace mcgs {

// "step,best_metric" rows, one per simulation from the first evaluated one
// onward, carrying the direction-aware running best. Derived from the event
// log alone.
std::string render_report_csv(const std::vector<EventRecord>& events);

// Run statistics derived from the event log alone: outcome counts, operator
// usage, reference totals and the final best. No configuration echo and no
// wall-clock values, so equal logs give equal summaries.
Json build_summary(const std::vector<EventRecord>& events);

// Reads <run_dir>/events.jsonl and (re)writes report.csv and summary.json
// next to it. Raises IoError when the directory or log is missing.
void emit_report(const std::string& run_dir);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace mcgs
