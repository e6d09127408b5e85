#include "mcgs/events.hpp"

#include "mcgs/errors.hpp"

namespace mcgs {

const char* to_string(EventKind v) {
  switch (v) {
    case EventKind::OperatorChosen: return "operator_chosen";
    case EventKind::NodeCreated: return "node_created";
    case EventKind::ReferenceEdges: return "reference_edges";
    case EventKind::AggregationSpawned: return "aggregation_spawned";
    case EventKind::ReviewVerdict: return "review_verdict";
    case EventKind::Simulated: return "simulated";
    case EventKind::Backprop: return "backprop";
    case EventKind::MemoryUpdate: return "memory_update";
    case EventKind::EngineFailure: return "engine_failure";
    case EventKind::Finalized: return "finalized";
  }
  return "unknown";
}

EventKind parse_event_kind(const std::string& s) {
  if (s == "operator_chosen") return EventKind::OperatorChosen;
  if (s == "node_created") return EventKind::NodeCreated;
  if (s == "reference_edges") return EventKind::ReferenceEdges;
  if (s == "aggregation_spawned") return EventKind::AggregationSpawned;
  if (s == "review_verdict") return EventKind::ReviewVerdict;
  if (s == "simulated") return EventKind::Simulated;
  if (s == "backprop") return EventKind::Backprop;
  if (s == "memory_update") return EventKind::MemoryUpdate;
  if (s == "engine_failure") return EventKind::EngineFailure;
  if (s == "finalized") return EventKind::Finalized;
  raise(Errc::ConfigError, "unknown event kind '" + s + "'");
}

Json event_to_json(const EventRecord& e) {
  return Json{{"seq", e.seq},
              {"step", e.step},
              {"kind", to_string(e.kind)},
              {"payload", e.payload}};
}

EventRecord event_from_json(const Json& j) {
  EventRecord e;
  e.seq = get_int(j, "seq");
  e.step = get_int(j, "step");
  e.kind = parse_event_kind(get_string(j, "kind"));
  e.payload = require_field(j, "payload");
  return e;
}

void EventLog::open_sink(const std::string& path) {
  sink_.open(path, std::ios::out | std::ios::trunc);
  if (!sink_) raise(Errc::IoError, "cannot open event log '" + path + "'");
  sink_open_ = true;
}

const EventRecord& EventLog::append(std::int64_t step, EventKind kind, Json payload) {
  EventRecord e;
  e.seq = next_seq_++;
  e.step = step;
  e.kind = kind;
  e.payload = std::move(payload);
  records_.push_back(std::move(e));
  if (sink_open_) sink_ << event_to_json(records_.back()).dump() << '\n';
  return records_.back();
}

void EventLog::flush() {
  if (sink_open_) sink_.flush();
}

std::vector<EventRecord> read_event_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoError, "cannot open event log '" + path + "'");
  std::vector<EventRecord> out;
  std::string line;
  std::int64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      raise(Errc::ConfigError,
            "event log line " + std::to_string(lineno) + " is not valid JSON");
    }
    out.push_back(event_from_json(j));
  }
  return out;
}

}  // namespace mcgs
