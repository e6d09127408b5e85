#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mcgs/serde.hpp"

namespace mcgs {

enum class EventKind {
  OperatorChosen,
  NodeCreated,
  ReferenceEdges,
  AggregationSpawned,
  ReviewVerdict,
  Simulated,
  Backprop,
  MemoryUpdate,
  EngineFailure,
  Finalized,
};

const char* to_string(EventKind v);
EventKind parse_event_kind(const std::string& s);

// One line of the event log. `seq` is the global write order, `step` the
// 1-based simulation index the event belongs to (0 for run-level events).
struct EventRecord {
  std::int64_t seq = 0;
  std::int64_t step = 0;
  EventKind kind = EventKind::OperatorChosen;
  Json payload;
};

Json event_to_json(const EventRecord& e);
EventRecord event_from_json(const Json& j);

// In-memory log plus optional JSONL sink. Both views carry the same records
// in the same order; seq is assigned here.
class EventLog {
 public:
  EventLog() = default;

  // Opens `path` for writing; raises IoError on failure.
  void open_sink(const std::string& path);

  const EventRecord& append(std::int64_t step, EventKind kind, Json payload);

  const std::vector<EventRecord>& records() const { return records_; }
  void flush();

 private:
  std::vector<EventRecord> records_;
  std::ofstream sink_;
  bool sink_open_ = false;
  std::int64_t next_seq_ = 1;
};

// Parses a JSONL event log. Raises IoError on unreadable file, ConfigError
// on malformed lines.
std::vector<EventRecord> read_event_log(const std::string& path);

}  // namespace mcgs
