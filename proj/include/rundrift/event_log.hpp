#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace rundrift {

// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

struct Event {
  std::string label;
  std::optional<Timestamp> timestamp;
};

struct Trace {
  std::string case_id;
  std::vector<Event> events;

  // Timestamp of the last event; absent when that event carries none.
  std::optional<Timestamp> completion_time() const;
  std::vector<std::string> labels() const;
};

struct EventLog {
  std::vector<Trace> traces;  // multiset semantics: duplicates preserved
  std::set<std::string> label_alphabet;

  void rebuild_alphabet();
};

// Traces in streaming order: ascending completion time, stable on ties.
// Traces without a completion time sort ahead of timestamped ones; when
// no trace has one the log order is kept unchanged.
std::vector<Trace> stream_traces(const EventLog& log);

}  // namespace rundrift
