#include "rundrift/event_log.hpp"

#include <algorithm>

namespace rundrift {

std::optional<Timestamp> Trace::completion_time() const {
  if (events.empty()) return std::nullopt;
  return events.back().timestamp;
}

std::vector<std::string> Trace::labels() const {
  std::vector<std::string> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back(e.label);
  return out;
}

void EventLog::rebuild_alphabet() {
  label_alphabet.clear();
  for (const auto& t : traces) {
    for (const auto& e : t.events) label_alphabet.insert(e.label);
  }
}

std::vector<Trace> stream_traces(const EventLog& log) {
  std::vector<Trace> out = log.traces;
  std::stable_sort(out.begin(), out.end(), [](const Trace& a, const Trace& b) {
    return a.completion_time() < b.completion_time();  // nullopt sorts first
  });
  return out;
}

}  // namespace rundrift
