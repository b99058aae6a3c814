// Readers and writers for the two supported log formats.
//
// XES subset: <trace> and <event> elements; per event one <string> with
// key "concept:name" (required) and optionally one <date> with key
// "time:timestamp" (ISO-8601). Everything else is skipped.
//
// CSV: header row naming case, activity and optionally timestamp
// (ISO-8601 or integer epoch milliseconds). Rows may arrive grouped or
// interleaved by case; events are stable-sorted by timestamp per case.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "rundrift/event_log.hpp"

namespace rundrift {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

EventLog parse_xes(std::istream& in);
EventLog parse_csv(std::istream& in);

void write_xes(const EventLog& log, std::ostream& out);
void write_csv(const EventLog& log, std::ostream& out);

// "2024-02-01T10:30:00.250Z" or with a +hh:mm / -hh:mm offset; the date
// part alone is accepted and read as midnight UTC.
Timestamp parse_iso8601(const std::string& s);
std::string format_iso8601(Timestamp t);

}  // namespace rundrift
