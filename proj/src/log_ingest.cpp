#include "rundrift/log_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rundrift {

namespace {

std::string slurp(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

[[noreturn]] void fail(const std::string& what) { throw ParseError(what); }

// ---------------------------------------------------------------------------
// Minimal XML reader, just enough for the XES subset. Tracks line/column
// for error messages; understands declarations, comments, entities in
// attribute values and self-closing tags. Text content is ignored.

struct XmlAttr {
  std::string name;
  std::string value;
};

struct XmlTag {
  std::string name;
  std::vector<XmlAttr> attrs;
  bool closing = false;       // </name>
  bool self_closing = false;  // <name/>
  int line = 0;
  int col = 0;

  const std::string* attr(const std::string& key) const {
    for (const auto& a : attrs) {
      if (a.name == key) return &a.value;
    }
    return nullptr;
  }
};

class XmlReader {
 public:
  explicit XmlReader(std::string text) : s_(std::move(text)) {}

  // Next start or end tag, or nullopt at end of input.
  std::optional<XmlTag> next() {
    for (;;) {
      skip_until_lt();
      if (pos_ >= s_.size()) return std::nullopt;
      if (starts_with("<!--")) {
        skip_past("-->", "unterminated comment");
        continue;
      }
      if (starts_with("<?")) {
        skip_past("?>", "unterminated declaration");
        continue;
      }
      if (starts_with("<!")) {
        skip_past(">", "unterminated markup declaration");
        continue;
      }
      return read_tag();
    }
  }

  [[noreturn]] void error_here(const std::string& what, int line, int col) const {
    fail(what + " at line " + std::to_string(line) + ", column " + std::to_string(col));
  }

 private:
  bool starts_with(const char* p) const { return s_.compare(pos_, std::strlen(p), p) == 0; }

  void advance() {
    if (s_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_until_lt() {
    while (pos_ < s_.size() && s_[pos_] != '<') advance();
  }

  void skip_past(const char* delim, const char* what) {
    int line = line_, col = col_;
    std::size_t hit = s_.find(delim, pos_);
    if (hit == std::string::npos) error_here(what, line, col);
    while (pos_ < hit + std::strlen(delim)) advance();
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) advance();
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == ':' || c == '_' || c == '-' ||
           c == '.';
  }

  std::string read_name() {
    int line = line_, col = col_;
    std::string out;
    while (pos_ < s_.size() && name_char(s_[pos_])) {
      out.push_back(s_[pos_]);
      advance();
    }
    if (out.empty()) error_here("expected name", line, col);
    return out;
  }

  std::string decode_entities(const std::string& raw, int line, int col) {
    if (raw.find('&') == std::string::npos) return raw;
    static const std::unordered_map<std::string, char> ents = {
        {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''}};
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      std::size_t semi = raw.find(';', i);
      if (semi == std::string::npos) error_here("bad entity", line, col);
      std::string ent = raw.substr(i + 1, semi - i - 1);
      auto it = ents.find(ent);
      if (it == ents.end()) error_here("unknown entity &" + ent + ";", line, col);
      out.push_back(it->second);
      i = semi;
    }
    return out;
  }

  XmlTag read_tag() {
    XmlTag tag;
    tag.line = line_;
    tag.col = col_;
    advance();  // '<'
    if (pos_ < s_.size() && s_[pos_] == '/') {
      tag.closing = true;
      advance();
    }
    tag.name = read_name();
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) error_here("unterminated tag <" + tag.name, tag.line, tag.col);
      if (s_[pos_] == '>') {
        advance();
        return tag;
      }
      if (s_[pos_] == '/') {
        advance();
        if (pos_ >= s_.size() || s_[pos_] != '>') error_here("expected '>'", line_, col_);
        advance();
        tag.self_closing = true;
        return tag;
      }
      if (tag.closing) error_here("attributes in closing tag", line_, col_);
      XmlAttr attr;
      int aline = line_, acol = col_;
      attr.name = read_name();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '=') error_here("expected '='", line_, col_);
      advance();
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) {
        error_here("expected quoted attribute value", line_, col_);
      }
      char quote = s_[pos_];
      advance();
      std::string raw;
      while (pos_ < s_.size() && s_[pos_] != quote) {
        if (s_[pos_] == '<') error_here("'<' in attribute value", line_, col_);
        raw.push_back(s_[pos_]);
        advance();
      }
      if (pos_ >= s_.size()) error_here("unterminated attribute value", aline, acol);
      advance();  // closing quote
      attr.value = decode_entities(raw, aline, acol);
      tag.attrs.push_back(std::move(attr));
    }
  }

  std::string s_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

// Skips the element opened by `open` including all children.
void skip_element(XmlReader& reader, const XmlTag& open) {
  if (open.self_closing) return;
  for (;;) {
    auto tag = reader.next();
    if (!tag) reader.error_here("unclosed <" + open.name + ">", open.line, open.col);
    if (tag->closing) {
      if (tag->name != open.name) {
        reader.error_here("mismatched </" + tag->name + ">, expected </" + open.name + ">",
                          tag->line, tag->col);
      }
      return;
    }
    skip_element(reader, *tag);
  }
}

}  // namespace

EventLog parse_xes(std::istream& in) {
  XmlReader reader(slurp(in));
  EventLog log;
  std::size_t trace_index = 0;

  // Stack of open container elements; we only react to trace/event/
  // string/date and skip everything else wholesale.
  std::vector<std::string> stack;
  Trace current_trace;
  bool in_trace = false;
  Event current_event;
  bool in_event = false;
  bool event_has_name = false;

  for (;;) {
    auto tag = reader.next();
    if (!tag) break;
    if (tag->closing) {
      if (stack.empty() || stack.back() != tag->name) {
        reader.error_here("unexpected closing </" + tag->name + ">", tag->line, tag->col);
      }
      stack.pop_back();
      if (tag->name == "event" && in_event) {
        if (!event_has_name) {
          fail("event missing concept:name in trace " + std::to_string(trace_index));
        }
        current_trace.events.push_back(std::move(current_event));
        in_event = false;
      } else if (tag->name == "trace" && in_trace && !in_event) {
        log.traces.push_back(std::move(current_trace));
        current_trace = Trace{};
        in_trace = false;
        ++trace_index;
      }
      continue;
    }

    if (tag->name == "trace" && !in_trace) {
      in_trace = true;
      current_trace = Trace{};
      if (tag->self_closing) {
        log.traces.push_back(std::move(current_trace));
        current_trace = Trace{};
        in_trace = false;
        ++trace_index;
      } else {
        stack.push_back(tag->name);
      }
      continue;
    }
    if (tag->name == "event" && in_trace && !in_event) {
      in_event = true;
      event_has_name = false;
      current_event = Event{};
      if (tag->self_closing) {
        fail("event missing concept:name in trace " + std::to_string(trace_index));
      }
      stack.push_back(tag->name);
      continue;
    }
    if ((tag->name == "string" || tag->name == "date") && (in_event || in_trace)) {
      const std::string* key = tag->attr("key");
      const std::string* value = tag->attr("value");
      if (key && value) {
        if (in_event && tag->name == "string" && *key == "concept:name") {
          current_event.label = *value;
          event_has_name = true;
        } else if (in_event && tag->name == "date" && *key == "time:timestamp") {
          try {
            current_event.timestamp = parse_iso8601(*value);
          } catch (const ParseError& e) {
            reader.error_here(std::string(e.what()), tag->line, tag->col);
          }
        } else if (!in_event && tag->name == "string" && *key == "concept:name") {
          current_trace.case_id = *value;
        }
      }
      skip_element(reader, *tag);
      continue;
    }
    // Anything else: untracked container at top level (log, global,
    // classifier, extension, nested attributes) -- skip or descend.
    if (tag->name == "log" && !tag->self_closing) {
      stack.push_back(tag->name);
      continue;
    }
    skip_element(reader, *tag);
  }
  if (!stack.empty()) fail("unclosed <" + stack.back() + "> at end of input");
  log.rebuild_alphabet();
  return log;
}

namespace {

// One CSV record, honouring double-quoted fields. Returns false at EOF.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (ch == '\n') {
      break;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      break;
    } else {
      field.push_back(ch);
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  return true;
}

}  // namespace

EventLog parse_csv(std::istream& in) {
  std::vector<std::string> fields;
  if (!read_csv_record(in, fields)) fail("empty CSV input");

  int case_col = -1, activity_col = -1, ts_col = -1;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] == "case") case_col = static_cast<int>(i);
    else if (fields[i] == "activity") activity_col = static_cast<int>(i);
    else if (fields[i] == "timestamp") ts_col = static_cast<int>(i);
  }
  if (case_col < 0 || activity_col < 0) {
    fail("CSV header must name 'case' and 'activity' columns");
  }

  std::vector<std::string> case_order;
  std::unordered_map<std::string, std::size_t> case_index;
  std::vector<std::vector<Event>> events_per_case;

  std::size_t row = 1;
  while (read_csv_record(in, fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    std::size_t need = static_cast<std::size_t>(std::max(case_col, activity_col)) + 1;
    if (fields.size() < need) {
      fail("row " + std::to_string(row) + ": expected at least " + std::to_string(need) +
           " fields, got " + std::to_string(fields.size()));
    }
    const std::string& case_id = fields[case_col];
    Event ev;
    ev.label = fields[activity_col];
    if (ev.label.empty()) fail("row " + std::to_string(row) + ": empty activity");
    if (ts_col >= 0 && static_cast<std::size_t>(ts_col) < fields.size() &&
        !fields[ts_col].empty()) {
      const std::string& raw = fields[ts_col];
      if (all_digits(raw)) {
        Timestamp v = 0;
        auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (res.ec != std::errc()) fail("row " + std::to_string(row) + ": bad epoch timestamp");
        ev.timestamp = v;
      } else {
        try {
          ev.timestamp = parse_iso8601(raw);
        } catch (const ParseError& e) {
          fail("row " + std::to_string(row) + ": " + e.what());
        }
      }
    }
    auto [it, fresh] = case_index.try_emplace(case_id, case_order.size());
    if (fresh) {
      case_order.push_back(case_id);
      events_per_case.emplace_back();
    }
    events_per_case[it->second].push_back(std::move(ev));
  }

  EventLog log;
  for (std::size_t i = 0; i < case_order.size(); ++i) {
    Trace t;
    t.case_id = case_order[i];
    t.events = std::move(events_per_case[i]);
    std::stable_sort(t.events.begin(), t.events.end(),
                     [](const Event& a, const Event& b) { return a.timestamp < b.timestamp; });
    log.traces.push_back(std::move(t));
  }
  log.rebuild_alphabet();
  return log;
}

namespace {

void write_csv_field(std::ostream& out, const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << "\"\"";
    else out << c;
  }
  out << '"';
}

void write_xml_escaped(std::ostream& out, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '&': out << "&amp;"; break;
      case '<': out << "&lt;"; break;
      case '>': out << "&gt;"; break;
      case '"': out << "&quot;"; break;
      default: out << c;
    }
  }
}

}  // namespace

void write_csv(const EventLog& log, std::ostream& out) {
  out << "case,activity,timestamp\n";
  for (const auto& t : log.traces) {
    for (const auto& e : t.events) {
      write_csv_field(out, t.case_id);
      out << ',';
      write_csv_field(out, e.label);
      out << ',';
      if (e.timestamp) out << *e.timestamp;
      out << '\n';
    }
  }
}

void write_xes(const EventLog& log, std::ostream& out) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<log xes.version=\"1.0\">\n";
  for (const auto& t : log.traces) {
    out << "  <trace>\n";
    if (!t.case_id.empty()) {
      out << "    <string key=\"concept:name\" value=\"";
      write_xml_escaped(out, t.case_id);
      out << "\"/>\n";
    }
    for (const auto& e : t.events) {
      out << "    <event>\n";
      out << "      <string key=\"concept:name\" value=\"";
      write_xml_escaped(out, e.label);
      out << "\"/>\n";
      if (e.timestamp) {
        out << "      <date key=\"time:timestamp\" value=\"" << format_iso8601(*e.timestamp)
            << "\"/>\n";
      }
      out << "    </event>\n";
    }
    out << "  </trace>\n";
  }
  out << "</log>\n";
}

namespace {

int read_digits(const std::string& s, std::size_t& i, int count, const char* what) {
  int v = 0;
  for (int k = 0; k < count; ++k) {
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) {
      fail(std::string("bad ISO-8601 timestamp: expected digit in ") + what + " of '" + s + "'");
    }
    v = v * 10 + (s[i] - '0');
    ++i;
  }
  return v;
}

void expect_char(const std::string& s, std::size_t& i, char c) {
  if (i >= s.size() || s[i] != c) {
    fail(std::string("bad ISO-8601 timestamp: expected '") + c + "' in '" + s + "'");
  }
  ++i;
}

}  // namespace

Timestamp parse_iso8601(const std::string& s) {
  std::size_t i = 0;
  int year = read_digits(s, i, 4, "year");
  expect_char(s, i, '-');
  int month = read_digits(s, i, 2, "month");
  expect_char(s, i, '-');
  int day = read_digits(s, i, 2, "day");

  int hour = 0, minute = 0, second = 0;
  std::int64_t millis = 0;
  int offset_min = 0;
  if (i < s.size()) {
    if (s[i] != 'T' && s[i] != ' ') fail("bad ISO-8601 timestamp: expected 'T' in '" + s + "'");
    ++i;
    hour = read_digits(s, i, 2, "hour");
    expect_char(s, i, ':');
    minute = read_digits(s, i, 2, "minute");
    expect_char(s, i, ':');
    second = read_digits(s, i, 2, "second");
    if (i < s.size() && s[i] == '.') {
      ++i;
      std::int64_t frac = 0;
      int digits = 0;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        if (digits < 9) {
          frac = frac * 10 + (s[i] - '0');
          ++digits;
        }
        ++i;
      }
      if (digits == 0) fail("bad ISO-8601 timestamp: empty fraction in '" + s + "'");
      while (digits < 3) {
        frac *= 10;
        ++digits;
      }
      while (digits > 3) {
        frac /= 10;
        --digits;
      }
      millis = frac;
    }
    if (i < s.size()) {
      char c = s[i];
      if (c == 'Z') {
        ++i;
      } else if (c == '+' || c == '-') {
        ++i;
        int oh = read_digits(s, i, 2, "offset hour");
        if (i < s.size() && s[i] == ':') ++i;
        int om = (i < s.size()) ? read_digits(s, i, 2, "offset minute") : 0;
        offset_min = oh * 60 + om;
        if (c == '-') offset_min = -offset_min;
      } else {
        fail("bad ISO-8601 timestamp: unexpected '" + std::string(1, c) + "' in '" + s + "'");
      }
    }
  }
  if (i != s.size()) fail("bad ISO-8601 timestamp: trailing characters in '" + s + "'");

  std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                                  std::chrono::day{unsigned(day)}};
  if (!ymd.ok()) fail("bad ISO-8601 timestamp: invalid calendar date in '" + s + "'");
  if (hour > 23 || minute > 59 || second > 60) {
    fail("bad ISO-8601 timestamp: invalid time of day in '" + s + "'");
  }
  std::int64_t days = std::chrono::sys_days(ymd).time_since_epoch().count();
  std::int64_t ms = days * 86400000LL + hour * 3600000LL + minute * 60000LL + second * 1000LL +
                    millis - static_cast<std::int64_t>(offset_min) * 60000LL;
  return ms;
}

std::string format_iso8601(Timestamp t) {
  std::int64_t ms = ((t % 1000) + 1000) % 1000;
  std::int64_t secs = (t - ms) / 1000;
  std::int64_t days = secs / 86400;
  std::int64_t rem = secs % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  auto ymd = std::chrono::year_month_day(std::chrono::sys_days(std::chrono::days(days)));
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>((rem % 3600) / 60), static_cast<int>(rem % 60),
                static_cast<int>(ms));
  return buf;
}

}  // namespace rundrift
