#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rundrift/concurrency.hpp"
#include "rundrift/event_log.hpp"
#include "rundrift/sudden.hpp"

using namespace rundrift;

namespace {

// Exact p-values for the 2x2 table {ref = [10, 0], det = [10 - m, m]}
// (and its transposed-flank mirror), frozen from an independent
// high-precision evaluation of the chi-square survival function.
constexpr double kP1 = 0.30490178817878544;
constexpr double kP2 = 0.13603712811414423;
constexpr double kP3 = 0.06028917399060221;
constexpr double kP4 = 0.025347318677468325;
constexpr double kP5 = 0.009823274507519235;
constexpr double kP6 = 0.0034147911781178208;
constexpr double kP10 = 7.744216431044088e-06;

std::vector<std::string> one(const std::string& label) { return {label}; }

struct StreamResult {
  std::vector<SuddenDrift> drifts;
  std::vector<PSeriesEntry> p_series;
};

StreamResult stream_blocks(SuddenDetector& det,
                           const std::vector<std::pair<std::string, int>>& blocks) {
  StreamResult r;
  for (const auto& [label, count] : blocks) {
    for (int i = 0; i < count; ++i) {
      if (auto d = det.observe(one(label))) r.drifts.push_back(*d);
    }
  }
  r.p_series = det.p_series();
  return r;
}

DetectorConfig fixed_window_config() {
  DetectorConfig cfg;
  cfg.init_window = 10;
  cfg.min_window = 10;
  cfg.max_window = 10;
  cfg.phi_divisor = 4;  // phi = ceil(10 / 4) = 3
  return cfg;
}

}  // namespace

TEST_CASE("resolved fills defaults and validates bounds") {
  const DetectorConfig def = DetectorConfig{}.resolved();
  CHECK(def.init_window == 100);
  CHECK(def.max_buffer == 2000);
  CHECK(def.max_window == 1000);
  CHECK(def.min_window == 0);  // derived at the first test
  CHECK(def.chi_threshold == doctest::Approx(0.05));
  CHECK(def.phi_divisor == 3);
  CHECK(def.threads == 1);

  auto broken = [](auto&&... mutate) {
    DetectorConfig c;
    (mutate(c), ...);
    return c;
  };
  CHECK_THROWS_AS(broken([](DetectorConfig& c) { c.init_window = 0; }).resolved(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](DetectorConfig& c) { c.chi_threshold = 0.0; }).resolved(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](DetectorConfig& c) { c.chi_threshold = 1.0; }).resolved(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](DetectorConfig& c) { c.phi_divisor = 0; }).resolved(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](DetectorConfig& c) { c.min_window = 200; }).resolved(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](DetectorConfig& c) { c.max_window = 50; }).resolved(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](DetectorConfig& c) {
                    c.max_window = 60;
                    c.max_buffer = 100;
                  }).resolved(),
                  std::invalid_argument);
  CHECK_THROWS_AS(broken([](DetectorConfig& c) { c.min_window = -1; }).resolved(),
                  std::invalid_argument);
}

TEST_CASE("oscillation filter latches phi and the window at candidate formation") {
  OscillationFilter f(0.05, 3);
  CHECK(!f.candidate().has_value());
  CHECK(f.phi() == 1);

  CHECK(!f.feed(0.01, 5, 9).has_value());  // phi = ceil(9/3) = 3, run 1
  CHECK(f.candidate() == 5);
  CHECK(f.phi() == 3);
  CHECK(f.run_length() == 1);

  // Later windows do not change the latched phi or window.
  CHECK(!f.feed(0.01, 6, 30).has_value());
  CHECK(f.phi() == 3);
  const auto c = f.feed(0.01, 7, 30);
  REQUIRE(c.has_value());
  CHECK(c->position == 5);
  CHECK(c->confirmed_at == 7);
  CHECK(c->window == 9);

  // Confirmation resets the filter.
  CHECK(!f.candidate().has_value());
  CHECK(f.run_length() == 0);
  CHECK(f.phi() == 1);
}

TEST_CASE("oscillation filter dies on any super-threshold test") {
  OscillationFilter f(0.05, 3);
  CHECK(!f.feed(0.01, 10, 9).has_value());
  CHECK(!f.feed(0.02, 11, 9).has_value());
  CHECK(f.run_length() == 2);
  CHECK(!f.feed(0.9, 12, 9).has_value());  // streak broken
  CHECK(!f.candidate().has_value());
  CHECK(f.run_length() == 0);

  // A fresh streak restarts from scratch at the new position.
  CHECK(!f.feed(0.01, 13, 9).has_value());
  CHECK(f.candidate() == 13);
  CHECK(!f.feed(0.01, 14, 9).has_value());
  const auto c = f.feed(0.01, 15, 9);
  REQUIRE(c.has_value());
  CHECK(c->position == 13);

  // Exactly-threshold p does not count as sub-threshold.
  OscillationFilter g(0.05, 1);
  CHECK(!g.feed(0.05, 1, 2).has_value());
  CHECK(!g.candidate().has_value());
}

TEST_CASE("oscillation filter with a large window grows phi") {
  OscillationFilter f(0.05, 3);
  CHECK(!f.feed(0.01, 0, 30).has_value());
  CHECK(f.phi() == 10);
  for (int t = 1; t < 9; ++t) CHECK(!f.feed(0.01, t, 30).has_value());
  const auto c = f.feed(0.01, 9, 30);
  REQUIRE(c.has_value());
  CHECK(c->position == 0);
  CHECK(c->confirmed_at == 9);
}

TEST_CASE("adapt_window follows the distinct-run ratio with clamping") {
  CHECK(adapt_window(10, 10, 100, 40, 1000) == 100);
  CHECK(adapt_window(10, 12, 100, 40, 1000) == 120);
  CHECK(adapt_window(12, 10, 100, 40, 1000) == 83);
  CHECK(adapt_window(10, 1, 100, 40, 1000) == 40);    // clamp at lo
  CHECK(adapt_window(10, 100, 100, 40, 120) == 120);  // clamp at hi
  CHECK(adapt_window(10, 0, 100, 0, 1000) == 1);      // never below one
  CHECK_THROWS_AS(adapt_window(0, 5, 100, 40, 1000), std::invalid_argument);
}

TEST_CASE("min_window_for_test implements the 5-percent rare-cell rule") {
  const std::vector<std::uint64_t> two_ones{1, 1};
  CHECK(min_window_for_test(two_ones) == 10);
  const std::vector<std::uint64_t> single{1};
  CHECK(min_window_for_test(single) == 5);
  const std::vector<std::uint64_t> uniform20(20, 1);
  CHECK(min_window_for_test(uniform20) == 100);
  const std::vector<std::uint64_t> fives{5, 5};
  CHECK(min_window_for_test(fives) == 10);

  // With 20 categories one rare cell is allowed, so the rarest category's
  // threshold is skipped.
  std::vector<std::uint64_t> skewed(19, 5);
  skewed.push_back(1);
  CHECK(min_window_for_test(skewed) == 96);

  // Zero-count categories are ignored.
  const std::vector<std::uint64_t> padded{0, 5, 0, 5, 0};
  CHECK(min_window_for_test(padded) == 10);

  const std::vector<std::uint64_t> empty;
  CHECK_THROWS_AS(min_window_for_test(empty), std::invalid_argument);
  const std::vector<std::uint64_t> zeros{0, 0};
  CHECK_THROWS_AS(min_window_for_test(zeros), std::invalid_argument);

  Histogram h;
  h.add("r1");
  h.add("r2");
  CHECK(min_window_for_test(h) == 10);
}

TEST_CASE("two-run switch: frozen p-series and a single confirmed drift") {
  SuddenDetector det(fixed_window_config());
  const auto r = stream_blocks(det, {{"A", 20}, {"B", 30}});

  REQUIRE(r.drifts.size() == 1);
  CHECK(r.drifts[0].position == 23);
  CHECK(r.drifts[0].confirmed_at == 25);
  CHECK(r.drifts[0].window == 10);
  CHECK(r.drifts[0].delay == 12);

  REQUIRE(r.p_series.size() == 31);  // tests at t = 19 .. 49
  const std::map<std::int64_t, double> expected{
      {19, 1.0}, {20, kP1}, {21, kP2}, {22, kP3}, {23, kP4},  {24, kP5},
      {25, kP6}, {29, kP10}, {35, kP4}, {36, kP3}, {37, kP2}, {38, kP1},
  };
  for (std::size_t i = 0; i < r.p_series.size(); ++i) {
    const auto& e = r.p_series[i];
    CHECK(e.stream_index == 19 + static_cast<std::int64_t>(i));
    CHECK(e.window == 10);
    auto it = expected.find(e.stream_index);
    if (it != expected.end()) {
      CAPTURE(e.stream_index);
      CHECK(std::fabs(e.p_value - it->second) < 1e-12);
    }
    if (e.stream_index >= 39) CHECK(e.p_value == 1.0);
  }
  CHECK(det.traces_seen() == 50);
  CHECK(det.window() == 10);
}

TEST_CASE("confirmations within a window of the last anchor merge into one drift") {
  SuddenDetector det(fixed_window_config());
  const auto r = stream_blocks(det, {{"A", 30}, {"B", 30}, {"A", 30}});
  REQUIRE(r.drifts.size() == 2);
  CHECK(r.drifts[0].position == 33);
  CHECK(r.drifts[0].confirmed_at == 35);
  CHECK(r.drifts[0].delay == 12);
  CHECK(r.drifts[1].position == 63);
  CHECK(r.drifts[1].confirmed_at == 65);
  CHECK(r.drifts[1].delay == 12);
}

TEST_CASE("a drift-free single-run stream never tests below threshold") {
  SuddenDetector det(fixed_window_config());
  const auto r = stream_blocks(det, {{"A", 60}});
  CHECK(r.drifts.empty());
  REQUIRE(r.p_series.size() == 41);
  for (const auto& e : r.p_series) CHECK(e.p_value == 1.0);
}

TEST_CASE("the trace overload matches the label overload") {
  SuddenDetector by_labels(fixed_window_config());
  SuddenDetector by_traces(fixed_window_config());
  std::vector<SuddenDrift> drifts_labels;
  std::vector<SuddenDrift> drifts_traces;
  for (int i = 0; i < 50; ++i) {
    const std::string label = i < 20 ? "A" : "B";
    if (auto d = by_labels.observe(one(label))) drifts_labels.push_back(*d);
    Trace t;
    t.case_id = "c" + std::to_string(i);
    t.events.push_back(Event{label, std::nullopt});
    if (auto d = by_traces.observe(t)) drifts_traces.push_back(*d);
  }
  REQUIRE(drifts_labels.size() == drifts_traces.size());
  REQUIRE(by_labels.p_series().size() == by_traces.p_series().size());
  for (std::size_t i = 0; i < by_labels.p_series().size(); ++i) {
    CHECK(by_labels.p_series()[i].p_value == by_traces.p_series()[i].p_value);
  }
}

TEST_CASE("an explicit concurrency oracle reproduces the alpha path") {
  DetectorConfig cfg = fixed_window_config();
  SuddenDetector plain(cfg);
  cfg.oracle_override = [](std::span<const CompactTrace> window) {
    return alpha_concurrency(window);
  };
  SuddenDetector forced(cfg);

  std::vector<SuddenDrift> drifts_plain;
  std::vector<SuddenDrift> drifts_forced;
  for (int i = 0; i < 50; ++i) {
    const std::string label = i < 20 ? "A" : "B";
    if (auto d = plain.observe(one(label))) drifts_plain.push_back(*d);
    if (auto d = forced.observe(one(label))) drifts_forced.push_back(*d);
  }
  REQUIRE(drifts_plain.size() == 1);
  REQUIRE(drifts_forced.size() == 1);
  CHECK(drifts_forced[0].position == drifts_plain[0].position);
  REQUIRE(plain.p_series().size() == forced.p_series().size());
  for (std::size_t i = 0; i < plain.p_series().size(); ++i) {
    CHECK(plain.p_series()[i].p_value == forced.p_series()[i].p_value);
    CHECK(plain.p_series()[i].window == forced.p_series()[i].window);
  }
}

TEST_CASE("min_window derives from the first tested window, capped at init") {
  DetectorConfig cfg;
  cfg.init_window = 10;
  cfg.max_window = 10;

  SuddenDetector single_run(cfg);
  for (int i = 0; i < 20; ++i) single_run.observe(one("A"));
  // First detection window held one run seen ten times: ceil(5*10/10) = 5.
  CHECK(single_run.config().min_window == 5);

  SuddenDetector all_distinct(cfg);
  for (int i = 0; i < 20; ++i) all_distinct.observe(one("x" + std::to_string(i)));
  // Ten singleton categories ask for a window of 50, capped at init 10.
  CHECK(all_distinct.config().min_window == 10);
}

TEST_CASE("window grows with the distinct-run ratio and stalls until refilled") {
  DetectorConfig cfg;
  cfg.init_window = 10;
  cfg.min_window = 4;
  cfg.max_window = 20;
  cfg.max_buffer = 40;
  cfg.chi_threshold = 1e-9;  // keep this a pure window-dynamics test
  SuddenDetector det(cfg);
  for (int i = 0; i < 20; ++i) det.observe(one("A"));
  for (int i = 0; i < 20; ++i) det.observe(one("x" + std::to_string(i)));

  // Tests at t = 19 and 20; the composite distinct count doubles at t = 20,
  // the window jumps to the cap, and testing stalls until 2 * 20 traces
  // are buffered again.
  REQUIRE(det.p_series().size() == 3);
  CHECK(det.p_series()[0].stream_index == 19);
  CHECK(det.p_series()[0].window == 10);
  CHECK(det.p_series()[1].stream_index == 20);
  CHECK(det.p_series()[1].window == 10);  // recorded before adaptation
  CHECK(det.p_series()[2].stream_index == 39);
  CHECK(det.p_series()[2].window == 20);
  CHECK(det.window() == 20);
}

TEST_CASE("window shrinks back toward min_window when variety collapses") {
  DetectorConfig cfg;
  cfg.init_window = 10;
  cfg.min_window = 4;
  cfg.max_window = 20;
  cfg.max_buffer = 40;
  cfg.chi_threshold = 1e-9;
  SuddenDetector det(cfg);
  for (int i = 0; i < 20; ++i) det.observe(one("x" + std::to_string(i)));
  for (int i = 0; i < 20; ++i) det.observe(one("A"));

  REQUIRE(det.p_series().size() == 21);  // tests at every t in 19 .. 39
  CHECK(det.p_series().front().window == 10);
  CHECK(det.p_series().back().window == 4);
  for (const auto& e : det.p_series()) {
    CHECK(e.window >= 4);
    CHECK(e.window <= 20);
  }
  CHECK(det.window() == 4);
}

TEST_CASE("long streams stay consistent once the buffer evicts") {
  DetectorConfig cfg;
  cfg.init_window = 50;
  SuddenDetector det(cfg);  // buffer 1000
  for (int i = 0; i < 1200; ++i) {
    CHECK(!det.observe(one("A")).has_value());
  }
  CHECK(det.traces_seen() == 1200);
  REQUIRE(det.p_series().size() == 1101);
  for (const auto& e : det.p_series()) CHECK(e.p_value == 1.0);
}

TEST_CASE("drain_entry_runs yields each stream index once, in order") {
  SuddenDetector det(fixed_window_config());
  for (int i = 0; i < 50; ++i) det.observe(one(i < 20 ? "A" : "B"));

  const auto entries = det.drain_entry_runs();
  REQUIRE(entries.size() == 50);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CHECK(entries[i].first == static_cast<std::int64_t>(i));
    CHECK(entries[i].second == (i < 20 ? "A#1|" : "B#1|"));
  }
  CHECK(det.drain_entry_runs().empty());

  // Before any window forms there is nothing to drain.
  SuddenDetector idle(fixed_window_config());
  for (int i = 0; i < 10; ++i) idle.observe(one("A"));
  CHECK(idle.drain_entry_runs().empty());
}
