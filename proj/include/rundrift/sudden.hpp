// Streaming sudden-drift detection. Each arriving trace slides a
// reference and a detection window over the stream; both windows own an
// incremental concurrency relation and the runs of their traces. A
// chi-square test of independence compares the two run distributions,
// the window resizes with the ratio of distinct-run counts, and a drift
// is reported after phi consecutive sub-threshold tests.
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rundrift/concurrency.hpp"
#include "rundrift/event_log.hpp"
#include "rundrift/stats.hpp"

namespace rundrift {

struct DetectorConfig {
  int init_window = 100;
  int min_window = 0;   // 0: derived from the first tested window, capped at init_window
  int max_window = 0;   // 0: max_buffer / 2
  int max_buffer = 0;   // 0: 20 * init_window
  double chi_threshold = 0.05;
  int phi_divisor = 3;  // phi = ceil(window / phi_divisor)
  int threads = 1;      // > 1 parallelizes window rebuilds
  // Optional replacement for the alpha oracle: computes the concurrency
  // relation of a window from its traces. Forces a per-step recompute.
  std::function<ConcurrentSet(std::span<const CompactTrace>)> oracle_override;

  // Fills defaulted fields and checks min_window <= init_window <=
  // max_window and 2 * max_window <= max_buffer. Throws
  // std::invalid_argument on violations.
  DetectorConfig resolved() const;
};

struct SuddenDrift {
  std::int64_t position = 0;      // trace index at the first sub-threshold test
  std::int64_t confirmed_at = 0;  // trace index at the phi-th consecutive one
  std::int64_t delay = 0;         // confirmed_at - position + window
  int window = 0;                 // window size latched when the candidate formed
};

struct PSeriesEntry {
  std::int64_t stream_index;
  double p_value;
  int window;
};

// Consecutive sub-threshold counting (the drift candidate state): a
// candidate forms at the first sub-threshold test, survives only through
// an unbroken run of them, and confirms at length phi.
class OscillationFilter {
 public:
  OscillationFilter(double threshold, int phi_divisor)
      : threshold_(threshold), phi_divisor_(phi_divisor) {}

  struct Confirmation {
    std::int64_t position;
    std::int64_t confirmed_at;
    int window;
  };

  std::optional<Confirmation> feed(double p, std::int64_t stream_index, int window);
  void reset();

  std::optional<std::int64_t> candidate() const { return d_trace_; }
  int run_length() const { return d_len_; }
  int phi() const { return phi_; }

 private:
  double threshold_;
  int phi_divisor_;
  std::optional<std::int64_t> d_trace_;
  int d_len_ = 0;
  int phi_ = 1;
  int d_window_ = -1;
};

// next = clamp(round(w * new_distinct / prev_distinct), lo, hi).
int adapt_window(std::size_t prev_distinct, std::size_t new_distinct, int w, int lo, int hi);

// Smallest window size for which at most 5% of the contingency cells of
// a two-window table drawn from this run distribution would fall below
// an expected frequency of 5.
int min_window_for_test(std::span<const std::uint64_t> category_counts);
int min_window_for_test(const Histogram& h);

class SuddenDetector {
 public:
  explicit SuddenDetector(DetectorConfig cfg);

  std::optional<SuddenDrift> observe(const Trace& trace);
  std::optional<SuddenDrift> observe(const std::vector<std::string>& labels);

  // Run keys assigned to traces when they first entered a window, in
  // stream order; consumed by the pipeline's interval histograms.
  std::vector<std::pair<std::int64_t, std::string>> drain_entry_runs();

  const std::vector<PSeriesEntry>& p_series() const { return p_series_; }
  const DetectorConfig& config() const { return cfg_; }  // resolved values
  int window() const { return window_; }
  std::int64_t traces_seen() const { return seen_; }

 private:
  struct WindowState {
    ConcurrencyState alpha;
    std::deque<std::uint32_t> runs;  // interned run keys, one per trace in [begin, end)
    std::unordered_map<std::uint32_t, std::uint32_t> counts;
    std::int64_t begin = 0;
    std::int64_t end = 0;
    std::uint64_t built_version = 0;
    ConcurrentSet override_pairs;  // only with oracle_override
  };

  const CompactTrace& trace_at(std::int64_t index) const;
  std::optional<SuddenDrift> run_test(std::int64_t t);
  void evict_stale();
  void update_alpha(WindowState& w, std::int64_t nb, std::int64_t ne);
  void rebuild_runs(WindowState& w);
  void slide_runs(WindowState& w, std::int64_t nb, std::int64_t ne);
  void update_window(WindowState& w, std::int64_t nb, std::int64_t ne);
  std::uint32_t intern_run_key(std::string key);
  void record_entry(std::int64_t index, std::uint32_t key_id);

  DetectorConfig cfg_;
  LabelTable labels_;
  std::deque<CompactTrace> buffer_;
  std::int64_t buffer_base_ = 0;  // stream index of buffer_.front()
  std::int64_t seen_ = 0;
  int window_;
  bool min_window_resolved_;

  WindowState ref_;
  WindowState det_;

  std::vector<std::string> run_key_names_;
  std::unordered_map<std::string, std::uint32_t> run_key_ids_;

  std::optional<std::size_t> prev_composite_distinct_;
  OscillationFilter filter_;
  std::optional<std::int64_t> last_confirmation_position_;
  std::int64_t max_entered_ = -1;

  std::vector<PSeriesEntry> p_series_;
  std::vector<std::pair<std::int64_t, std::string>> entry_runs_;
};

}  // namespace rundrift
