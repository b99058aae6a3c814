#include "rundrift/sudden.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rundrift/run.hpp"

namespace rundrift {

DetectorConfig DetectorConfig::resolved() const {
  DetectorConfig c = *this;
  if (c.init_window < 1) throw std::invalid_argument("init_window must be >= 1");
  if (!(c.chi_threshold > 0.0 && c.chi_threshold < 1.0)) {
    throw std::invalid_argument("chi_threshold must be in (0, 1)");
  }
  if (c.phi_divisor < 1) throw std::invalid_argument("phi_divisor must be >= 1");
  if (c.threads < 1) c.threads = 1;
  if (c.max_buffer == 0) c.max_buffer = 20 * c.init_window;
  if (c.max_window == 0) c.max_window = c.max_buffer / 2;
  if (c.min_window < 0 || c.max_window < 1 || c.max_buffer < 2) {
    throw std::invalid_argument("window bounds must be positive");
  }
  if (c.min_window > c.init_window) {
    throw std::invalid_argument("min_window must be <= init_window");
  }
  if (c.init_window > c.max_window) {
    throw std::invalid_argument("init_window must be <= max_window");
  }
  if (2 * c.max_window > c.max_buffer) {
    throw std::invalid_argument("max_buffer must hold two windows at max_window");
  }
  return c;
}

std::optional<OscillationFilter::Confirmation> OscillationFilter::feed(double p,
                                                                       std::int64_t stream_index,
                                                                       int window) {
  if (p < threshold_) {
    ++d_len_;
    if (!d_trace_) {
      d_trace_ = stream_index;
      d_window_ = window;
      phi_ = (window + phi_divisor_ - 1) / phi_divisor_;
      if (phi_ < 1) phi_ = 1;
    }
    if (d_len_ >= phi_) {
      Confirmation c{*d_trace_, stream_index, d_window_};
      reset();
      return c;
    }
    return std::nullopt;
  }
  reset();
  return std::nullopt;
}

void OscillationFilter::reset() {
  d_trace_.reset();
  d_len_ = 0;
  phi_ = 1;
  d_window_ = -1;
}

int adapt_window(std::size_t prev_distinct, std::size_t new_distinct, int w, int lo, int hi) {
  if (prev_distinct == 0) throw std::invalid_argument("adapt_window: prev_distinct must be > 0");
  double ratio = static_cast<double>(new_distinct) / static_cast<double>(prev_distinct);
  long long next = std::llround(w * ratio);
  next = std::max<long long>(next, lo);
  next = std::min<long long>(next, hi);
  return static_cast<int>(std::max<long long>(next, 1));
}

int min_window_for_test(std::span<const std::uint64_t> category_counts) {
  std::uint64_t total = 0;
  std::size_t k = 0;
  for (auto c : category_counts) {
    if (c == 0) continue;
    total += c;
    ++k;
  }
  if (total == 0 || k == 0) throw std::invalid_argument("min_window_for_test: empty distribution");

  // A window of size w gives every category an expected cell count of
  // w * c_i / total in each column, so category i stops being rare at
  // w_i = ceil(5 * total / c_i). At most 5% of cells may stay rare,
  // which by symmetry is 5% of categories.
  std::vector<std::uint64_t> thresholds;
  thresholds.reserve(k);
  for (auto c : category_counts) {
    if (c == 0) continue;
    thresholds.push_back((5 * total + c - 1) / c);
  }
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  std::size_t allowed = static_cast<std::size_t>(0.05 * static_cast<double>(k));
  std::uint64_t w = (allowed < thresholds.size()) ? thresholds[allowed] : 1;
  return static_cast<int>(std::max<std::uint64_t>(w, 1));
}

int min_window_for_test(const Histogram& h) {
  std::vector<std::uint64_t> counts;
  counts.reserve(h.counts.size());
  for (const auto& [_, c] : h.counts) counts.push_back(c);
  return min_window_for_test(counts);
}

SuddenDetector::SuddenDetector(DetectorConfig cfg)
    : cfg_(cfg.resolved()),
      window_(cfg_.init_window),
      min_window_resolved_(cfg_.min_window > 0),
      filter_(cfg_.chi_threshold, cfg_.phi_divisor) {}

const CompactTrace& SuddenDetector::trace_at(std::int64_t index) const {
  return buffer_[static_cast<std::size_t>(index - buffer_base_)];
}

std::uint32_t SuddenDetector::intern_run_key(std::string key) {
  auto it = run_key_ids_.find(key);
  if (it != run_key_ids_.end()) return it->second;
  std::uint32_t id = static_cast<std::uint32_t>(run_key_names_.size());
  run_key_ids_.emplace(key, id);
  run_key_names_.push_back(std::move(key));
  return id;
}

void SuddenDetector::record_entry(std::int64_t index, std::uint32_t key_id) {
  if (index > max_entered_) {
    entry_runs_.emplace_back(index, run_key_names_[key_id]);
    max_entered_ = index;
  }
}

void SuddenDetector::update_alpha(WindowState& w, std::int64_t nb, std::int64_t ne) {
  // Evidence leaves for indices in [begin, end) \ [nb, ne) and enters
  // for [nb, ne) \ [begin, end); both differences are at most two spans.
  auto remove_span = [&](std::int64_t from, std::int64_t to) {
    for (std::int64_t i = from; i < to; ++i) w.alpha.remove_trace(trace_at(i));
  };
  auto add_span = [&](std::int64_t from, std::int64_t to) {
    for (std::int64_t i = from; i < to; ++i) w.alpha.add_trace(trace_at(i));
  };
  if (ne <= w.begin || nb >= w.end) {  // ranges disjoint
    remove_span(w.begin, w.end);
    add_span(nb, ne);
  } else {
    remove_span(w.begin, std::min(nb, w.end));
    remove_span(std::max(ne, w.begin), w.end);
    add_span(nb, std::min(w.begin, ne));
    add_span(std::max(nb, w.end), ne);
  }
}

void SuddenDetector::rebuild_runs(WindowState& w) {
  w.runs.clear();
  w.counts.clear();
  const ConcurrentSet& pairs =
      cfg_.oracle_override ? w.override_pairs : w.alpha.concurrent_pairs();
  std::size_t n = static_cast<std::size_t>(w.end - w.begin);
  std::vector<CompactTrace> slice(n);
  for (std::size_t i = 0; i < n; ++i) slice[i] = trace_at(w.begin + static_cast<std::int64_t>(i));
  std::vector<Run> runs = build_runs(slice, pairs, labels_, cfg_.threads);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t id = intern_run_key(std::move(runs[i].canonical_key));
    w.runs.push_back(id);
    ++w.counts[id];
    record_entry(w.begin + static_cast<std::int64_t>(i), id);
  }
}

void SuddenDetector::slide_runs(WindowState& w, std::int64_t nb, std::int64_t ne) {
  const ConcurrentSet& pairs =
      cfg_.oracle_override ? w.override_pairs : w.alpha.concurrent_pairs();
  if (ne <= w.begin || nb >= w.end) {  // no overlap: start from scratch
    w.runs.clear();
    w.counts.clear();
    w.begin = w.end = nb;
  }
  auto drop = [&](std::uint32_t id) {
    auto it = w.counts.find(id);
    if (--it->second == 0) w.counts.erase(it);
  };
  while (w.begin < nb && !w.runs.empty()) {  // leaving at the old end
    drop(w.runs.front());
    w.runs.pop_front();
    ++w.begin;
  }
  while (w.end > ne && !w.runs.empty()) {
    drop(w.runs.back());
    w.runs.pop_back();
    --w.end;
  }
  for (std::int64_t i = w.begin - 1; i >= nb; --i) {  // extending left
    Run r = trace_to_run(trace_at(i), pairs, labels_);
    std::uint32_t id = intern_run_key(std::move(r.canonical_key));
    w.runs.push_front(id);
    ++w.counts[id];
    --w.begin;
    record_entry(i, id);
  }
  for (std::int64_t i = w.end; i < ne; ++i) {  // extending right
    Run r = trace_to_run(trace_at(i), pairs, labels_);
    std::uint32_t id = intern_run_key(std::move(r.canonical_key));
    w.runs.push_back(id);
    ++w.counts[id];
    ++w.end;
    record_entry(i, id);
  }
}

void SuddenDetector::update_window(WindowState& w, std::int64_t nb, std::int64_t ne) {
  update_alpha(w, nb, ne);
  bool relation_changed;
  if (cfg_.oracle_override) {
    std::size_t n = static_cast<std::size_t>(ne - nb);
    std::vector<CompactTrace> slice(n);
    for (std::size_t i = 0; i < n; ++i) {
      slice[i] = trace_at(nb + static_cast<std::int64_t>(i));
    }
    ConcurrentSet fresh = cfg_.oracle_override(slice);
    relation_changed = !(fresh == w.override_pairs);
    w.override_pairs = std::move(fresh);
  } else {
    relation_changed = w.alpha.version() != w.built_version;
    w.built_version = w.alpha.version();
  }
  if (relation_changed) {
    w.begin = nb;
    w.end = ne;
    rebuild_runs(w);
  } else {
    slide_runs(w, nb, ne);
    w.begin = nb;
    w.end = ne;
  }
}

std::optional<SuddenDrift> SuddenDetector::observe(const Trace& trace) {
  std::vector<std::string> labels;
  labels.reserve(trace.events.size());
  for (const auto& e : trace.events) labels.push_back(e.label);
  return observe(labels);
}

std::optional<SuddenDrift> SuddenDetector::observe(const std::vector<std::string>& labels) {
  CompactTrace ct;
  ct.reserve(labels.size());
  for (const auto& l : labels) ct.push_back(labels_.intern(l));

  std::int64_t t = seen_++;
  buffer_.push_back(std::move(ct));
  std::optional<SuddenDrift> result = run_test(t);
  evict_stale();
  return result;
}

void SuddenDetector::evict_stale() {
  // Deferred to after the window updates: the incremental alpha diffs of
  // the NEXT step still dereference this step's window begins, so a trace
  // may leave the buffer only once no window starts at or before it.
  while (static_cast<int>(buffer_.size()) > cfg_.max_buffer &&
         buffer_base_ < std::min(ref_.begin, det_.begin)) {
    buffer_.pop_front();
    ++buffer_base_;
  }
}

std::optional<SuddenDrift> SuddenDetector::run_test(std::int64_t t) {
  int w = window_;
  if (static_cast<std::int64_t>(buffer_.size()) < 2 * static_cast<std::int64_t>(w)) {
    return std::nullopt;
  }

  std::int64_t det_b = t - w + 1;
  std::int64_t ref_b = t - 2 * w + 1;
  update_window(ref_, ref_b, det_b);
  update_window(det_, det_b, t + 1);

  // Distinct runs over the composite window.
  std::size_t composite = det_.counts.size();
  for (const auto& [id, _] : ref_.counts) {
    if (det_.counts.find(id) == det_.counts.end()) ++composite;
  }

  if (!min_window_resolved_) {
    std::vector<std::uint64_t> counts;
    counts.reserve(det_.counts.size());
    for (const auto& [_, c] : det_.counts) counts.push_back(c);
    cfg_.min_window = std::min(min_window_for_test(counts), cfg_.init_window);
    min_window_resolved_ = true;
  }

  if (prev_composite_distinct_) {
    window_ = adapt_window(*prev_composite_distinct_, composite, w, cfg_.min_window,
                           cfg_.max_window);
  }
  prev_composite_distinct_ = composite;

  // Contingency table over the union of run categories.
  std::vector<std::uint64_t> ref_col;
  std::vector<std::uint64_t> det_col;
  ref_col.reserve(composite);
  det_col.reserve(composite);
  for (const auto& [id, c] : ref_.counts) {
    ref_col.push_back(c);
    auto it = det_.counts.find(id);
    det_col.push_back(it == det_.counts.end() ? 0 : it->second);
  }
  for (const auto& [id, c] : det_.counts) {
    if (ref_.counts.find(id) != ref_.counts.end()) continue;
    ref_col.push_back(0);
    det_col.push_back(c);
  }

  std::optional<double> p = chi2_independence_counts(ref_col, det_col);
  double p_eff = p.value_or(1.0);  // inapplicable tests count as no evidence
  p_series_.push_back(PSeriesEntry{t, p_eff, w});

  auto confirmation = filter_.feed(p_eff, t, w);
  if (!confirmation) return std::nullopt;

  // Confirmations less than a window apart describe the same drift.
  if (last_confirmation_position_ &&
      confirmation->position - *last_confirmation_position_ < confirmation->window) {
    last_confirmation_position_ = confirmation->position;
    return std::nullopt;
  }
  last_confirmation_position_ = confirmation->position;
  SuddenDrift drift;
  drift.position = confirmation->position;
  drift.confirmed_at = confirmation->confirmed_at;
  drift.window = confirmation->window;
  drift.delay = confirmation->confirmed_at - confirmation->position + confirmation->window;
  return drift;
}

std::vector<std::pair<std::int64_t, std::string>> SuddenDetector::drain_entry_runs() {
  std::vector<std::pair<std::int64_t, std::string>> out;
  out.swap(entry_runs_);
  return out;
}

}  // namespace rundrift
