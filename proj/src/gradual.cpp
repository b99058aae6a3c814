#include "rundrift/gradual.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rundrift {
namespace {

constexpr double kWeightFloor = 1e-6;
constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2
constexpr int kGridSide = 64;
constexpr int kDescentIters = 200;
constexpr double kDescentTol = 1e-9;

// Goodness-of-fit of `in` against the mixture x*before + y*after.  All
// categories with observations are guaranteed a positive expectation by the
// feasibility screen in solve_mixture, so the statistic is always finite.
double mixture_gof(std::span<const double> before, std::span<const double> in,
                   std::span<const double> after, double x, double y) {
  double stat = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const double expected = x * before[k] + y * after[k];
    if (expected <= 0.0) continue;  // zero observed and zero expected
    const double diff = in[k] - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

// Minimises a unimodal function over [lo, hi] by golden-section search.
template <typename F>
double golden_min(F&& f, double lo, double hi) {
  double a = lo;
  double b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 120 && (b - a) > 1e-12 * (1.0 + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

std::optional<std::pair<double, double>> solve_mixture(
    std::span<const double> before, std::span<const double> in,
    std::span<const double> after, double* out_gof) {
  if (before.size() != in.size() || after.size() != in.size()) {
    throw std::invalid_argument("solve_mixture: size mismatch");
  }
  double total_before = 0.0;
  double total_in = 0.0;
  double total_after = 0.0;
  for (std::size_t k = 0; k < in.size(); ++k) {
    total_before += before[k];
    total_in += in[k];
    total_after += after[k];
    // A category observed inside the transition zone but absent from both
    // flanks can never be explained by a mixture of the flanks.
    if (in[k] > 0.0 && before[k] + after[k] <= 0.0) return std::nullopt;
  }
  if (total_in <= 0.0) return std::nullopt;
  double min_positive = std::numeric_limits<double>::infinity();
  if (total_before > 0.0) min_positive = std::min(min_positive, total_before);
  if (total_after > 0.0) min_positive = std::min(min_positive, total_after);
  if (!std::isfinite(min_positive)) return std::nullopt;  // both flanks empty

  const double lo = kWeightFloor;
  const double hi =
      std::max(2.0 * lo, 2.0 * total_in / std::max(1.0, min_positive));
  const double log_lo = std::log(lo);
  const double log_hi = std::log(hi);

  auto f = [&](double x, double y) {
    return mixture_gof(before, in, after, x, y);
  };

  // Coarse log-spaced grid to land in the convex basin, then coordinate-wise
  // golden-section descent.  The objective is jointly convex in (x, y), so
  // each one-dimensional slice is unimodal.
  double best_x = lo;
  double best_y = lo;
  double best_f = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGridSide; ++i) {
    const double x =
        std::exp(log_lo + (log_hi - log_lo) * i / (kGridSide - 1));
    for (int j = 0; j < kGridSide; ++j) {
      const double y =
          std::exp(log_lo + (log_hi - log_lo) * j / (kGridSide - 1));
      const double v = f(x, y);
      if (v < best_f) {
        best_f = v;
        best_x = x;
        best_y = y;
      }
    }
  }
  for (int it = 0; it < kDescentIters; ++it) {
    const double prev = best_f;
    best_x = golden_min([&](double x) { return f(x, best_y); }, lo, hi);
    best_y = golden_min([&](double y) { return f(best_x, y); }, lo, hi);
    best_f = f(best_x, best_y);
    if (std::abs(prev - best_f) < kDescentTol) break;
  }
  if (out_gof != nullptr) *out_gof = best_f;
  return std::make_pair(best_x, best_y);
}

std::optional<GradualDrift> test_gradual(const GradualCandidate& cand,
                                         double alpha, std::string* note) {
  const AlignedHistograms aligned = align(cand.before, cand.in, cand.after);
  if (aligned.df < 1) {
    if (note != nullptr) *note = "degenerate distributions: fewer than two distinct behaviours";
    return std::nullopt;
  }
  const double critical = chi2_critical(alpha, aligned.df);
  std::vector<double> before(aligned.before.begin(), aligned.before.end());
  std::vector<double> in(aligned.in.begin(), aligned.in.end());
  std::vector<double> after(aligned.after.begin(), aligned.after.end());
  double gof = 0.0;
  const auto solution = solve_mixture(before, in, after, &gof);
  if (!solution.has_value()) {
    if (note != nullptr) *note = "no feasible mixture of the flanking behaviours";
    return std::nullopt;
  }
  if (!(gof < critical)) {
    if (note != nullptr) *note = "best mixture rejected by goodness-of-fit";
    return std::nullopt;
  }
  const auto [x, y] = *solution;
  GradualDrift drift;
  drift.start = cand.a.position;
  drift.end = cand.b.position;
  drift.x0 = x;
  drift.y0 = y;
  drift.weight_before = x / (x + y);
  drift.weight_after = y / (x + y);
  drift.gof = gof;
  drift.critical = critical;
  drift.delay = cand.b.confirmed_at - cand.b.position;
  return drift;
}

GradualOutcome process_queue(std::span<const SuddenDrift> drifts,
                             std::span<const Histogram> intervals,
                             double alpha) {
  if (intervals.size() != drifts.size() + 1) {
    throw std::invalid_argument(
        "process_queue: need one interval histogram per stream segment");
  }
  GradualOutcome out;
  std::vector<bool> consumed(drifts.size(), false);
  for (std::size_t i = 0; i + 1 < drifts.size(); ++i) {
    if (consumed[i]) continue;
    GradualCandidate cand{drifts[i],     drifts[i + 1],    intervals[i],
                          intervals[i + 1], intervals[i + 2]};
    auto confirmed = test_gradual(cand, alpha);
    if (confirmed.has_value()) {
      out.gradual.push_back(*confirmed);
      consumed[i] = true;
      consumed[i + 1] = true;
    }
  }
  for (std::size_t i = 0; i < drifts.size(); ++i) {
    if (!consumed[i]) out.sudden.push_back(drifts[i]);
  }
  return out;
}

}  // namespace rundrift
