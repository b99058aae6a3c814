#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rundrift/stats.hpp"
#include "rundrift/sudden.hpp"

namespace rundrift {

// A pair of neighbouring sudden-drift reports together with the run
// histograms of the three stream intervals they delimit.  The middle
// interval is the suspected transition zone.
struct GradualCandidate {
  SuddenDrift a;
  SuddenDrift b;
  Histogram before;
  Histogram in;
  Histogram after;
};

// A confirmed gradual drift: over [start, end) the process drained out of
// the "before" behaviour and into the "after" behaviour.
struct GradualDrift {
  std::int64_t start = 0;          // position of the opening sudden report
  std::int64_t end = 0;            // position of the closing sudden report
  double weight_before = 0.0;      // normalised mixture weight of "before"
  double weight_after = 0.0;       // normalised mixture weight of "after"
  double x0 = 0.0;                 // raw scale of the "before" component
  double y0 = 0.0;                 // raw scale of the "after" component
  double gof = 0.0;                // goodness-of-fit statistic at the optimum
  double critical = 0.0;           // chi-square critical value it was held to
  std::int64_t delay = 0;          // traces read past `end` before confirming
};

// Minimises the goodness-of-fit statistic of  in ~ x*before + y*after  over
// x, y > 0.  `before`, `in` and `after` are aligned per-category counts (same
// length, pooled as needed).  Returns the optimal (x, y) and writes the
// achieved statistic to *out_gof, or nullopt when no mixture can explain the
// data (some observed category has zero mass in both flanks).
std::optional<std::pair<double, double>> solve_mixture(
    std::span<const double> before, std::span<const double> in,
    std::span<const double> after, double* out_gof);

// Runs the mixture test on one candidate at significance `alpha`.  Returns
// the confirmed drift, or nullopt when the middle interval is not a plausible
// mixture of its flanks.  When `note` is non-null a short human-readable
// reason is stored on rejection.
std::optional<GradualDrift> test_gradual(const GradualCandidate& cand,
                                         double alpha,
                                         std::string* note = nullptr);

struct GradualOutcome {
  std::vector<GradualDrift> gradual;  // confirmed gradual drifts
  std::vector<SuddenDrift> sudden;    // sudden reports not absorbed by one
};

// Classifies a whole detection pass at once.  `drifts` are the sudden
// reports in stream order and `intervals` the run histograms of the
// drifts.size() + 1 stream segments they delimit.  Consecutive pairs are
// tested left to right; both members of a confirmed pair are consumed and
// cannot pair again.
GradualOutcome process_queue(std::span<const SuddenDrift> drifts,
                             std::span<const Histogram> intervals,
                             double alpha);

}  // namespace rundrift
