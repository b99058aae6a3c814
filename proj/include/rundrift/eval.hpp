#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "rundrift/gradual.hpp"
#include "rundrift/sudden.hpp"

namespace rundrift {

// Per-gold-drift match record: which detection (if any) claimed this gold
// entry and at what delay.  Sudden golds are single positions
// (gold_start == gold_end); gradual golds are [start, end) zones.  The
// detection mirrors that shape via det_start/det_end.
struct PerDriftEntry {
  std::int64_t gold_start = 0;
  std::int64_t gold_end = 0;
  bool matched = false;
  std::int64_t det_start = 0;  // valid when matched
  std::int64_t det_end = 0;    // valid when matched
  std::int64_t delay = 0;      // valid when matched
};

struct EvalResult {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 0.0;  // tp / (tp + fp), 0 when nothing was reported
  double recall = 0.0;     // tp / (tp + fn), 0 when there was nothing to find
  double f_score = 0.0;    // harmonic mean, 0 when precision + recall == 0
  double mean_delay = 0.0; // average detection delay over true positives
  std::vector<std::int64_t> delays;      // one entry per true positive
  std::vector<PerDriftEntry> per_drift;  // one entry per gold drift
};

// Scores sudden-drift reports against gold change points (ascending trace
// indices).  A report is a true positive when its position falls inside
// [g_i, g_{i+1}) for an as-yet unmatched gold point g_i (the last interval
// extends to infinity); the earliest matching report wins.  Its delay is
// confirmed_at - g_i.
EvalResult score_sudden(std::span<const SuddenDrift> detections,
                        std::span<const std::int64_t> gold);

// Scores gradual-drift reports against gold transition zones given as
// half-open [start, end) trace-index intervals.  A report is a true positive
// when its [start, end] span contains the centre of an unmatched gold zone.
// Its delay counts traces read past the zone's end before confirmation.
EvalResult score_gradual(
    std::span<const GradualDrift> detections,
    std::span<const std::pair<std::int64_t, std::int64_t>> gold);

}  // namespace rundrift
