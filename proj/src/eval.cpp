#include "rundrift/eval.hpp"

#include <algorithm>
#include <limits>

namespace rundrift {
namespace {

void finalize(EvalResult& r) {
  const double reported = static_cast<double>(r.tp + r.fp);
  const double actual = static_cast<double>(r.tp + r.fn);
  r.precision = reported > 0.0 ? r.tp / reported : 0.0;
  r.recall = actual > 0.0 ? r.tp / actual : 0.0;
  r.f_score = (r.precision + r.recall) > 0.0
                  ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                  : 0.0;
  if (!r.delays.empty()) {
    double sum = 0.0;
    for (const std::int64_t d : r.delays) sum += static_cast<double>(d);
    r.mean_delay = sum / static_cast<double>(r.delays.size());
  }
}

}  // namespace

EvalResult score_sudden(std::span<const SuddenDrift> detections,
                        std::span<const std::int64_t> gold) {
  EvalResult r;
  for (const std::int64_t g : gold) {
    PerDriftEntry e;
    e.gold_start = e.gold_end = g;
    r.per_drift.push_back(e);
  }
  for (const SuddenDrift& d : detections) {
    bool hit = false;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (r.per_drift[i].matched) continue;
      const std::int64_t lo = gold[i];
      const std::int64_t hi = (i + 1 < gold.size())
                                  ? gold[i + 1]
                                  : std::numeric_limits<std::int64_t>::max();
      if (d.position >= lo && d.position < hi) {
        PerDriftEntry& e = r.per_drift[i];
        e.matched = true;
        e.det_start = e.det_end = d.position;
        e.delay = d.confirmed_at - lo;
        ++r.tp;
        r.delays.push_back(e.delay);
        hit = true;
        break;
      }
    }
    if (!hit) ++r.fp;
  }
  r.fn = static_cast<int>(gold.size()) - r.tp;
  finalize(r);
  return r;
}

EvalResult score_gradual(
    std::span<const GradualDrift> detections,
    std::span<const std::pair<std::int64_t, std::int64_t>> gold) {
  EvalResult r;
  for (const auto& [gs, ge] : gold) {
    PerDriftEntry e;
    e.gold_start = gs;
    e.gold_end = ge;
    r.per_drift.push_back(e);
  }
  for (const GradualDrift& d : detections) {
    bool hit = false;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (r.per_drift[i].matched) continue;
      const auto [gs, ge] = gold[i];
      const std::int64_t centre = (gs + ge - 1) / 2;  // middle of [gs, ge)
      if (d.start <= centre && centre <= d.end) {
        PerDriftEntry& e = r.per_drift[i];
        e.matched = true;
        e.det_start = d.start;
        e.det_end = d.end;
        e.delay = std::max<std::int64_t>(0, d.end + d.delay - ge);
        ++r.tp;
        r.delays.push_back(e.delay);
        hit = true;
        break;
      }
    }
    if (!hit) ++r.fp;
  }
  r.fn = static_cast<int>(gold.size()) - r.tp;
  finalize(r);
  return r;
}

}  // namespace rundrift
