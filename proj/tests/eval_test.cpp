#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "rundrift/eval.hpp"

using namespace rundrift;

namespace {

SuddenDrift sudden(std::int64_t position, std::int64_t confirmed_at) {
  SuddenDrift d;
  d.position = position;
  d.confirmed_at = confirmed_at;
  d.window = 50;
  d.delay = confirmed_at - position + d.window;
  return d;
}

GradualDrift gradual(std::int64_t start, std::int64_t end, std::int64_t delay) {
  GradualDrift d;
  d.start = start;
  d.end = end;
  d.delay = delay;
  return d;
}

}  // namespace

TEST_CASE("sudden scoring: perfect detection run") {
  const std::vector<std::int64_t> gold{500, 1000, 1500};
  const std::vector<SuddenDrift> detections{
      sudden(505, 540), sudden(1010, 1055), sudden(1503, 1560)};
  const EvalResult r = score_sudden(detections, gold);
  CHECK(r.tp == 3);
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);
  CHECK(r.precision == doctest::Approx(1.0));
  CHECK(r.recall == doctest::Approx(1.0));
  CHECK(r.f_score == doctest::Approx(1.0));
  CHECK(r.delays == std::vector<std::int64_t>{40, 55, 60});
  CHECK(r.mean_delay == doctest::Approx((40.0 + 55.0 + 60.0) / 3.0));

  REQUIRE(r.per_drift.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(r.per_drift[i].gold_start == gold[i]);
    CHECK(r.per_drift[i].gold_end == gold[i]);
    CHECK(r.per_drift[i].matched);
    CHECK(r.per_drift[i].det_start == detections[i].position);
  }
}

TEST_CASE("sudden scoring: misses, extras and empty inputs") {
  const std::vector<std::int64_t> gold{500, 1000};

  const EvalResult none = score_sudden({}, gold);
  CHECK(none.tp == 0);
  CHECK(none.fn == 2);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f_score == 0.0);
  CHECK(none.mean_delay == 0.0);
  CHECK(none.per_drift.size() == 2);
  CHECK(!none.per_drift[0].matched);

  const std::vector<SuddenDrift> noise{sudden(600, 610), sudden(700, 710)};
  const EvalResult spurious = score_sudden(noise, {});
  CHECK(spurious.tp == 0);
  CHECK(spurious.fp == 2);
  CHECK(spurious.fn == 0);
  CHECK(spurious.precision == 0.0);
  CHECK(spurious.recall == 0.0);
  CHECK(spurious.per_drift.empty());

  const EvalResult empty = score_sudden({}, {});
  CHECK(empty.tp == 0);
  CHECK(empty.fp == 0);
  CHECK(empty.fn == 0);
}

TEST_CASE("sudden scoring: a gold point accepts only one detection") {
  const std::vector<std::int64_t> gold{100, 200};
  const std::vector<SuddenDrift> detections{sudden(150, 160), sudden(170, 180)};
  const EvalResult r = score_sudden(detections, gold);
  // Both reports sit in [100, 200); the second finds gold 100 taken and
  // does not reach into [200, inf).
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.precision == doctest::Approx(0.5));
  CHECK(r.recall == doctest::Approx(0.5));
  CHECK(r.f_score == doctest::Approx(0.5));
  CHECK(r.delays == std::vector<std::int64_t>{60});
}

TEST_CASE("sudden scoring: interval boundaries and early noise") {
  const std::vector<std::int64_t> gold{100, 200};
  // Exactly on the next gold point -> belongs to that gold point.
  const std::vector<SuddenDrift> at_boundary{sudden(200, 210)};
  const EvalResult rb = score_sudden(at_boundary, gold);
  CHECK(rb.tp == 1);
  CHECK(rb.per_drift[0].matched == false);
  CHECK(rb.per_drift[1].matched == true);
  CHECK(rb.per_drift[1].delay == 10);

  // Before the first gold point nothing can match.
  const std::vector<SuddenDrift> early{sudden(50, 60)};
  const EvalResult re = score_sudden(early, gold);
  CHECK(re.tp == 0);
  CHECK(re.fp == 1);

  // The last interval extends to infinity.
  const std::vector<SuddenDrift> late{sudden(5000, 5100)};
  const EvalResult rl = score_sudden(late, gold);
  CHECK(rl.tp == 1);
  CHECK(rl.per_drift[1].matched);
  CHECK(rl.per_drift[1].delay == 5100 - 200);
}

TEST_CASE("sudden scoring: counts always reconcile") {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> n_gold(0, 6);
  std::uniform_int_distribution<int> n_det(0, 8);
  std::uniform_int_distribution<std::int64_t> pos(0, 2000);
  for (int round = 0; round < 200; ++round) {
    std::vector<std::int64_t> gold;
    const int ng = n_gold(rng);
    for (int i = 0; i < ng; ++i) gold.push_back(pos(rng));
    std::sort(gold.begin(), gold.end());
    gold.erase(std::unique(gold.begin(), gold.end()), gold.end());

    std::vector<SuddenDrift> detections;
    const int nd = n_det(rng);
    for (int i = 0; i < nd; ++i) {
      const std::int64_t p = pos(rng);
      detections.push_back(sudden(p, p + 10));
    }

    const EvalResult r = score_sudden(detections, gold);
    CHECK(r.tp + r.fn == static_cast<int>(gold.size()));
    CHECK(r.tp + r.fp == static_cast<int>(detections.size()));
    CHECK(r.delays.size() == static_cast<std::size_t>(r.tp));
    CHECK(r.per_drift.size() == gold.size());
    int matched = 0;
    for (const auto& e : r.per_drift) matched += e.matched ? 1 : 0;
    CHECK(matched == r.tp);
    if (r.tp + r.fp > 0) {
      CHECK(r.precision == doctest::Approx(static_cast<double>(r.tp) / (r.tp + r.fp)));
    }
    if (r.tp + r.fn > 0) {
      CHECK(r.recall == doctest::Approx(static_cast<double>(r.tp) / (r.tp + r.fn)));
    }
  }
}

TEST_CASE("sudden scoring: disjoint matches are order independent") {
  const std::vector<std::int64_t> gold{100, 200, 300};
  std::vector<SuddenDrift> detections{
      sudden(150, 155), sudden(250, 260), sudden(350, 370), sudden(50, 55)};
  std::sort(detections.begin(), detections.end(),
            [](const SuddenDrift& a, const SuddenDrift& b) { return a.position < b.position; });
  std::vector<std::size_t> order{0, 1, 2, 3};
  do {
    std::vector<SuddenDrift> shuffled;
    for (std::size_t i : order) shuffled.push_back(detections[i]);
    const EvalResult r = score_sudden(shuffled, gold);
    CHECK(r.tp == 3);
    CHECK(r.fp == 1);
    CHECK(r.fn == 0);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST_CASE("gradual scoring: centre containment decides the match") {
  const std::vector<std::pair<std::int64_t, std::int64_t>> gold{{751, 1250}};
  // centre of [751, 1250) is (751 + 1249) / 2 = 1000

  const std::vector<GradualDrift> hit{gradual(800, 1300, 20)};
  const EvalResult r = score_gradual(hit, gold);
  CHECK(r.tp == 1);
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);
  CHECK(r.delays == std::vector<std::int64_t>{1300 + 20 - 1250});
  REQUIRE(r.per_drift.size() == 1);
  CHECK(r.per_drift[0].matched);
  CHECK(r.per_drift[0].gold_start == 751);
  CHECK(r.per_drift[0].gold_end == 1250);
  CHECK(r.per_drift[0].det_start == 800);
  CHECK(r.per_drift[0].det_end == 1300);

  const std::vector<GradualDrift> miss{gradual(1200, 1500, 20)};
  const EvalResult rm = score_gradual(miss, gold);
  CHECK(rm.tp == 0);
  CHECK(rm.fp == 1);
  CHECK(rm.fn == 1);
  CHECK(rm.f_score == 0.0);

  // Inclusive at both span ends.
  CHECK(score_gradual(std::vector<GradualDrift>{gradual(1000, 1100, 0)}, gold).tp == 1);
  CHECK(score_gradual(std::vector<GradualDrift>{gradual(900, 1000, 0)}, gold).tp == 1);
  CHECK(score_gradual(std::vector<GradualDrift>{gradual(1001, 1100, 0)}, gold).tp == 0);
}

TEST_CASE("gradual scoring: delay counts traces past the zone end, floored at zero") {
  const std::vector<std::pair<std::int64_t, std::int64_t>> gold{{100, 500}};
  // centre = (100 + 499) / 2 = 299
  const std::vector<GradualDrift> contained{gradual(250, 320, 5)};
  const EvalResult r = score_gradual(contained, gold);
  REQUIRE(r.tp == 1);
  CHECK(r.delays == std::vector<std::int64_t>{0});  // 320 + 5 < 500

  const std::vector<GradualDrift> overrun{gradual(250, 480, 60)};
  const EvalResult ro = score_gradual(overrun, gold);
  REQUIRE(ro.tp == 1);
  CHECK(ro.delays == std::vector<std::int64_t>{40});  // 480 + 60 - 500
}

TEST_CASE("gradual scoring: one detection per gold zone, earliest zone first") {
  const std::vector<std::pair<std::int64_t, std::int64_t>> gold{{100, 200}, {300, 400}};
  // centres 149 and 349; a span covering both claims the first unmatched.
  const std::vector<GradualDrift> wide{gradual(0, 1000, 0), gradual(0, 1000, 0)};
  const EvalResult r = score_gradual(wide, gold);
  CHECK(r.tp == 2);
  CHECK(r.per_drift[0].matched);
  CHECK(r.per_drift[1].matched);

  const std::vector<GradualDrift> repeat{gradual(140, 160, 0), gradual(130, 170, 0)};
  const EvalResult rr = score_gradual(repeat, gold);
  CHECK(rr.tp == 1);
  CHECK(rr.fp == 1);
  CHECK(rr.fn == 1);

  const EvalResult empty = score_gradual({}, {});
  CHECK(empty.tp == 0);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
}
