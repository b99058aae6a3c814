#include "rundrift/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rundrift {

void Histogram::add(const std::string& key, std::uint64_t n) {
  counts[key] += n;
  total += n;
}

std::uint64_t Histogram::count(const std::string& key) const {
  auto it = counts.find(key);
  return it == counts.end() ? 0 : it->second;
}

ContingencyTable ContingencyTable::from_histograms(const Histogram& ref, const Histogram& det) {
  ContingencyTable t;
  auto a = ref.counts.begin();
  auto b = det.counts.begin();
  while (a != ref.counts.end() || b != det.counts.end()) {
    if (b == det.counts.end() || (a != ref.counts.end() && a->first < b->first)) {
      t.categories.push_back(a->first);
      t.ref_counts.push_back(a->second);
      t.det_counts.push_back(0);
      ++a;
    } else if (a == ref.counts.end() || b->first < a->first) {
      t.categories.push_back(b->first);
      t.ref_counts.push_back(0);
      t.det_counts.push_back(b->second);
      ++b;
    } else {
      t.categories.push_back(a->first);
      t.ref_counts.push_back(a->second);
      t.det_counts.push_back(b->second);
      ++a;
      ++b;
    }
  }
  return t;
}

namespace {

constexpr int kMaxIter = 600;
constexpr double kEps = 1e-16;

// Regularized lower incomplete gamma P(a, x), series expansion.
// Converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x), continued fraction with
// modified Lentz evaluation. Used for x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    double an = -static_cast<double>(i) * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double chi2_cdf(double x, int df) {
  if (df < 1) throw std::domain_error("chi2_cdf: df must be >= 1");
  if (!(x >= 0.0)) throw std::domain_error("chi2_cdf: x must be >= 0");
  if (x == 0.0) return 0.0;
  double a = 0.5 * df;
  double xx = 0.5 * x;
  if (xx < a + 1.0) return gamma_p_series(a, xx);
  return 1.0 - gamma_q_cf(a, xx);
}

double chi2_critical(double alpha, int df) {
  if (df < 1) throw std::domain_error("chi2_critical: df must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("chi2_critical: alpha must be in (0, 1)");
  double target = 1.0 - alpha;
  double lo = 0.0;
  double hi = df + 10.0;
  while (chi2_cdf(hi, df) < target) hi *= 2.0;
  while (hi - lo > 1e-9) {
    double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, df) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::optional<double> chi2_independence_counts(std::span<const std::uint64_t> ref,
                                               std::span<const std::uint64_t> det) {
  if (ref.size() != det.size()) {
    throw std::invalid_argument("chi2_independence: column length mismatch");
  }
  std::uint64_t ref_total = 0;
  std::uint64_t det_total = 0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (ref[i] + det[i] == 0) continue;  // zero row total: category dropped
    ++kept;
    ref_total += ref[i];
    det_total += det[i];
  }
  if (kept < 2 || ref_total == 0 || det_total == 0) return std::nullopt;

  double grand = static_cast<double>(ref_total) + static_cast<double>(det_total);
  double stat = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    double row = static_cast<double>(ref[i]) + static_cast<double>(det[i]);
    if (row == 0.0) continue;
    double e_ref = row * ref_total / grand;
    double e_det = row * det_total / grand;
    double d_ref = ref[i] - e_ref;
    double d_det = det[i] - e_det;
    stat += d_ref * d_ref / e_ref + d_det * d_det / e_det;
  }
  int df = static_cast<int>(kept) - 1;
  return 1.0 - chi2_cdf(stat, df);
}

std::optional<double> chi2_independence(const ContingencyTable& table) {
  if (table.categories.size() != table.ref_counts.size() ||
      table.categories.size() != table.det_counts.size()) {
    throw std::invalid_argument("chi2_independence: table column length mismatch");
  }
  return chi2_independence_counts(table.ref_counts, table.det_counts);
}

double gof_statistic(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size()) {
    throw std::invalid_argument("gof_statistic: length mismatch");
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw std::domain_error("gof_statistic: expected entry <= 0");
    double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return stat;
}

AlignedHistograms align(const Histogram& before, const Histogram& in, const Histogram& after) {
  std::vector<std::string> keys;
  for (const auto& [k, _] : before.counts) keys.push_back(k);
  for (const auto& [k, _] : in.counts) keys.push_back(k);
  for (const auto& [k, _] : after.counts) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  // Reference mixture used only to decide pooling: weights that would map
  // half of the inner mass onto each flanking histogram.
  double xw = before.total > 0 ? 0.5 * static_cast<double>(in.total) / before.total : 0.0;
  double yw = after.total > 0 ? 0.5 * static_cast<double>(in.total) / after.total : 0.0;

  AlignedHistograms out;
  std::uint64_t pool_b = 0, pool_i = 0, pool_a = 0;
  for (const auto& k : keys) {
    std::uint64_t b = before.count(k);
    std::uint64_t i = in.count(k);
    std::uint64_t a = after.count(k);
    double expected = xw * b + yw * a;
    if (expected < 1.0) {
      ++out.pooled_categories;
      out.pooled_mass += b + i + a;
      pool_b += b;
      pool_i += i;
      pool_a += a;
      continue;
    }
    out.categories.push_back(k);
    out.before.push_back(b);
    out.in.push_back(i);
    out.after.push_back(a);
  }
  if (out.pooled_categories > 0) {
    out.categories.push_back(kPooledCategory);
    out.before.push_back(pool_b);
    out.in.push_back(pool_i);
    out.after.push_back(pool_a);
  }
  out.df = static_cast<int>(out.categories.size()) - 1;
  return out;
}

}  // namespace rundrift
