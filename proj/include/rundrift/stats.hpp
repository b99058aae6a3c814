// Chi-square machinery: CDF via the regularized lower incomplete gamma
// function, critical values by bisection, Pearson's test of independence
// over run-frequency contingency tables, and histogram alignment with
// rare-category pooling for the goodness-of-fit path.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rundrift {

// Frequency histogram keyed by canonical run strings.
struct Histogram {
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;

  void add(const std::string& key, std::uint64_t n = 1);
  std::uint64_t count(const std::string& key) const;
  std::size_t distinct() const { return counts.size(); }
  bool operator==(const Histogram&) const = default;
};

// k x 2 contingency table: one row per run category, columns are the
// reference and detection windows.
struct ContingencyTable {
  std::vector<std::string> categories;
  std::vector<std::uint64_t> ref_counts;
  std::vector<std::uint64_t> det_counts;

  static ContingencyTable from_histograms(const Histogram& ref, const Histogram& det);
};

// Name of the synthetic bucket that absorbs pooled rare categories.
// Canonical run keys always contain '|', so this cannot collide.
inline constexpr const char* kPooledCategory = "(pooled)";

// Three histograms brought onto the union of their categories.
// Categories whose expected count under a balanced totals-matching
// mixture of `before` and `after` falls below 1 are pooled into a
// single rare bucket (appended last) before df is computed.
struct AlignedHistograms {
  std::vector<std::string> categories;
  std::vector<std::uint64_t> before;
  std::vector<std::uint64_t> in;
  std::vector<std::uint64_t> after;
  int df = 0;  // number of categories after pooling, minus one
  std::size_t pooled_categories = 0;
  std::uint64_t pooled_mass = 0;  // total observations moved into the bucket
};

// P(x <= X) for a chi-square variable with df degrees of freedom.
// Throws std::domain_error for x < 0 or df < 1.
double chi2_cdf(double x, int df);

// Smallest x with 1 - chi2_cdf(x, df) <= alpha, found by bisection to
// an absolute tolerance of 1e-9. Throws std::domain_error unless
// 0 < alpha < 1 and df >= 1.
double chi2_critical(double alpha, int df);

// Pearson's chi-square test of independence on a k x 2 table.
// Categories with zero row total are dropped first; df = k' - 1.
// Returns the p-value, or nullopt when the test is inapplicable
// (fewer than two surviving categories, or an empty column).
std::optional<double> chi2_independence(const ContingencyTable& table);

// Same test on raw count vectors (categories are implicit by index).
std::optional<double> chi2_independence_counts(std::span<const std::uint64_t> ref,
                                               std::span<const std::uint64_t> det);

// Goodness-of-fit statistic sum((obs - exp)^2 / exp).
// Throws std::invalid_argument on length mismatch and std::domain_error
// when an expected entry is <= 0.
double gof_statistic(std::span<const double> observed, std::span<const double> expected);

AlignedHistograms align(const Histogram& before, const Histogram& in, const Histogram& after);

}  // namespace rundrift
