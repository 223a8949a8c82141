#pragma once

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

namespace lis::testing {

using BigFloat = boost::multiprecision::cpp_bin_float_50;

/// log I0(x) from the power series sum (x^2/4)^k / (k!)^2 in 50-digit arithmetic.
inline double log_i0_oracle(double x) {
  const BigFloat q = BigFloat(x) * BigFloat(x) / 4;
  BigFloat term = 1;
  BigFloat sum = 1;
  for (int k = 1;; ++k) {
    term *= q / (BigFloat(k) * BigFloat(k));
    sum += term;
    if (k > x && term < sum * BigFloat("1e-45")) break;
  }
  return static_cast<double>(boost::multiprecision::log(sum));
}

/// log I1(x), same construction: (x/2) sum (x^2/4)^k / (k! (k+1)!).
inline double log_i1_oracle(double x) {
  const BigFloat q = BigFloat(x) * BigFloat(x) / 4;
  BigFloat term = 1;
  BigFloat sum = 1;
  for (int k = 1;; ++k) {
    term *= q / (BigFloat(k) * BigFloat(k + 1));
    sum += term;
    if (k > x && term < sum * BigFloat("1e-45")) break;
  }
  return static_cast<double>(boost::multiprecision::log(sum * BigFloat(x) / 2));
}

/// One-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t k = 0; k < sample.size(); ++k) {
    const double f = cdf(sample[k]);
    d = std::max({d, (k + 1) / n - f, f - k / n});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Asymptotic KS critical value at the 1% level: 1.628 / sqrt(n_eff).
inline double ks_critical_1pct(double n_eff) { return 1.6276 / std::sqrt(n_eff); }

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Definitional LOF with plain loops and full sorts, for novelty queries.
struct LofOracle {
  std::vector<std::vector<double>> pts;
  std::size_t k;
  bool manhattan;

  double d(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += manhattan ? std::abs(a[i] - b[i]) : (a[i] - b[i]) * (a[i] - b[i]);
    return manhattan ? s : std::sqrt(s);
  }
  // Neighborhood of x among all points except index skip.
  std::pair<double, std::vector<std::size_t>> hood(const std::vector<double>& x, std::size_t skip) const {
    std::vector<double> ds;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != skip) ds.push_back(d(x, pts[j]));
    }
    std::sort(ds.begin(), ds.end());
    const double dk = ds[k - 1];
    std::vector<std::size_t> nk;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != skip && d(x, pts[j]) <= dk) nk.push_back(j);
    }
    return {dk, nk};
  }
  double kdist(std::size_t j) const { return hood(pts[j], j).first; }
  double lrd_of(const std::vector<double>& x, std::size_t skip) const {
    const auto [dk, nk] = hood(x, skip);
    double s = 0;
    for (std::size_t b : nk) s += std::max(kdist(b), d(x, pts[b]));
    return 1.0 / std::max(s / nk.size(), 1e-12);
  }
  double lof_of(const std::vector<double>& x, std::size_t skip) const {
    const auto [dk, nk] = hood(x, skip);
    double s = 0;
    for (std::size_t b : nk) s += lrd_of(pts[b], b);
    return s / (nk.size() * lrd_of(x, skip));
  }
};

}  // namespace lis::testing
