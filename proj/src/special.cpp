#include "lis/special.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lis::special {
namespace {

constexpr double kSeriesLimit = 25.0;
constexpr double kTermTolerance = 1e-17;

void check_argument(double x, const char* name) {
  if (!(x >= 0.0)) {
    throw std::domain_error(std::string(name) + ": argument must be >= 0, got " +
                            std::to_string(x));
  }
}

// sum_{k>=1} q^k / (k! (k + nu)!) * nu!, i.e. the series tail after the
// leading 1 for I_nu(x) / ((x/2)^nu / nu!) with q = x^2 / 4, nu in {0, 1}.
double series_tail(double q, int nu) {
  double term = 1.0;
  double sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + nu));
    sum += term;
    if (term <= kTermTolerance * sum) break;
  }
  return sum;
}

// 1 + sum_k t_k of the Hankel expansion e^x / sqrt(2 pi x) * (...).
double hankel_sum(double x, int nu) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (odd * odd - mu) / (8.0 * k * x);
    if (std::abs(next) >= std::abs(term)) break;  // past the smallest term
    term = next;
    sum += term;
    if (std::abs(term) <= kTermTolerance * std::abs(sum)) break;
  }
  return sum;
}

}  // namespace

double log_bessel_i0(double x) {
  check_argument(x, "log_bessel_i0");
  if (x <= kSeriesLimit) return std::log1p(series_tail(0.25 * x * x, 0));
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(hankel_sum(x, 0));
}

double log_bessel_i1(double x) {
  check_argument(x, "log_bessel_i1");
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (x <= kSeriesLimit) return std::log(0.5 * x) + std::log1p(series_tail(0.25 * x * x, 1));
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(hankel_sum(x, 1));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0, 1)");
  }
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace lis::special
