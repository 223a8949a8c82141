#include "lis/glrt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lis/kernels.hpp"
#include "lis/random.hpp"
#include "lis/special.hpp"

namespace lis::glrt {
namespace {

using special::log_bessel_i0;
using special::log_bessel_i1;

constexpr double kGFloor = 1e-8;  // in units of sigma2
constexpr double kQuadTolerance = 1e-11;
constexpr unsigned kQuadDepth = 10;
constexpr std::size_t kMcBlock = 256;

void check_sigma2(double sigma2, const char* where) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument(std::string(where) + ": noise variance must be positive");
  }
}

template <class F>
double integrate(F&& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, kQuadDepth, kQuadTolerance);
}

// j(u) = sigma2^2 J for u = g / sigma2, written as the variance of the score
// so that no cancellation occurs at large u. Substituting v = t^2 centres the
// integrand at t = sqrt(u) with unit width.
double unit_fisher(double u) {
  const double su = std::sqrt(u);
  auto integrand = [u, su](double t) {
    if (t <= 0.0) return 0.0;
    const double x = 2.0 * t * su;
    const double li0 = log_bessel_i0(x);
    const double ratio = std::exp(log_bessel_i1(x) - li0);
    const double score = ratio * t / su - 1.0;
    return score * score * std::exp(-(u + t * t) + li0) * 2.0 * t;
  };
  const double lo = std::max(0.0, su - 10.0);
  const double hi = su + 10.0;
  if (su > 1.0) return integrate(integrand, lo, su) + integrate(integrand, su, hi);
  return integrate(integrand, lo, hi);
}

// The alternative written form with Bessel argument 2 g sqrt(w) / sigma2, taken
// literally: (1 / sigma2^2) [int e^{-u-v} (v/u) I1^2(x) / I0(x) dv - 1].
double printed_fisher(double g, double sigma2) {
  const double u = g / sigma2;
  const double sigma = std::sqrt(sigma2);
  auto integrand = [u, sigma](double t) {
    if (t <= 0.0) return 0.0;
    const double x = 2.0 * u * sigma * t;
    const double log_term = -u - t * t + std::log(t * t / u) + 2.0 * log_bessel_i1(x) - log_bessel_i0(x);
    return std::exp(log_term) * 2.0 * t;
  };
  const double centre = std::max(u * sigma, 1.0);
  const double lo = std::max(0.0, centre - 12.0);
  const double hi = centre + 12.0;
  const double integral = integrate(integrand, lo, centre) + integrate(integrand, centre, hi);
  return (integral - 1.0) / (sigma2 * sigma2);
}

class FisherTable {
 public:
  static const FisherTable& instance() {
    static const FisherTable table;
    return table;
  }

  // c(u) = j(u) (1 + 2u), which stays within [1, 1.07].
  double c(double u) const { return spline_(std::log(u)); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  static constexpr double kLogLo = -18.420680743952367;  // log 1e-8
  static constexpr double kLogHi = 13.815510557964274;   // log 1e6
  static constexpr double kStep = 0.05;

  FisherTable() : spline_(build()), lo_(std::exp(kLogLo)), hi_(std::exp(kLogHi)) {}

  static boost::math::interpolators::cardinal_cubic_b_spline<double> build() {
    const auto n = static_cast<std::size_t>(std::ceil((kLogHi - kLogLo) / kStep)) + 1;
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = std::exp(kLogLo + k * kStep);
      values[k] = unit_fisher(u) * (1.0 + 2.0 * u);
    }
    return {values.begin(), values.end(), kLogLo, kStep};
  }

  boost::math::interpolators::cardinal_cubic_b_spline<double> spline_;
  double lo_;
  double hi_;
};

std::size_t nearest_rank_index(double alpha, std::size_t n) {
  const auto rank = static_cast<std::size_t>(std::ceil((1.0 - alpha) * static_cast<double>(n)));
  return std::clamp<std::size_t>(rank, 1, n) - 1;
}

// Per-point pieces of -2 log Lambda that do not depend on the other points.
struct Query {
  std::vector<double> g;
  std::vector<double> g_arg;  // g or g^2 depending on the convention
  double own_bessel = 0.0;    // sum_k sum_i log I0(arg(g_i, w_ki))
};

const std::vector<double>& bessel_arg(const std::vector<double>& g, std::vector<double>& scratch,
                                      BesselArgument convention) {
  if (convention == BesselArgument::kPowerDensity) return g;
  scratch.resize(g.size());
  std::transform(g.begin(), g.end(), scratch.begin(), [](double v) { return v * v; });
  return scratch;
}

double bessel_sum(std::span<const double> arg, std::span<const PowerFrame> frames, double scale) {
  double total = 0.0;
  for (const PowerFrame& f : frames) total += kernels::sum_log_i0_sqrt(arg, f.w, scale);
  return total;
}

void check_frames(std::span<const PowerFrame> frames, std::size_t m, const char* where) {
  if (frames.empty()) throw std::invalid_argument(std::string(where) + ": no frames");
  for (const PowerFrame& f : frames) {
    if (f.w.size() != m) throw std::invalid_argument(std::string(where) + ": frame size does not match the model");
  }
}

Query make_query(const GlrtModel& model, std::span<const PowerFrame> frames) {
  const std::size_t m = model.element_count();
  check_frames(frames, m, "glrt evaluate");
  if (frames.size() != model.config.n_valid) {
    throw std::invalid_argument("glrt evaluate: expected " + std::to_string(model.config.n_valid) + " frames, got " +
                                std::to_string(frames.size()));
  }
  Query q;
  q.g = estimate_g(frames, model.sigma2);
  std::vector<double> scratch;
  q.g_arg = bessel_arg(q.g, scratch, model.config.convention);
  q.own_bessel = bessel_sum(q.g_arg, frames, 2.0 / model.sigma2);
  return q;
}

PointStatistic statistic_at(const GlrtModel& model, const PointModel& p, const Query& q,
                            std::span<const PowerFrame> frames) {
  std::vector<double> scratch;
  const auto& arg0 = bessel_arg(p.g0, scratch, model.config.convention);
  const double trained = bessel_sum(arg0, frames, 2.0 / model.sigma2);
  double linear = 0.0;
  for (std::size_t i = 0; i < q.g.size(); ++i) linear += q.g[i] - p.g0[i];
  const double log_lambda = trained - q.own_bessel + static_cast<double>(frames.size()) * linear / model.sigma2;
  return {p.point, -2.0 * log_lambda, p.threshold};
}

}  // namespace

Estimate estimate_g_detailed(std::span<const PowerFrame> frames, double sigma2) {
  if (frames.empty()) throw std::invalid_argument("estimate_g: no frames");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("estimate_g: negative noise variance");
  const std::size_t m = frames.front().w.size();
  Estimate e;
  e.unclamped.assign(m, 0.0);
  for (const PowerFrame& f : frames) {
    if (f.w.size() != m) throw std::invalid_argument("estimate_g: frames differ in size");
    for (std::size_t i = 0; i < m; ++i) e.unclamped[i] += f.w[i];
  }
  const double n = static_cast<double>(frames.size());
  for (double& v : e.unclamped) v = v / n - sigma2;
  e.g.resize(m);
  std::transform(e.unclamped.begin(), e.unclamped.end(), e.g.begin(), [](double v) { return std::max(v, 0.0); });
  return e;
}

std::vector<double> estimate_g(std::span<const PowerFrame> frames, double sigma2) {
  return estimate_g_detailed(frames, sigma2).g;
}

double log_lambda(std::span<const double> g0, std::span<const double> g, std::span<const PowerFrame> frames,
                  double sigma2, BesselArgument convention) {
  check_sigma2(sigma2, "log_lambda");
  if (g0.size() != g.size()) throw std::invalid_argument("log_lambda: g0 and g differ in size");
  check_frames(frames, g.size(), "log_lambda");
  std::vector<double> a0(g0.begin(), g0.end()), a1(g.begin(), g.end());
  if (convention == BesselArgument::kAsPrinted) {
    for (double& v : a0) v *= v;
    for (double& v : a1) v *= v;
  }
  const double scale = 2.0 / sigma2;
  double bessel = 0.0;
  for (const PowerFrame& f : frames) {
    bessel += kernels::sum_log_i0_sqrt(a0, f.w, scale) - kernels::sum_log_i0_sqrt(a1, f.w, scale);
  }
  double linear = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) linear += g[i] - g0[i];
  return bessel + static_cast<double>(frames.size()) * linear / sigma2;
}

double fisher_info(double g, double sigma2, BesselArgument convention) {
  check_sigma2(sigma2, "fisher_info");
  if (!(g >= 0.0)) throw std::invalid_argument("fisher_info: channel power must be non-negative");
  const double floored = std::max(g, kGFloor * sigma2);
  const double j = convention == BesselArgument::kPowerDensity
                       ? unit_fisher(floored / sigma2) / (sigma2 * sigma2)
                       : printed_fisher(floored, sigma2);
  if (!std::isfinite(j)) {
    throw std::domain_error("fisher_info: non-finite result at g = " + std::to_string(g) +
                            ", sigma2 = " + std::to_string(sigma2));
  }
  return j;
}

double fisher_info_interpolated(double g, double sigma2) {
  check_sigma2(sigma2, "fisher_info");
  if (!(g >= 0.0)) throw std::invalid_argument("fisher_info: channel power must be non-negative");
  const FisherTable& table = FisherTable::instance();
  const double u = std::max(g / sigma2, table.lo());
  if (u > table.hi()) return fisher_info(g, sigma2);
  return table.c(u) / (sigma2 * sigma2 * (1.0 + 2.0 * u));
}

double worst_case_eps(double g0, double sigma2, std::size_t n_train, double alpha0) {
  if (!(alpha0 > 0.0 && alpha0 <= 1.0)) throw std::invalid_argument("worst_case_eps: alpha0 must be in (0, 1]");
  if (n_train == 0) throw std::invalid_argument("worst_case_eps: n_train must be positive");
  check_sigma2(sigma2, "worst_case_eps");
  const double z = alpha0 == 1.0 ? 0.0 : special::normal_quantile(1.0 - alpha0 / 2.0);
  return z * std::sqrt(sigma2 * (sigma2 + 2.0 * std::max(g0, 0.0)) / static_cast<double>(n_train));
}

std::vector<double> thresholds(std::span<const ThresholdInput> inputs, double sigma2, std::size_t n_valid,
                               double alpha, std::size_t n_mc, std::uint64_t seed) {
  check_sigma2(sigma2, "threshold");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("threshold: alpha must be in (0, 1)");
  if (n_mc < 10000) throw std::invalid_argument("threshold: need at least 1e4 Monte-Carlo draws");
  if (n_valid == 0) throw std::invalid_argument("threshold: n_valid must be positive");
  if (inputs.empty()) return {};
  const std::size_t m = inputs.front().g0.size();

  // D = sum_i N_v J_i (s_i Z_i - eps0_i)^2 = sum_i a_i Z_i^2 + b_i Z_i + c.
  const std::size_t p_count = inputs.size();
  std::vector<double> a(p_count * m), b(p_count * m), c(p_count, 0.0);
  for (std::size_t p = 0; p < p_count; ++p) {
    const ThresholdInput& in = inputs[p];
    if (in.g0.size() != m || in.eps0.size() != m || in.fisher.size() != m) {
      throw std::invalid_argument("threshold: inconsistent element counts");
    }
    for (std::size_t i = 0; i < m; ++i) {
      const double s = std::sqrt(sigma2 * (sigma2 + 2.0 * std::max(in.g0[i], 0.0)) / static_cast<double>(n_valid));
      const double weight = static_cast<double>(n_valid) * in.fisher[i];
      a[p * m + i] = weight * s * s;
      b[p * m + i] = -2.0 * weight * s * in.eps0[i];
      c[p] += weight * in.eps0[i] * in.eps0[i];
    }
  }

  std::vector<double> draws(p_count * n_mc);
  std::vector<double> z(kMcBlock * m), z2(kMcBlock * m), quad(kMcBlock), lin(kMcBlock);
  for (std::size_t start = 0, block = 0; start < n_mc; start += kMcBlock, ++block) {
    const std::size_t rows = std::min(kMcBlock, n_mc - start);
    std::mt19937_64 rng(derive_seed(seed, {block}));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < rows * m; ++k) {
      z[k] = normal(rng);
      z2[k] = z[k] * z[k];
    }
    const std::span<const double> zs(z.data(), rows * m), z2s(z2.data(), rows * m);
    for (std::size_t p = 0; p < p_count; ++p) {
      kernels::gemv(z2s, rows, m, std::span<const double>(a.data() + p * m, m), std::span<double>(quad.data(), rows));
      kernels::gemv(zs, rows, m, std::span<const double>(b.data() + p * m, m), std::span<double>(lin.data(), rows));
      double* out = draws.data() + p * n_mc + start;
      for (std::size_t r = 0; r < rows; ++r) out[r] = quad[r] + lin[r] + c[p];
    }
  }

  const std::size_t rank = nearest_rank_index(alpha, n_mc);
  std::vector<double> result(p_count);
  for (std::size_t p = 0; p < p_count; ++p) {
    auto first = draws.begin() + static_cast<std::ptrdiff_t>(p * n_mc);
    std::nth_element(first, first + static_cast<std::ptrdiff_t>(rank), first + static_cast<std::ptrdiff_t>(n_mc));
    result[p] = *(first + static_cast<std::ptrdiff_t>(rank));
  }
  return result;
}

double threshold(const ThresholdInput& input, double sigma2, std::size_t n_valid, double alpha, std::size_t n_mc,
                 std::uint64_t seed) {
  return thresholds(std::span<const ThresholdInput>(&input, 1), sigma2, n_valid, alpha, n_mc, seed).front();
}

GlrtModel train(std::span<const std::vector<PowerFrame>> frames_per_point, std::span<const std::size_t> point_ids,
                double sigma2, const Config& config) {
  check_sigma2(sigma2, "glrt train");
  if (frames_per_point.empty()) throw std::invalid_argument("glrt train: no correct points");
  if (point_ids.size() != frames_per_point.size()) throw std::invalid_argument("glrt train: point id count mismatch");
  GlrtModel model;
  model.config = config;
  model.sigma2 = sigma2;
  model.points.resize(frames_per_point.size());
  const std::size_t m = frames_per_point.front().empty() ? 0 : frames_per_point.front().front().w.size();
  for (std::size_t p = 0; p < frames_per_point.size(); ++p) {
    const auto& frames = frames_per_point[p];
    if (frames.size() != config.n_train) {
      throw std::invalid_argument("glrt train: point " + std::to_string(point_ids[p]) + " has " +
                                  std::to_string(frames.size()) + " frames, expected " +
                                  std::to_string(config.n_train));
    }
    check_frames(frames, m, "glrt train");
    PointModel& pm = model.points[p];
    pm.point = point_ids[p];
    pm.g0 = estimate_g(frames, sigma2);
    pm.eps0.resize(m);
    pm.fisher.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      pm.eps0[i] = worst_case_eps(pm.g0[i], sigma2, config.n_train, config.alpha0);
      pm.fisher[i] = config.convention == BesselArgument::kPowerDensity
                         ? fisher_info_interpolated(pm.g0[i], sigma2)
                         : fisher_info(pm.g0[i], sigma2, config.convention);
    }
  }
  std::vector<ThresholdInput> inputs;
  inputs.reserve(model.points.size());
  for (const PointModel& pm : model.points) inputs.push_back({pm.g0, pm.eps0, pm.fisher});
  const auto eta = thresholds(inputs, sigma2, config.n_valid, config.alpha, config.n_mc, config.seed);
  for (std::size_t p = 0; p < model.points.size(); ++p) model.points[p].threshold = eta[p];
  return model;
}

Evaluation evaluate(const GlrtModel& model, std::span<const PowerFrame> frames) {
  if (model.points.empty()) throw std::invalid_argument("glrt evaluate: empty model");
  const Query q = make_query(model, frames);
  Evaluation e;
  e.anomalous = true;
  e.per_point.reserve(model.points.size());
  for (const PointModel& p : model.points) {
    e.per_point.push_back(statistic_at(model, p, q, frames));
    if (!e.per_point.back().rejected()) e.anomalous = false;
  }
  return e;
}

bool is_anomalous(const GlrtModel& model, std::span<const PowerFrame> frames) {
  if (model.points.empty()) throw std::invalid_argument("glrt evaluate: empty model");
  const Query q = make_query(model, frames);
  std::vector<std::pair<double, std::size_t>> order(model.points.size());
  for (std::size_t p = 0; p < model.points.size(); ++p) {
    order[p] = {kernels::squared_distance(q.g, model.points[p].g0), p};
  }
  std::sort(order.begin(), order.end());
  for (const auto& [dist, p] : order) {
    if (!statistic_at(model, model.points[p], q, frames).rejected()) return false;
  }
  return true;
}

}  // namespace lis::glrt
