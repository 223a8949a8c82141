#pragma once

// Generalized likelihood-ratio test on per-antenna received powers.
//
// Training estimates the channel power at every correct-route point from N_t
// noisy frames and derives a per-point threshold on -2 log Lambda. A query
// point (N_v fresh frames) is declared anomalous when the test rejects at
// every trained point.
//
// Likelihood used throughout: for w = |h + n|^2 with n ~ CN(0, sigma2),
//   f(w | g) = exp(-(w + g) / sigma2) I0(2 sqrt(g w) / sigma2) / sigma2.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "lis/channel.hpp"

namespace lis::glrt {

/// Argument of the Bessel terms. kPowerDensity is 2 sqrt(g w) / sigma2, which
/// is what the power density above gives. kAsPrinted is 2 g sqrt(w) / sigma2,
/// kept only to reproduce that alternative written form; it is not a valid
/// likelihood for g != 1 and fails the score-variance check.
enum class BesselArgument { kPowerDensity, kAsPrinted };

struct Config {
  double alpha = 0.05;   // false-alarm level of the per-point test
  double alpha0 = 0.05;  // level of the worst-case training error
  std::size_t n_train = 10;
  std::size_t n_valid = 10;
  std::size_t n_mc = 100000;  // draws for the threshold quantile
  std::uint64_t seed = 1;
  BesselArgument convention = BesselArgument::kPowerDensity;
};

struct PointModel {
  std::size_t point = 0;
  std::vector<double> g0;      // clamped channel power estimates
  std::vector<double> eps0;    // worst-case training errors
  std::vector<double> fisher;  // J evaluated at g0
  double threshold = 0.0;      // -2 eta
};

struct GlrtModel {
  Config config;
  double sigma2 = 0.0;
  std::vector<PointModel> points;

  std::size_t element_count() const { return points.empty() ? 0 : points.front().g0.size(); }
};

struct Estimate {
  std::vector<double> g;          // clamped at 0
  std::vector<double> unclamped;  // sample mean minus sigma2
};

/// Moment estimator: mean power minus sigma2, per element. sigma2 = 0 is
/// accepted here (noiseless frames). Throws on no frames or size mismatch.
Estimate estimate_g_detailed(std::span<const PowerFrame> frames, double sigma2);
std::vector<double> estimate_g(std::span<const PowerFrame> frames, double sigma2);

/// log Lambda = sum_k sum_i [log I0(arg(g0_i, w_ki)) - log I0(arg(g_i, w_ki))]
///            + N_v sum_i (g_i - g0_i) / sigma2.
/// Exactly 0 when g == g0.
double log_lambda(std::span<const double> g0, std::span<const double> g, std::span<const PowerFrame> frames,
                  double sigma2, BesselArgument convention = BesselArgument::kPowerDensity);

/// Fisher information of one power sample about g, by adaptive quadrature.
/// g is floored at 1e-8 sigma2. Throws std::domain_error on a non-finite result.
double fisher_info(double g, double sigma2, BesselArgument convention = BesselArgument::kPowerDensity);

/// Same quantity (kPowerDensity only) from a cached spline of
/// J sigma2 (sigma2 + 2 g) over log(g / sigma2); relative error below 1e-7.
double fisher_info_interpolated(double g, double sigma2);

/// Upper (1 - alpha0 / 2) quantile of N(0, sigma2 (sigma2 + 2 g0) / n_train).
/// alpha0 in (0, 1].
double worst_case_eps(double g0, double sigma2, std::size_t n_train, double alpha0);

/// Inputs of one threshold computation.
struct ThresholdInput {
  std::span<const double> g0;
  std::span<const double> eps0;
  std::span<const double> fisher;
};

/// Empirical (1 - alpha) quantile of D = sum_i N_v J_i (eps_i - eps0_i)^2 with
/// eps_i ~ N(0, sigma2 (sigma2 + 2 g0_i) / N_v), from n_mc seeded draws.
/// All inputs share one stream of standard normals (common random numbers),
/// so the result depends only on (seed, n_mc, M) and the point's own data.
std::vector<double> thresholds(std::span<const ThresholdInput> inputs, double sigma2, std::size_t n_valid,
                               double alpha, std::size_t n_mc, std::uint64_t seed);
double threshold(const ThresholdInput& input, double sigma2, std::size_t n_valid, double alpha, std::size_t n_mc,
                 std::uint64_t seed);

/// Trains one PointModel per entry of frames_per_point (N_t frames each).
GlrtModel train(std::span<const std::vector<PowerFrame>> frames_per_point, std::span<const std::size_t> point_ids,
                double sigma2, const Config& config);

struct PointStatistic {
  std::size_t point = 0;
  double statistic = 0.0;  // -2 log Lambda
  double threshold = 0.0;
  bool rejected() const { return statistic > threshold; }
};

struct Evaluation {
  bool anomalous = false;
  std::vector<PointStatistic> per_point;  // in model order
};

/// Full evaluation against every trained point. Throws on dimension mismatch.
Evaluation evaluate(const GlrtModel& model, std::span<const PowerFrame> frames);

/// Decision only. Visits trained points nearest to the query estimate first
/// and stops at the first acceptance; same answer as evaluate().anomalous.
bool is_anomalous(const GlrtModel& model, std::span<const PowerFrame> frames);

/// Versioned flat binary: magic, version, config, sigma2, M, P, then per
/// point its id, g0, eps0, J and threshold (little-endian doubles).
void save_model(std::ostream& out, const GlrtModel& model);
GlrtModel load_model(std::istream& in);
void save_model(const std::filesystem::path& path, const GlrtModel& model);
GlrtModel load_model(const std::filesystem::path& path);

}  // namespace lis::glrt
