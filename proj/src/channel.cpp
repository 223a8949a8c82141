#include "lis/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace lis {
namespace {

constexpr double kPlaneTolerance = 1e-12;

[[noreturn]] void invalid(const std::string& what) { throw std::invalid_argument("scene: " + what); }

bool inside_box(Vec3 p, Vec3 lo, Vec3 hi, double tol) {
  for (int a = 0; a < 3; ++a) {
    if (p[a] < lo[a] - tol || p[a] > hi[a] + tol) return false;
  }
  return true;
}

// True if the open segment p -> q crosses the panel.
bool segment_hits_panel(Vec3 p, Vec3 q, const Reflector& panel) {
  const int axis = panel.normal_axis();
  const double plane = panel.min[axis];
  const double dp = p[axis] - plane;
  const double dq = q[axis] - plane;
  if (dp * dq >= 0.0) return false;  // same side, or an endpoint on the plane
  const double t = dp / (dp - dq);
  const Vec3 hit = p + t * (q - p);
  for (int a = 0; a < 3; ++a) {
    if (a == axis) continue;
    if (hit[a] < panel.min[a] || hit[a] > panel.max[a]) return false;
  }
  return true;
}

bool blocked(const Scene& scene, Vec3 p, Vec3 q, std::size_t skip) {
  for (std::size_t k = 0; k < scene.reflectors.size(); ++k) {
    if (k == skip) continue;
    if (segment_hits_panel(p, q, scene.reflectors[k])) return true;
  }
  return false;
}

}  // namespace

double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
double distance(Vec3 a, Vec3 b) { return norm(a - b); }

int Reflector::normal_axis() const {
  int axis = -1;
  for (int a = 0; a < 3; ++a) {
    if (max[a] < min[a]) return -1;
    if (max[a] == min[a]) {
      if (axis != -1) return -1;
      axis = a;
    }
  }
  return axis;
}

bool Scene::contains(Vec3 p) const { return inside_box(p, Vec3{}, room, 1e-9); }

std::size_t Trajectory::correct_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), PointLabel::kCorrect));
}

void validate(const Scene& scene) {
  if (!(scene.room.x > 0 && scene.room.y > 0 && scene.room.z > 0)) invalid("room extents must be positive");
  if (!(scene.carrier_hz > 0)) invalid("carrier frequency must be positive");
  if (!(scene.tx_power_w > 0)) invalid("transmit power must be positive");
  if (scene.max_paths < 1) invalid("max_paths must be >= 1");
  if (scene.lis.rows < 1 || scene.lis.cols < 1) invalid("surface needs at least one element");
  if (!(scene.lis.spacing > 0)) invalid("element spacing must be positive");
  const Vec3 far_corner = scene.lis.anchor + Vec3{(scene.lis.cols - 1) * scene.lis.spacing, 0.0,
                                                  (scene.lis.rows - 1) * scene.lis.spacing};
  if (!scene.contains(scene.lis.anchor) || !scene.contains(far_corner)) invalid("surface extends outside the room");
  for (std::size_t k = 0; k < scene.reflectors.size(); ++k) {
    const Reflector& r = scene.reflectors[k];
    const std::string tag = "reflector " + std::to_string(k);
    if (r.normal_axis() < 0) invalid(tag + " is not an axis-aligned panel");
    if (!(r.gamma >= 0.0 && r.gamma <= 1.0)) invalid(tag + " reflection coefficient outside [0, 1]");
    if (!scene.contains(r.min) || !scene.contains(r.max)) invalid(tag + " lies outside the room");
  }
}

void validate(const Trajectory& trajectory, const Scene& scene) {
  if (trajectory.points.empty()) throw std::invalid_argument("trajectory: no points");
  if (trajectory.labels.size() != trajectory.points.size()) {
    throw std::invalid_argument("trajectory: label count does not match point count");
  }
  for (std::size_t j = 0; j < trajectory.points.size(); ++j) {
    if (!scene.contains(trajectory.points[j])) {
      throw std::invalid_argument("trajectory: point " + std::to_string(j) + " outside the room");
    }
  }
}

std::vector<Vec3> build_lis_grid(const Scene& scene) {
  const LisSpec& lis = scene.lis;
  std::vector<Vec3> grid;
  grid.reserve(lis.element_count());
  for (int r = 0; r < lis.rows; ++r) {
    for (int c = 0; c < lis.cols; ++c) {
      grid.push_back(lis.anchor + Vec3{c * lis.spacing, 0.0, r * lis.spacing});
    }
  }
  return grid;
}

std::vector<Path> trace_paths(const Scene& scene, Vec3 tx, Vec3 rx) {
  const double d_los = distance(tx, rx);
  if (!(d_los > 0.0)) throw std::invalid_argument("trace_paths: transmitter and receiver coincide");

  const double source = std::sqrt(30.0 * scene.tx_power_w);
  const double k = 2.0 * std::numbers::pi / scene.wavelength();

  std::vector<Path> paths;
  paths.push_back({d_los, source / d_los, -k * d_los, 0});

  for (std::size_t idx = 0; idx < scene.reflectors.size(); ++idx) {
    const Reflector& panel = scene.reflectors[idx];
    if (panel.gamma <= 0.0) continue;
    const int axis = panel.normal_axis();
    const double plane = panel.min[axis];
    const double side_tx = tx[axis] - plane;
    const double side_rx = rx[axis] - plane;
    if (side_tx * side_rx <= kPlaneTolerance * kPlaneTolerance) continue;  // opposite sides or on plane

    Vec3 image = rx;
    image[axis] = 2.0 * plane - rx[axis];
    const double t = side_tx / (side_tx - (image[axis] - plane));
    const Vec3 hit = tx + t * (image - tx);
    bool on_panel = true;
    for (int a = 0; a < 3 && on_panel; ++a) {
      if (a != axis && (hit[a] < panel.min[a] || hit[a] > panel.max[a])) on_panel = false;
    }
    if (!on_panel) continue;
    if (blocked(scene, tx, hit, idx) || blocked(scene, hit, rx, idx)) continue;

    const double d = distance(tx, image);
    paths.push_back({d, panel.gamma * source / d, -k * d, 1});
  }

  std::stable_sort(paths.begin(), paths.end(), [](const Path& a, const Path& b) {
    if (a.amplitude != b.amplitude) return a.amplitude > b.amplitude;
    return a.length < b.length;
  });
  if (paths.size() > static_cast<std::size_t>(scene.max_paths)) paths.resize(scene.max_paths);
  return paths;
}

double field_to_channel_factor(const Scene& scene) {
  const double lambda = scene.wavelength();
  return std::sqrt(lambda * lambda / (4.0 * std::numbers::pi * kFreeSpaceImpedance));
}

ChannelSnapshot channel_at(const Scene& scene, Vec3 tx, std::size_t position) {
  const double factor = field_to_channel_factor(scene);
  const std::vector<Vec3> grid = build_lis_grid(scene);
  ChannelSnapshot snapshot;
  snapshot.position = position;
  snapshot.h.reserve(grid.size());
  for (const Vec3& element : grid) {
    std::complex<double> field{0.0, 0.0};
    for (const Path& p : trace_paths(scene, tx, element)) field += std::polar(p.amplitude, p.phase);
    snapshot.h.push_back(factor * field);
  }
  return snapshot;
}

std::vector<ChannelSnapshot> channels_along(const Scene& scene, const Trajectory& trajectory) {
  std::vector<ChannelSnapshot> out;
  out.reserve(trajectory.size());
  for (std::size_t j = 0; j < trajectory.size(); ++j) out.push_back(channel_at(scene, trajectory.points[j], j));
  return out;
}

std::vector<double> ChannelSnapshot::power() const {
  std::vector<double> g(h.size());
  std::transform(h.begin(), h.end(), g.begin(), [](std::complex<double> v) { return std::norm(v); });
  return g;
}

PowerFrame sample_power(const ChannelSnapshot& snapshot, double sigma2, std::uint64_t seed,
                        std::size_t sample) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sample_power: noise variance must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(0.5 * sigma2));
  PowerFrame frame{snapshot.position, sample, std::vector<double>(snapshot.h.size()), sigma2};
  for (std::size_t i = 0; i < snapshot.h.size(); ++i) {
    const double re = snapshot.h[i].real() + noise(rng);
    const double im = snapshot.h[i].imag() + noise(rng);
    frame.w[i] = re * re + im * im;
  }
  return frame;
}

PowerFrame sample_averaged_power(const ChannelSnapshot& snapshot, double sigma2, int averaging,
                                 std::uint64_t seed, std::size_t sample) {
  if (averaging < 1) throw std::invalid_argument("sample_averaged_power: averaging must be >= 1");
  if (averaging == 1) return sample_power(snapshot, sigma2, seed, sample);
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sample_averaged_power: noise variance must be positive");
  const double s = static_cast<double>(averaging);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> mean_noise(0.0, std::sqrt(0.5 * sigma2 / s));
  std::gamma_distribution<double> spread(s - 1.0, 1.0);
  PowerFrame frame{snapshot.position, sample, std::vector<double>(snapshot.h.size()), sigma2};
  for (std::size_t i = 0; i < snapshot.h.size(); ++i) {
    const double re = snapshot.h[i].real() + mean_noise(rng);
    const double im = snapshot.h[i].imag() + mean_noise(rng);
    frame.w[i] = re * re + im * im + sigma2 / s * spread(rng);
  }
  return frame;
}

double average_snr(std::span<const ChannelSnapshot> snapshots, double sigma2) {
  if (snapshots.empty()) throw std::invalid_argument("average_snr: no snapshots");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("average_snr: noise variance must be positive");
  double total = 0.0;
  std::size_t count = 0;
  for (const ChannelSnapshot& s : snapshots) {
    for (const auto& v : s.h) total += std::norm(v);
    count += s.h.size();
  }
  return 10.0 * std::log10(total / (static_cast<double>(count) * sigma2));
}

double sigma_for_snr(std::span<const ChannelSnapshot> snapshots, double target_db) {
  if (snapshots.empty()) throw std::invalid_argument("sigma_for_snr: no snapshots");
  double total = 0.0;
  std::size_t count = 0;
  for (const ChannelSnapshot& s : snapshots) {
    for (const auto& v : s.h) total += std::norm(v);
    count += s.h.size();
  }
  return total / static_cast<double>(count) / std::pow(10.0, target_db / 10.0);
}

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

}  // namespace lis
