#pragma once

// Multipath propagation onto the surface and the noisy power detector model.
//
// The simulator is deliberately small: line of sight plus single-bounce
// specular reflections off axis-aligned rectangular panels, found with the
// image method. Amplitudes follow free-space spreading from an isotropic
// source, and every path carries the phase of its electrical length.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lis {

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kFreeSpaceImpedance = 376.99111843077515;  // 120 pi

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
  double& operator[](int axis) { return axis == 0 ? x : (axis == 1 ? y : z); }
};

double norm(Vec3 v);
double distance(Vec3 a, Vec3 b);

/// Axis-aligned rectangular panel. Exactly one axis is degenerate
/// (min == max); that axis is the panel normal.
struct Reflector {
  Vec3 min;
  Vec3 max;
  double gamma = 0.7;  // real reflection coefficient in [0, 1]

  int normal_axis() const;  // -1 if the box is not a flat panel
};

/// The surface lies in the plane y = anchor.y. Columns advance along +x and
/// rows along +z; element (0, 0) sits at the anchor.
struct LisSpec {
  Vec3 anchor;
  int rows = 32;
  int cols = 32;
  double spacing = 0.0;  // meters

  std::size_t element_count() const { return static_cast<std::size_t>(rows) * cols; }
};

struct Scene {
  Vec3 room;  // extents; the room is [0, room.x] x [0, room.y] x [0, room.z]
  std::vector<Reflector> reflectors;
  LisSpec lis;
  double carrier_hz = 3.5e9;
  double tx_power_w = 0.1;  // 20 dBm
  int max_paths = 10;

  double wavelength() const { return kSpeedOfLight / carrier_hz; }
  bool contains(Vec3 p) const;
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const Scene& scene);

enum class PointLabel { kCorrect, kAnomalous };

struct Trajectory {
  std::vector<Vec3> points;
  std::vector<PointLabel> labels;

  std::size_t size() const { return points.size(); }
  std::size_t correct_count() const;
};

void validate(const Trajectory& trajectory, const Scene& scene);

struct Path {
  double length = 0.0;     // meters
  double amplitude = 0.0;  // field magnitude, V/m
  double phase = 0.0;      // radians
  int bounces = 0;
};

/// Complex channel of one transmitter position: h_i carries the full
/// field-to-power conversion, so |h_i|^2 is in watts.
struct ChannelSnapshot {
  std::size_t position = 0;
  std::vector<std::complex<double>> h;

  std::vector<double> power() const;  // g_i = |h_i|^2
};

struct PowerFrame {
  std::size_t position = 0;
  std::size_t sample = 0;
  std::vector<double> w;  // w_i = |h_i + n_i|^2
  double noise_variance = 0.0;
};

std::vector<Vec3> build_lis_grid(const Scene& scene);

/// Line of sight plus single-bounce specular paths, strongest first, at most
/// scene.max_paths. Reflections blocked by another panel are omitted, as are
/// panels with gamma == 0.
std::vector<Path> trace_paths(const Scene& scene, Vec3 tx, Vec3 rx);

/// sqrt(lambda^2 / (4 pi Z0)) with unit antenna impedance.
double field_to_channel_factor(const Scene& scene);

ChannelSnapshot channel_at(const Scene& scene, Vec3 tx, std::size_t position = 0);
std::vector<ChannelSnapshot> channels_along(const Scene& scene, const Trajectory& trajectory);

/// One noisy detector output, n_i ~ CN(0, sigma2). Same seed, same frame.
PowerFrame sample_power(const ChannelSnapshot& snapshot, double sigma2, std::uint64_t seed,
                        std::size_t sample = 0);

/// Draws the elementwise mean of `averaging` independent frames in one pass,
/// using |h + n_bar|^2 + (sigma2 / S) Gamma(S - 1, 1) with n_bar ~ CN(0, sigma2 / S),
/// which has exactly the distribution of average_frames over S frames.
PowerFrame sample_averaged_power(const ChannelSnapshot& snapshot, double sigma2, int averaging,
                                 std::uint64_t seed, std::size_t sample = 0);

/// Route-averaged SNR in dB: sum |h|^2 / (M T sigma2).
double average_snr(std::span<const ChannelSnapshot> snapshots, double sigma2);

/// Noise variance that makes average_snr equal target_db.
double sigma_for_snr(std::span<const ChannelSnapshot> snapshots, double target_db);

double dbm_to_watts(double dbm);

}  // namespace lis
