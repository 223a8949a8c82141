#pragma once

// Local Outlier Factor in novelty mode: the model stores correct-route
// feature vectors and scores each query against them only.
//
// Conventions (A a point, B one of its neighbors):
//   D_K(A)          distance from A to its K-th nearest other point
//   N_K(A)          every other point within D_K(A); ties make it larger than K
//   RD_K(A, B)      max(D_K(A), d(A, B))
//   LRD_K(A)        1 / mean over B in N_K(A) of RD_K(B, A) = max(D_K(B), d(A, B))
//   LOF_K(A)        mean over B in N_K(A) of LRD_K(B), divided by LRD_K(A)
// Mean reachability distances are floored at 1e-12, so exact duplicates give
// a large but finite LRD.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace lis::lof {

enum class Metric { kEuclidean, kManhattan };

inline constexpr double kDistanceFloor = 1e-12;
inline constexpr double kFallbackTau = 1.5;

/// Row-major set of equal-length vectors.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t dim, std::vector<double> data);

  void add(std::span<const double> point);
  std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

struct Neighborhood {
  double k_distance = 0.0;
  std::vector<std::size_t> neighbors;  // indices into the point set, nearest first
  std::vector<double> distances;       // matching distances
};

/// Neighborhood of points[a] among the other points. Throws if fewer than k others.
Neighborhood k_distance(const PointSet& points, std::size_t a, std::size_t k, Metric metric = Metric::kEuclidean);

/// Neighborhood of an outside query among all points.
Neighborhood k_distance(const PointSet& points, std::span<const double> query, std::size_t k,
                        Metric metric = Metric::kEuclidean);

/// RD_K(A, B) = max(D_K(A), d(A, B)) for points A = points[a], B = points[b].
double reachability(const PointSet& points, std::size_t a, std::size_t b, std::size_t k,
                    Metric metric = Metric::kEuclidean);

double lrd(const PointSet& points, std::size_t a, std::size_t k, Metric metric = Metric::kEuclidean);
double lof_score(const PointSet& points, std::size_t a, std::size_t k, Metric metric = Metric::kEuclidean);

struct LofModel {
  std::size_t k = 3;
  Metric metric = Metric::kEuclidean;
  double tau = kFallbackTau;
  PointSet train;
  std::vector<double> k_dist;  // D_K per training point
  std::vector<double> lrd;     // LRD per training point
};

/// Precomputes D_K and LRD of every training point. Needs more than k points.
LofModel fit(PointSet train, std::size_t k, Metric metric = Metric::kEuclidean);

struct Prediction {
  double score = 0.0;
  bool anomalous = false;
};

/// LOF of a query against the training set, flagged when above tau.
Prediction predict(const LofModel& model, std::span<const double> query);

/// LOF of every training point within the training set (leave-self-out).
std::vector<double> training_scores(const LofModel& model);

/// Nearest-rank 99th percentile (or the given quantile) of validation scores,
/// clamped to at least 1; kFallbackTau when validation is empty.
double calibrate_tau(const LofModel& model, const PointSet& validation, double quantile = 0.99);

/// K in candidates maximizing the fraction of correct validation samples scored
/// at or below tau; ties go to the smaller K.
std::size_t select_k(const PointSet& train, const PointSet& validation, std::span<const std::size_t> candidates,
                     Metric metric = Metric::kEuclidean, double tau = kFallbackTau);

/// CSV: header "k,metric,tau,dim,count", one line of values, then one row per
/// training point "k_distance,lrd,x_0,...,x_{dim-1}" (%.17g).
void save_model(std::ostream& out, const LofModel& model);
LofModel load_model(std::istream& in);
void save_model(const std::filesystem::path& path, const LofModel& model);
LofModel load_model(const std::filesystem::path& path);

}  // namespace lis::lof
