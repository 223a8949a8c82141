#include "lis/lof.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "lis/kernels.hpp"

namespace lis::lof {
namespace {

// Neighborhood from the distances to every candidate; skip is excluded (the
// point itself) when it is a valid index.
Neighborhood neighborhood_from(std::span<const double> dist, std::size_t k, std::size_t skip) {
  const std::size_t others = dist.size() - (skip < dist.size() ? 1 : 0);
  if (k == 0) throw std::invalid_argument("lof: K must be at least 1");
  if (others < k) {
    throw std::invalid_argument("lof: need at least K = " + std::to_string(k) + " other points, have " +
                                std::to_string(others));
  }
  std::vector<double> pool;
  pool.reserve(others);
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (j != skip) pool.push_back(dist[j]);
  }
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1), pool.end());
  Neighborhood n;
  n.k_distance = pool[k - 1];
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (j != skip && dist[j] <= n.k_distance) n.neighbors.push_back(j);
  }
  std::stable_sort(n.neighbors.begin(), n.neighbors.end(),
                   [&dist](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  n.distances.reserve(n.neighbors.size());
  for (std::size_t j : n.neighbors) n.distances.push_back(dist[j]);
  return n;
}

std::vector<double> distances_to(const PointSet& points, std::span<const double> query, Metric metric) {
  if (query.size() != points.dim()) throw std::invalid_argument("lof: query dimension does not match");
  std::vector<double> d(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) d[j] = distance(points[j], query, metric);
  return d;
}

std::vector<double> distance_matrix(const PointSet& points, Metric metric) {
  const std::size_t n = points.size();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) m[i * n + j] = m[j * n + i] = distance(points[i], points[j], metric);
  }
  return m;
}

double inverse_mean_reach(const Neighborhood& n, std::span<const double> k_dist) {
  double sum = 0.0;
  for (std::size_t t = 0; t < n.neighbors.size(); ++t) sum += std::max(k_dist[n.neighbors[t]], n.distances[t]);
  return 1.0 / std::max(sum / static_cast<double>(n.neighbors.size()), kDistanceFloor);
}

double score_from(const Neighborhood& n, std::span<const double> k_dist, std::span<const double> lrd) {
  const double own = inverse_mean_reach(n, k_dist);
  double sum = 0.0;
  for (std::size_t j : n.neighbors) sum += lrd[j];
  return sum / (static_cast<double>(n.neighbors.size()) * own);
}

struct Fitted {
  std::vector<double> k_dist;
  std::vector<double> lrd;
  std::vector<Neighborhood> neighborhoods;
};

Fitted fit_from_matrix(std::span<const double> matrix, std::size_t n, std::size_t k) {
  if (n <= k) throw std::invalid_argument("lof fit: need more than K training points");
  Fitted f;
  f.neighborhoods.reserve(n);
  f.k_dist.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.neighborhoods.push_back(neighborhood_from(matrix.subspan(i * n, n), k, i));
    f.k_dist[i] = f.neighborhoods.back().k_distance;
  }
  f.lrd.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.lrd[i] = inverse_mean_reach(f.neighborhoods[i], f.k_dist);
  return f;
}

std::string metric_name(Metric m) { return m == Metric::kEuclidean ? "euclidean" : "manhattan"; }

Metric metric_from(const std::string& s) {
  if (s == "euclidean") return Metric::kEuclidean;
  if (s == "manhattan") return Metric::kManhattan;
  throw std::runtime_error("lof model: unknown metric '" + s + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream row(line);
  std::string field;
  while (std::getline(row, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

PointSet::PointSet(std::size_t dim, std::vector<double> data) : dim_(dim), data_(std::move(data)) {
  if (dim_ == 0 || data_.size() % dim_ != 0) throw std::invalid_argument("PointSet: data is not a whole number of rows");
}

void PointSet::add(std::span<const double> point) {
  if (dim_ == 0) dim_ = point.size();
  if (point.size() != dim_ || dim_ == 0) throw std::invalid_argument("PointSet: dimension mismatch");
  for (double v : point) {
    if (!std::isfinite(v)) throw std::invalid_argument("PointSet: non-finite feature");
  }
  data_.insert(data_.end(), point.begin(), point.end());
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  return metric == Metric::kEuclidean ? std::sqrt(kernels::squared_distance(a, b)) : kernels::manhattan_distance(a, b);
}

Neighborhood k_distance(const PointSet& points, std::size_t a, std::size_t k, Metric metric) {
  if (a >= points.size()) throw std::out_of_range("lof: point index out of range");
  return neighborhood_from(distances_to(points, points[a], metric), k, a);
}

Neighborhood k_distance(const PointSet& points, std::span<const double> query, std::size_t k, Metric metric) {
  return neighborhood_from(distances_to(points, query, metric), k, points.size());
}

double reachability(const PointSet& points, std::size_t a, std::size_t b, std::size_t k, Metric metric) {
  if (b >= points.size()) throw std::out_of_range("lof: point index out of range");
  return std::max(k_distance(points, a, k, metric).k_distance, distance(points[a], points[b], metric));
}

double lrd(const PointSet& points, std::size_t a, std::size_t k, Metric metric) {
  const Neighborhood n = k_distance(points, a, k, metric);
  std::vector<double> k_dist(points.size(), 0.0);
  for (std::size_t b : n.neighbors) k_dist[b] = k_distance(points, b, k, metric).k_distance;
  return inverse_mean_reach(n, k_dist);
}

double lof_score(const PointSet& points, std::size_t a, std::size_t k, Metric metric) {
  const Neighborhood n = k_distance(points, a, k, metric);
  double sum = 0.0;
  for (std::size_t b : n.neighbors) sum += lrd(points, b, k, metric);
  return sum / (static_cast<double>(n.neighbors.size()) * lrd(points, a, k, metric));
}

LofModel fit(PointSet train, std::size_t k, Metric metric) {
  const std::size_t n = train.size();
  if (k == 0) throw std::invalid_argument("lof fit: K must be at least 1");
  if (n <= k) throw std::invalid_argument("lof fit: need more than K training points");
  const auto matrix = distance_matrix(train, metric);
  Fitted f = fit_from_matrix(matrix, n, k);
  LofModel model;
  model.k = k;
  model.metric = metric;
  model.train = std::move(train);
  model.k_dist = std::move(f.k_dist);
  model.lrd = std::move(f.lrd);
  return model;
}

Prediction predict(const LofModel& model, std::span<const double> query) {
  const Neighborhood n = neighborhood_from(distances_to(model.train, query, model.metric), model.k, model.train.size());
  const double score = score_from(n, model.k_dist, model.lrd);
  return {score, score > model.tau};
}

std::vector<double> training_scores(const LofModel& model) {
  std::vector<double> scores(model.train.size());
  for (std::size_t i = 0; i < model.train.size(); ++i) {
    const Neighborhood n = neighborhood_from(distances_to(model.train, model.train[i], model.metric), model.k, i);
    scores[i] = score_from(n, model.k_dist, model.lrd);
  }
  return scores;
}

double calibrate_tau(const LofModel& model, const PointSet& validation, double quantile) {
  if (!(quantile > 0.0 && quantile <= 1.0)) throw std::invalid_argument("calibrate_tau: quantile must be in (0, 1]");
  if (validation.size() == 0) return kFallbackTau;
  std::vector<double> scores(validation.size());
  for (std::size_t i = 0; i < validation.size(); ++i) scores[i] = predict(model, validation[i]).score;
  const auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(scores.size())));
  const std::size_t index = std::clamp<std::size_t>(rank, 1, scores.size()) - 1;
  std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(index), scores.end());
  return std::max(1.0, scores[index]);
}

std::size_t select_k(const PointSet& train, const PointSet& validation, std::span<const std::size_t> candidates,
                     Metric metric, double tau) {
  if (candidates.empty()) throw std::invalid_argument("select_k: no candidate K");
  if (validation.size() == 0) throw std::invalid_argument("select_k: empty validation set");
  const std::size_t n = train.size();
  const auto matrix = distance_matrix(train, metric);
  std::vector<std::vector<double>> rows(validation.size());
  for (std::size_t v = 0; v < validation.size(); ++v) rows[v] = distances_to(train, validation[v], metric);

  std::vector<std::size_t> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t best_k = sorted.front();
  std::size_t best_hits = 0;
  bool first = true;
  for (std::size_t k : sorted) {
    if (k == 0 || k >= n) continue;
    const Fitted f = fit_from_matrix(matrix, n, k);
    std::size_t hits = 0;
    for (const auto& row : rows) hits += score_from(neighborhood_from(row, k, n), f.k_dist, f.lrd) <= tau;
    if (first || hits > best_hits) {
      best_k = k;
      best_hits = hits;
      first = false;
    }
  }
  if (first) throw std::invalid_argument("select_k: no candidate K is smaller than the training set");
  return best_k;
}

void save_model(std::ostream& out, const LofModel& model) {
  const std::size_t dim = model.train.dim();
  out << "k,metric,tau,dim,count\n"
      << model.k << ',' << metric_name(model.metric) << ',' << format_double(model.tau) << ',' << dim << ','
      << model.train.size() << '\n';
  for (std::size_t i = 0; i < model.train.size(); ++i) {
    out << format_double(model.k_dist[i]) << ',' << format_double(model.lrd[i]);
    for (double v : model.train[i]) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("lof model: write failed");
}

LofModel load_model(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "k,metric,tau,dim,count") throw std::runtime_error("lof model: bad header");
  if (!std::getline(in, line)) throw std::runtime_error("lof model: truncated");
  const auto head = split_csv(line);
  if (head.size() != 5) throw std::runtime_error("lof model: bad parameter line");
  LofModel model;
  model.k = std::stoul(head[0]);
  model.metric = metric_from(head[1]);
  model.tau = std::stod(head[2]);
  const std::size_t dim = std::stoul(head[3]);
  const std::size_t count = std::stoul(head[4]);
  model.train = PointSet(dim);
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw std::runtime_error("lof model: truncated");
    const auto fields = split_csv(line);
    if (fields.size() != dim + 2) throw std::runtime_error("lof model: bad row " + std::to_string(i));
    model.k_dist.push_back(std::stod(fields[0]));
    model.lrd.push_back(std::stod(fields[1]));
    for (std::size_t d = 0; d < dim; ++d) row[d] = std::stod(fields[d + 2]);
    model.train.add(row);
  }
  return model;
}

void save_model(const std::filesystem::path& path, const LofModel& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_model(out, model);
}

LofModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_model(in);
}

}  // namespace lis::lof
