#pragma once

// Binary detection metrics with anomalous events as the positive class.
// A metric whose denominator is zero is undefined and reported as nullopt.

#include <cstdint>
#include <optional>
#include <string>

namespace lis::metrics {

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  /// Records one decision.
  void add(bool predicted_anomalous, bool actually_anomalous);
  Confusion& operator+=(const Confusion& other);
  /// Anomalous becomes the negative class and vice versa.
  Confusion swapped() const { return {tn, fn, tp, fp}; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

using Metric = std::optional<double>;

struct PrecisionRecall {
  Metric pp, pn, rp, rn;
};

struct F1 {
  Metric pf1, nf1;
};

struct Report {
  Metric pp, pn, rp, rn, pf1, nf1;
};

/// Throws std::invalid_argument on an empty confusion matrix.
PrecisionRecall precision_recall(const Confusion& c);
F1 f1(const Confusion& c);
Report report(const Confusion& c);

/// Harmonic mean; undefined when either input is undefined or both are 0.
Metric harmonic_mean(Metric precision, Metric recall);

/// "%.6f" for defined values, "NA" for undefined ones.
std::string format_metric(Metric m);
/// Inverse of format_metric.
Metric parse_metric(const std::string& text);

}  // namespace lis::metrics
