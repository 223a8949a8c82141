#include "lis/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace lis::metrics {
namespace {

Metric ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

void require_nonempty(const Confusion& c) {
  if (c.total() == 0) throw std::invalid_argument("metrics: empty confusion matrix");
}

}  // namespace

void Confusion::add(bool predicted_anomalous, bool actually_anomalous) {
  if (predicted_anomalous) {
    ++(actually_anomalous ? tp : fp);
  } else {
    ++(actually_anomalous ? fn : tn);
  }
}

Confusion& Confusion::operator+=(const Confusion& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

PrecisionRecall precision_recall(const Confusion& c) {
  require_nonempty(c);
  return {ratio(c.tp, c.tp + c.fp), ratio(c.tn, c.tn + c.fn), ratio(c.tp, c.tp + c.fn), ratio(c.tn, c.tn + c.fp)};
}

Metric harmonic_mean(Metric precision, Metric recall) {
  if (!precision || !recall) return std::nullopt;
  const double sum = *precision + *recall;
  if (sum == 0.0) return std::nullopt;
  return 2.0 * *precision * *recall / sum;
}

F1 f1(const Confusion& c) {
  const PrecisionRecall pr = precision_recall(c);
  return {harmonic_mean(pr.pp, pr.rp), harmonic_mean(pr.pn, pr.rn)};
}

Report report(const Confusion& c) {
  const PrecisionRecall pr = precision_recall(c);
  return {pr.pp, pr.pn, pr.rp, pr.rn, harmonic_mean(pr.pp, pr.rp), harmonic_mean(pr.pn, pr.rn)};
}

std::string format_metric(Metric m) {
  if (!m) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *m);
  return buf;
}

Metric parse_metric(const std::string& text) {
  if (text == "NA") return std::nullopt;
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw std::invalid_argument("metrics: bad value '" + text + "'");
  return v;
}

}  // namespace lis::metrics
