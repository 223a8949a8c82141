#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "lis/channel.hpp"
#include "lis/dae.hpp"
#include "lis/imaging.hpp"

namespace lis::dae {
namespace {

std::vector<double> random_unit(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

DaeModel random_model(std::size_t r, std::size_t l, std::uint64_t seed) {
  Config c;
  c.latent = l;
  c.seed = seed;
  DaeModel m = init_model(r, c);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 0.3);
  for (double& x : m.b) x = n(rng);
  for (double& x : m.b_prime) x = n(rng);
  return m;
}

// Plain nested-loop forward pass.
std::vector<double> oracle_forward(const DaeModel& m, const std::vector<double>& c) {
  std::vector<double> e(m.latent), y(m.input);
  for (std::size_t j = 0; j < m.latent; ++j) {
    long double z = m.b[j];
    for (std::size_t i = 0; i < m.input; ++i) z += (long double)m.w[j * m.input + i] * c[i];
    e[j] = z >= 0 ? double(z) : double(0.2L * z);
  }
  for (std::size_t i = 0; i < m.input; ++i) {
    long double z = m.b_prime[i];
    for (std::size_t j = 0; j < m.latent; ++j) z += (long double)m.w_prime[i * m.latent + j] * e[j];
    y[i] = double(1.0L / (1.0L + std::exp(-z)));
  }
  return y;
}

TEST(DaeForward, ZeroNetworkGivesHalf) {
  Config c;
  c.latent = 4;
  DaeModel m = init_model(9, c);
  std::fill(m.w.begin(), m.w.end(), 0.0);
  std::fill(m.w_prime.begin(), m.w_prime.end(), 0.0);
  const auto out = denoise(m, std::vector<double>(9, 0.7));
  for (double y : out) EXPECT_EQ(y, 0.5);
}

TEST(DaeForward, IdentityNetworkWithLinearActivations) {
  Config c;
  c.latent = 6;
  c.hidden = Activation::kLinear;
  c.output = Activation::kLinear;
  DaeModel m = init_model(6, c);
  std::fill(m.w.begin(), m.w.end(), 0.0);
  std::fill(m.w_prime.begin(), m.w_prime.end(), 0.0);
  for (std::size_t i = 0; i < 6; ++i) m.w[i * 6 + i] = m.w_prime[i * 6 + i] = 1.0;
  const std::vector<double> x{0.1, 0.9, 0.3, 0.0, 1.0, 0.45};
  EXPECT_EQ(denoise(m, x), x);
}

TEST(DaeForward, MatchesHandRolledOracle) {
  std::mt19937_64 rng(11);
  const DaeModel m = random_model(9, 4, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_unit(9, rng);
    const auto got = denoise(m, x);
    const auto want = oracle_forward(m, x);
    for (std::size_t i = 0; i < 9; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(DaeForward, OutputStaysInUnitInterval) {
  std::mt19937_64 rng(12);
  DaeModel m = random_model(16, 4, 5);
  for (double& w : m.w_prime) w *= 500.0;
  for (int trial = 0; trial < 50; ++trial) {
    for (double y : denoise(m, random_unit(16, rng))) {
      EXPECT_GE(y, 0.0);
      EXPECT_LE(y, 1.0);
    }
  }
  EXPECT_THROW(denoise(m, std::vector<double>(15, 0.0)), std::invalid_argument);
}

TEST(DaeLoss, Examples) {
  const std::vector<double> t{0.2, 0.4, 0.6};
  EXPECT_EQ(loss(t, t), 0.0);
  EXPECT_EQ(loss(std::vector<double>(7, 1.0), std::vector<double>(7, 0.0)), 1.0);
  const std::vector<double> a{0.1, 0.5, 0.2, 0.9, 0.3}, b{0.4, 0.5, 0.0, 0.7, 0.8};
  double want = 0;
  for (int i = 0; i < 5; ++i) want += (a[i] - b[i]) * (a[i] - b[i]);
  EXPECT_NEAR(loss(a, b), want / 5, 1e-16);
  EXPECT_THROW(loss(a, t), std::invalid_argument);
}

TEST(DaeTrain, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(13);
  const DaeModel m = random_model(16, 4, 7);
  std::vector<ImagePair> pairs;
  for (int i = 0; i < 3; ++i) pairs.push_back({random_unit(16, rng), random_unit(16, rng), 0.0, 10.0});
  const std::vector<std::size_t> idx{0, 1, 2};
  Gradients g;
  loss_and_gradients(m, pairs, idx, g);

  const double h = 1e-5;
  double worst = 0.0;
  auto check = [&](std::vector<double> DaeModel::*field, const std::vector<double>& analytic) {
    for (std::size_t k = 0; k < analytic.size(); ++k) {
      DaeModel p = m, q = m;
      (p.*field)[k] += h;
      (q.*field)[k] -= h;
      const double numeric = (mean_loss(p, pairs) - mean_loss(q, pairs)) / (2 * h);
      const double denom = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-7});
      worst = std::max(worst, std::abs(numeric - analytic[k]) / denom);
    }
  };
  check(&DaeModel::w, g.w);
  check(&DaeModel::b, g.b);
  check(&DaeModel::w_prime, g.w_prime);
  check(&DaeModel::b_prime, g.b_prime);
  EXPECT_LE(worst, 1e-4);
}

TEST(DaeTrain, IdentityTaskLearns) {
  std::mt19937_64 rng(14);
  std::vector<ImagePair> pairs;
  // Low-rank inputs so a 4-unit bottleneck can represent them.
  const auto basis_a = random_unit(16, rng), basis_b = random_unit(16, rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 64; ++i) {
    const double s = u(rng);
    std::vector<double> x(16);
    for (int k = 0; k < 16; ++k) x[k] = s * basis_a[k] + (1 - s) * basis_b[k];
    pairs.push_back({x, x, 10.0, 10.0});
  }
  Config c;
  c.latent = 4;
  c.epochs = 200;
  c.batch_size = 8;
  const DaeModel start = init_model(16, c);
  const double initial = mean_loss(start, pairs);
  const TrainResult r = train(pairs, c);
  ASSERT_EQ(r.epoch_loss.size(), 200u);
  EXPECT_LT(mean_loss(r.model, pairs), 0.1 * initial);

  int violations = 0;
  for (std::size_t e = 10; e < r.epoch_loss.size(); ++e) violations += r.epoch_loss[e] > r.epoch_loss[e - 10];
  EXPECT_LE(violations, 2);
}

TEST(DaeTrain, DeterministicForSeed) {
  std::mt19937_64 rng(15);
  std::vector<ImagePair> pairs;
  for (int i = 0; i < 20; ++i) pairs.push_back({random_unit(16, rng), random_unit(16, rng), 0.0, 10.0});
  Config c;
  c.latent = 4;
  c.epochs = 5;
  c.batch_size = 6;
  const TrainResult a = train(pairs, c), b = train(pairs, c);
  EXPECT_EQ(a.model.w, b.model.w);
  EXPECT_EQ(a.model.b_prime, b.model.b_prime);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  c.seed = 2;
  EXPECT_NE(train(pairs, c).model.w, a.model.w);
}

TEST(DaeTrain, RejectsBadInput) {
  std::vector<ImagePair> pairs{{std::vector<double>(4, 0.5), std::vector<double>(4, 0.5), 10.0, 0.0}};
  EXPECT_THROW(train(pairs, Config{}), std::invalid_argument);
  pairs[0] = {std::vector<double>(4, 0.5), std::vector<double>(5, 0.5), 0.0, 10.0};
  EXPECT_THROW(train(pairs, Config{}), std::invalid_argument);
  EXPECT_THROW(train(std::vector<ImagePair>{}, Config{}), std::invalid_argument);
}

TEST(DaeTrain, NonFiniteLossAborts) {
  std::vector<ImagePair> pairs{{std::vector<double>(4, 0.5), std::vector<double>(4, 0.5), 0.0, 10.0}};
  Config c;
  c.latent = 2;
  c.hidden = Activation::kLinear;
  c.output = Activation::kLinear;
  DaeModel m = init_model(4, c);
  pairs[0].corrupted[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(train(m, pairs), std::runtime_error);
}

// Radio images of a small surface along a line of points: corrupted at 0 dB
// from an 8x8 surface, target at 10 dB from a 16x16 surface over the same
// aperture, both brought to 16x16.
std::vector<ImagePair> radio_pairs(int first, int count, int samples) {
  Scene coarse;
  coarse.room = {12.0, 12.0, 3.0};
  coarse.reflectors.push_back({{0, 11.9, 0}, {12, 12, 3}, 0.7});
  coarse.reflectors.push_back({{11.9, 0, 0}, {12, 12, 3}, 0.5});
  coarse.lis.anchor = {4.0, 0.2, 1.0};
  coarse.lis.rows = coarse.lis.cols = 8;
  coarse.lis.spacing = coarse.wavelength() / 2;
  Scene fine = coarse;
  fine.lis.rows = fine.lis.cols = 16;
  fine.lis.spacing = coarse.lis.spacing * 7.0 / 15.0;

  Trajectory route;
  for (int p = 0; p < 60; ++p) {
    route.points.push_back({3.0 + 0.1 * p, 4.0, 1.2});
    route.labels.push_back(PointLabel::kCorrect);
  }
  const auto hc = channels_along(coarse, route), hf = channels_along(fine, route);
  const double s2c = sigma_for_snr(hc, 0.0), s2f = sigma_for_snr(hf, 10.0);
  std::vector<ImagePair> pairs;
  for (int p = first; p < first + count; ++p) {
    for (int s = 0; s < samples; ++s) {
      const auto cimg = to_image(sample_power(hc[p], s2c, 100 + p, s), 8, 8);
      const auto timg = to_image(sample_power(hf[p], s2f, 900 + p, s), 16, 16);
      pairs.push_back({to_features(cimg, FeatureMode::kResized, 16, 16).values,
                       to_features(timg, FeatureMode::kResized, 16, 16).values, 0.0, 10.0});
    }
  }
  return pairs;
}

TEST(DaeTrain, DenoisingMovesInputsTowardTargets) {
  const auto train_pairs = radio_pairs(0, 45, 4);
  const auto test_pairs = radio_pairs(45, 15, 4);
  Config c;
  c.epochs = 150;
  const TrainResult r = train(train_pairs, c);
  double before = 0, after = 0;
  for (const auto& p : test_pairs) {
    before += loss(p.target, p.corrupted);
    after += loss(p.target, denoise(r.model, p.corrupted));
  }
  EXPECT_LT(after, before);
}

TEST(DaeCheckpoint, BinaryRoundTrip) {
  DaeModel m = random_model(16, 4, 9);
  m.config.epochs = 77;
  m.config.hidden = Activation::kLinear;
  std::stringstream buf;
  save_model(buf, m);
  const DaeModel back = load_model(buf);
  EXPECT_EQ(back.input, 16u);
  EXPECT_EQ(back.latent, 4u);
  EXPECT_EQ(back.config.epochs, 77u);
  EXPECT_EQ(back.config.hidden, Activation::kLinear);
  EXPECT_EQ(back.w, m.w);
  EXPECT_EQ(back.b, m.b);
  EXPECT_EQ(back.w_prime, m.w_prime);
  EXPECT_EQ(back.b_prime, m.b_prime);

  std::stringstream bad("NOTADAE!");
  EXPECT_THROW(load_model(bad), std::runtime_error);
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 8));
  EXPECT_THROW(load_model(cut), std::runtime_error);
}

TEST(DaeCheckpoint, LossCsv) {
  std::ostringstream out;
  write_loss_csv(out, std::vector<double>{0.5, 0.25});
  EXPECT_EQ(out.str(), "epoch,loss\n0,0.5\n1,0.25\n");
}

}  // namespace
}  // namespace lis::dae
