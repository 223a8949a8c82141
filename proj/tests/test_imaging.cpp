#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "lis/imaging.hpp"
#include "oracles.hpp"

namespace lis {
namespace {

PowerFrame frame_of(std::vector<double> w, double sigma2 = 1.0) {
  PowerFrame f;
  f.w = std::move(w);
  f.noise_variance = sigma2;
  return f;
}

ChannelSnapshot snapshot_of(std::vector<std::complex<double>> h) {
  ChannelSnapshot s;
  s.h = std::move(h);
  return s;
}

std::vector<double> random_powers(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  for (double& v : w) v = e(rng);
  return w;
}

TEST(ToImage, FlatFrameIsAllZero) {
  const auto img = to_image(frame_of({1, 1, 1, 1}), 2, 2);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 0, 0, 0}));
}

TEST(ToImage, CeilMapping) {
  const auto img = to_image(frame_of({0, 2, 4}), 3, 1);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{0, 128, 255}));
}

TEST(ToImage, ExtremesMapToZeroAnd255) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = to_image(frame_of(random_powers(64, rng)), 8, 8);
    EXPECT_EQ(*std::min_element(img.pixels.begin(), img.pixels.end()), 0);
    EXPECT_EQ(*std::max_element(img.pixels.begin(), img.pixels.end()), 255);
  }
}

TEST(ToImage, AffineInvariance) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ua(1e-3, 1e3), ub(-10.0, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto w = random_powers(1024, rng);
    const double a = ua(rng), b = ub(rng);
    std::vector<double> moved(w.size());
    std::transform(w.begin(), w.end(), moved.begin(), [&](double v) { return a * v + b; });
    EXPECT_EQ(to_image(frame_of(w), 32, 32).pixels, to_image(frame_of(moved), 32, 32).pixels) << trial;
  }
}

TEST(ToImage, Preconditions) {
  EXPECT_THROW(to_image(frame_of({1.0}), 1, 1), std::invalid_argument);
  EXPECT_THROW(to_image(frame_of({1.0, 2.0, 3.0}), 2, 2), std::invalid_argument);
}

TEST(AverageFrames, SingleFrameIsIdentity) {
  const auto f = frame_of({0.5, 1.5, 2.0});
  const std::vector<PowerFrame> one{f};
  EXPECT_EQ(average_frames(one).w, f.w);
}

TEST(AverageFrames, ConstantFramesComeBack) {
  const auto f = frame_of({0.5, 1.5, 2.0});
  const std::vector<PowerFrame> many(7, f);
  const auto avg = average_frames(many);
  for (std::size_t i = 0; i < f.w.size(); ++i) EXPECT_NEAR(avg.w[i], f.w[i], 1e-15);
}

TEST(AverageFrames, Errors) {
  EXPECT_THROW(average_frames(std::vector<PowerFrame>{}), std::invalid_argument);
  auto a = frame_of({1, 2});
  auto b = frame_of({1, 2});
  b.position = 1;
  EXPECT_THROW(average_frames(std::vector<PowerFrame>{a, b}), std::invalid_argument);
  b = frame_of({1, 2}, 2.0);
  EXPECT_THROW(average_frames(std::vector<PowerFrame>{a, b}), std::invalid_argument);
}

TEST(AverageFrames, LargeAverageApproachesMeanPower) {
  const auto snap = snapshot_of({{1.0, 0.0}, {0.0, 0.3}, {0.0, 0.0}, {-2.0, 1.0}});
  const double sigma2 = 0.5;
  std::vector<PowerFrame> frames;
  for (std::size_t k = 0; k < 100000; ++k) frames.push_back(sample_power(snap, sigma2, 300 + k));
  const auto avg = average_frames(frames);
  const auto g = snap.power();
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(avg.w[i], g[i] + sigma2, 0.01 * (g[i] + sigma2));
}

TEST(AverageFrames, VarianceShrinksByS) {
  const auto snap = snapshot_of({{1.0, 0.0}, {0.0, 0.0}});
  const double sigma2 = 1.0;
  const int s = 10;
  std::vector<double> e0, e1;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<PowerFrame> frames;
    for (int r = 0; r < s; ++r) frames.push_back(sample_power(snap, sigma2, 70000 + trial * s + r));
    const auto avg = average_frames(frames);
    e0.push_back(avg.w[0]);
    e1.push_back(avg.w[1]);
  }
  // Var(w) = sigma2 (sigma2 + 2 g) for a circular Gaussian perturbation.
  EXPECT_NEAR(testing::variance_of(e0), 3.0 / s, 0.1 * 3.0 / s);
  EXPECT_NEAR(testing::variance_of(e1), 1.0 / s, 0.1 * 1.0 / s);
}

TEST(AverageFrames, MoreAveragingMovesImageTowardNoiseless) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::complex<double>> h(64);
  for (auto& v : h) v = {n(rng), n(rng)};
  const auto snap = snapshot_of(h);
  const auto clean = to_features(to_image(frame_of(snap.power()), 8, 8), FeatureMode::kRawFlatten).values;
  auto dist = [&](int s, std::uint64_t seed) {
    std::vector<PowerFrame> frames;
    for (int r = 0; r < s; ++r) frames.push_back(sample_power(snap, 1.0, seed * 1000 + r));
    const auto x = to_features(to_image(average_frames(frames), 8, 8), FeatureMode::kRawFlatten).values;
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - clean[i]) * (x[i] - clean[i]);
    return std::sqrt(d);
  };
  int violations = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const double d1 = dist(1, trial), d10 = dist(10, trial + 500), d100 = dist(100, trial + 900);
    violations += (d10 > d1) + (d100 > d10);
  }
  EXPECT_LE(violations, 10);  // 5% of 200 comparisons
}

TEST(ToFeatures, RawFlatten) {
  RadioImage img{2, 2, {0, 255, 255, 0}};
  const auto f = to_features(img, FeatureMode::kRawFlatten);
  EXPECT_EQ(f.values, (std::vector<double>{0, 1, 1, 0}));
  EXPECT_EQ(f.provenance, FeatureMode::kRawFlatten);
}

TEST(ToFeatures, SameSizeResizeEqualsRaw) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(0, 255);
  RadioImage img{7, 5, std::vector<std::uint8_t>(35)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(u(rng));
  const auto raw = to_features(img, FeatureMode::kRawFlatten).values;
  const auto resized = to_features(img, FeatureMode::kResized, 7, 5).values;
  ASSERT_EQ(raw.size(), resized.size());
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_DOUBLE_EQ(raw[i], resized[i]);
}

TEST(ToFeatures, ConstantImageResizesToConstant) {
  RadioImage img{8, 8, std::vector<std::uint8_t>(64, 77)};
  for (auto [w, h] : {std::pair{32, 32}, std::pair{3, 5}, std::pair{64, 64}}) {
    const auto f = to_features(img, FeatureMode::kResized, w, h).values;
    ASSERT_EQ(f.size(), static_cast<std::size_t>(w * h));
    for (double v : f) EXPECT_NEAR(v, 77.0 / 255.0, 1e-15);
  }
}

TEST(ToFeatures, BilinearHalfPixelSample) {
  // Downsampling 2x1 -> 1x1 lands midway between the two pixels.
  const std::vector<double> src{0.0, 1.0};
  EXPECT_EQ(resize_bilinear(src, 2, 1, 1, 1), std::vector<double>{0.5});
  // Upsampling 2x1 -> 4x1: centers at -0.25, 0.25, 0.75, 1.25 clamp to the edges.
  EXPECT_EQ(resize_bilinear(src, 2, 1, 4, 1), (std::vector<double>{0.0, 0.25, 0.75, 1.0}));
}

TEST(ToFeatures, NormalizedModeHasZeroMeanUnitNorm) {
  RadioImage img{2, 2, {0, 255, 100, 30}};
  const auto f = to_features(img, FeatureMode::kNormalized, 2, 2).values;
  double sum = 0, sq = 0;
  for (double v : f) {
    sum += v;
    sq += v * v;
  }
  EXPECT_NEAR(sum, 0.0, 1e-15);
  EXPECT_NEAR(sq, 1.0, 1e-15);
  const auto flat = to_features(RadioImage{2, 2, {9, 9, 9, 9}}, FeatureMode::kNormalized, 2, 2).values;
  for (double v : flat) EXPECT_EQ(v, 0.0);
}

TEST(Pgm, ByteExactRoundTrip) {
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> u(0, 255);
  const auto dir = std::filesystem::temp_directory_path() / "lis_pgm_test";
  std::filesystem::create_directories(dir);
  for (auto [w, h] : {std::pair{32, 32}, std::pair{5, 3}, std::pair{1, 7}}) {
    RadioImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w * h))};
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(u(rng));
    const auto path = dir / ("img_" + std::to_string(w) + "x" + std::to_string(h) + ".pgm");
    export_pgm(img, path);
    const auto back = import_pgm(path);
    EXPECT_EQ(back.width, w);
    EXPECT_EQ(back.height, h);
    EXPECT_EQ(back.pixels, img.pixels);
  }
  std::filesystem::remove_all(dir);
}

TEST(Pgm, ReaderSkipsCommentsAndRejectsJunk) {
  std::string data = "P5\n# made by hand\n2 1\n255\n";
  data.push_back(static_cast<char>(10));
  data.push_back(static_cast<char>(200));
  std::istringstream in(data);
  const auto img = read_pgm(in);
  EXPECT_EQ(img.pixels, (std::vector<std::uint8_t>{10, 200}));
  std::istringstream p2("P2\n1 1\n255\n0\n");
  EXPECT_THROW(read_pgm(p2), std::runtime_error);
  std::istringstream truncated("P5\n4 4\n255\nab");
  EXPECT_THROW(read_pgm(truncated), std::runtime_error);
}

TEST(Manifest, RoundTrip) {
  std::vector<DatasetEntry> entries(2);
  entries[0] = {0, 3, 1, PointLabel::kCorrect, "img/p3_s1.pgm", {}};
  entries[1] = {1, 4, 0, PointLabel::kAnomalous, "", {0.1, 1.0 / 3.0, 2e-300}};
  std::stringstream csv;
  write_manifest(csv, entries);
  const auto back = read_manifest(csv);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].image_path, "img/p3_s1.pgm");
  EXPECT_EQ(back[1].label, PointLabel::kAnomalous);
  EXPECT_EQ(back[1].features, entries[1].features);
  EXPECT_EQ(back[0].position, 3u);
}

}  // namespace
}  // namespace lis
