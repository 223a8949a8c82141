#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "lis/kernels.hpp"
#include "lis/special.hpp"

namespace lis::kernels {
namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

class KernelEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    if (!backend_available(Backend::kAvx2)) GTEST_SKIP() << "AVX2 not available on this CPU";
  }
  const KernelTable& ref = table(Backend::kScalar);
  const KernelTable& simd() { return table(Backend::kAvx2); }
};

TEST_F(KernelEquivalence, ReductionsAgreeAcrossLengths) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 1000u, 1024u, 4099u}) {
    const auto a = random_vector(n, rng);
    const auto b = random_vector(n, rng);
    const double tol = 1e-13 * std::max<double>(1.0, n);
    EXPECT_NEAR(ref.dot(a.data(), b.data(), n), simd().dot(a.data(), b.data(), n), tol) << n;
    EXPECT_NEAR(ref.squared_distance(a.data(), b.data(), n), simd().squared_distance(a.data(), b.data(), n), tol)
        << n;
    EXPECT_NEAR(ref.manhattan_distance(a.data(), b.data(), n),
                simd().manhattan_distance(a.data(), b.data(), n), tol)
        << n;
  }
}

TEST_F(KernelEquivalence, AxpyIsElementwiseIdentical) {
  std::mt19937_64 rng(2);
  for (std::size_t n : {1u, 6u, 13u, 257u}) {
    const auto x = random_vector(n, rng);
    auto y1 = random_vector(n, rng);
    auto y2 = y1;
    ref.axpy(0.37, x.data(), y1.data(), n);
    simd().axpy(0.37, x.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-15);
  }
}

TEST_F(KernelEquivalence, MatrixKernelsAgree) {
  std::mt19937_64 rng(3);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{1, 1}, {4, 9}, {16, 4}, {7, 33}, {16, 4096}}) {
    const auto a = random_vector(rows * cols, rng);
    const auto x = random_vector(cols, rng);
    const auto u = random_vector(rows, rng);
    std::vector<double> y1(rows), y2(rows);
    ref.gemv(a.data(), rows, cols, x.data(), y1.data());
    simd().gemv(a.data(), rows, cols, x.data(), y2.data());
    for (std::size_t r = 0; r < rows; ++r) EXPECT_NEAR(y1[r], y2[r], 1e-12);

    auto z1 = random_vector(cols, rng);
    auto z2 = z1;
    ref.gemv_transposed_add(a.data(), rows, cols, u.data(), z1.data());
    simd().gemv_transposed_add(a.data(), rows, cols, u.data(), z2.data());
    for (std::size_t c = 0; c < cols; ++c) EXPECT_NEAR(z1[c], z2[c], 1e-12);

    auto m1 = a;
    auto m2 = a;
    ref.rank1_update(m1.data(), u.data(), rows, x.data(), cols);
    simd().rank1_update(m2.data(), u.data(), rows, x.data(), cols);
    for (std::size_t k = 0; k < m1.size(); ++k) EXPECT_NEAR(m1[k], m2[k], 1e-15);
  }
}

TEST_F(KernelEquivalence, LogI0SumsAgreeOverWideRange) {
  std::mt19937_64 rng(4);
  // Arguments span both polynomial branches and the crossover at 8.
  for (double scale : {0.0, 1e-3, 0.5, 2.0, 8.0, 40.0, 1e3, 1e5}) {
    for (std::size_t n : {1u, 3u, 4u, 5u, 64u, 1027u}) {
      const auto a = random_vector(n, rng, 0.0, 4.0);
      const auto b = random_vector(n, rng, 0.0, 4.0);
      const double r = ref.sum_log_i0_sqrt(a.data(), b.data(), n, scale);
      const double s = simd().sum_log_i0_sqrt(a.data(), b.data(), n, scale);
      EXPECT_NEAR(r, s, 1e-12 * std::max(1.0, std::abs(r))) << "scale " << scale << " n " << n;
    }
  }
}

TEST_F(KernelEquivalence, LogI0PointwiseAgainstReference) {
  // One element at a time exposes per-argument error rather than a sum.
  for (double x = 0.0; x < 60.0; x += 0.0137) {
    const double one = 1.0;
    const double r = special::log_bessel_i0(x);
    const double s = simd().sum_log_i0_sqrt(&one, &one, 1, x);
    std::array<double, 4> four{1.0, 1.0, 1.0, 1.0};
    const double s4 = simd().sum_log_i0_sqrt(four.data(), four.data(), 4, x) / 4.0;
    EXPECT_NEAR(r, s, 1e-13 * std::max(1.0, r)) << x;
    EXPECT_NEAR(r, s4, 1e-13 * std::max(1.0, r)) << x;
  }
}

TEST(KernelDispatch, SelectionAndSizeChecks) {
  const Backend original = active_backend();
  set_backend(Backend::kScalar);
  EXPECT_EQ(active_backend(), Backend::kScalar);
  EXPECT_EQ(backend_name(Backend::kScalar), "scalar");
  if (!backend_available(Backend::kAvx2)) {
    EXPECT_THROW(set_backend(Backend::kAvx2), std::invalid_argument);
  }
  set_backend(original);

  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{4.0, 5.0};
  EXPECT_THROW(dot(a, b), std::invalid_argument);
  std::vector<double> y(2);
  EXPECT_THROW(gemv(a, 2, 2, b, y), std::invalid_argument);
  EXPECT_DOUBLE_EQ(dot(a, a), 14.0);
  EXPECT_DOUBLE_EQ(squared_distance(a, std::vector<double>{0.0, 0.0, 0.0}), 14.0);
  EXPECT_DOUBLE_EQ(manhattan_distance(a, std::vector<double>{0.0, 0.0, 0.0}), 6.0);
}

}  // namespace
}  // namespace lis::kernels
