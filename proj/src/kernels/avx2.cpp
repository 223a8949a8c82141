#include "tables.hpp"

#if defined(LIS_HAVE_AVX2_TU)

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace lis::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d, d, acc0);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double manhattan_distance(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void gemv_transposed_add(const double* a, std::size_t rows, std::size_t cols, const double* x,
                         double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy(x[r], a + r * cols, y, cols);
}

void rank1_update(double* a, const double* u, std::size_t rows, const double* v,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(u[r], v, a + r * cols, cols);
}

// Natural log for positive normal doubles: x = m 2^e with m in [sqrt(1/2), sqrt(2)),
// log m = 2 atanh(s), s = (m - 1) / (m + 1).
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mantissa_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mantissa_mask), one_bits));
  const __m256i biased = _mm256_srli_epi64(bits, 52);
  const __m256i magic = _mm256_set1_epi64x(0x4330000000000000LL);
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(biased, magic)),
                            _mm256_set1_pd(4503599627370496.0));
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

  const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d z = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(1.0 / 23.0);
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 21.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 19.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 3.0));
  // log m = 2 s + 2 s z P(z)
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d log_m = _mm256_fmadd_pd(_mm256_mul_pd(two_s, z), p, two_s);

  const __m256d ln2_hi = _mm256_set1_pd(0.693359375);
  const __m256d ln2_lo = _mm256_set1_pd(-2.121944400546905827679e-4);
  return _mm256_fmadd_pd(e, ln2_hi, _mm256_fmadd_pd(e, ln2_lo, log_m));
}

// log I0 on a vector of non-negative arguments via the Chebyshev fits of the
// exponentially scaled function; see tables.hpp.
inline __m256d log_i0_pd(__m256d x) {
  const __m256d eight = _mm256_set1_pd(8.0);
  const __m256d large = _mm256_cmp_pd(x, eight, _CMP_GT_OQ);
  const __m256d safe_x = _mm256_max_pd(x, eight);
  const __m256d t_small = _mm256_sub_pd(_mm256_mul_pd(x, _mm256_set1_pd(0.25)), _mm256_set1_pd(1.0));
  const __m256d t_large = _mm256_sub_pd(_mm256_div_pd(_mm256_set1_pd(16.0), safe_x), _mm256_set1_pd(1.0));
  const __m256d t = _mm256_blendv_pd(t_small, t_large, large);
  const __m256d two_t = _mm256_add_pd(t, t);

  __m256d b1 = _mm256_setzero_pd();
  __m256d b2 = _mm256_setzero_pd();
  for (int j = 29; j >= 1; --j) {
    const __m256d c = _mm256_blendv_pd(_mm256_set1_pd(kI0eSmall[j]), _mm256_set1_pd(kI0eLarge[j]), large);
    const __m256d b0 = _mm256_add_pd(_mm256_fmsub_pd(two_t, b1, b2), c);
    b2 = b1;
    b1 = b0;
  }
  const __m256d c0 = _mm256_blendv_pd(_mm256_set1_pd(kI0eSmall[0]), _mm256_set1_pd(kI0eLarge[0]), large);
  __m256d f = _mm256_add_pd(_mm256_fmsub_pd(t, b1, b2), c0);
  f = _mm256_blendv_pd(f, _mm256_div_pd(f, _mm256_sqrt_pd(safe_x)), large);
  return _mm256_add_pd(x, log_pd(f));
}

double log_i0_scalar(double x) {
  const bool large = x > 8.0;
  const double t = large ? 16.0 / x - 1.0 : 0.25 * x - 1.0;
  const double* c = large ? kI0eLarge : kI0eSmall;
  double b1 = 0.0;
  double b2 = 0.0;
  for (int j = 29; j >= 1; --j) {
    const double b0 = 2.0 * t * b1 - b2 + c[j];
    b2 = b1;
    b1 = b0;
  }
  double f = t * b1 - b2 + c[0];
  if (large) f /= std::sqrt(x);
  return x + std::log(f);
}

double sum_log_i0_sqrt(const double* a, const double* b, std::size_t n, double scale) {
  const __m256d vs = _mm256_set1_pd(scale);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, log_i0_pd(_mm256_mul_pd(vs, _mm256_sqrt_pd(prod))));
  }
  double sum = hsum(acc);
  for (; i < n; ++i) sum += log_i0_scalar(scale * std::sqrt(a[i] * b[i]));
  return sum;
}

}  // namespace

const KernelTable* avx2_table() {
  static constexpr KernelTable kTable{
      &dot,  &squared_distance,    &manhattan_distance, &axpy,
      &gemv, &gemv_transposed_add, &rank1_update,       &sum_log_i0_sqrt,
  };
  return &kTable;
}

}  // namespace lis::kernels::detail

#else

namespace lis::kernels::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace lis::kernels::detail

#endif
