#include <cmath>

#include "lis/special.hpp"
#include "tables.hpp"

namespace lis::kernels::detail {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double manhattan_distance(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
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

double sum_log_i0_sqrt(const double* a, const double* b, std::size_t n, double scale) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += special::log_bessel_i0(scale * std::sqrt(a[i] * b[i]));
  }
  return sum;
}

}  // namespace

const KernelTable& scalar_table() {
  static constexpr KernelTable kTable{
      &dot,  &squared_distance,    &manhattan_distance, &axpy,
      &gemv, &gemv_transposed_add, &rank1_update,       &sum_log_i0_sqrt,
  };
  return kTable;
}

}  // namespace lis::kernels::detail
