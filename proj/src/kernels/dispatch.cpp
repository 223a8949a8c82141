#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "lis/kernels.hpp"
#include "tables.hpp"

namespace lis::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  const Backend best = backend_available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
  if (const char* env = std::getenv("LIS_KERNELS")) {
    const std::string value(env);
    if (value == "scalar") return Backend::kScalar;
    if (value == "avx2" && backend_available(Backend::kAvx2)) return Backend::kAvx2;
  }
  return best;
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> current{&table(initial_backend())};
  return current;
}

const KernelTable& current() { return *active_table().load(std::memory_order_relaxed); }

void check_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": size mismatch");
}

}  // namespace

bool backend_available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return detail::avx2_table() != nullptr && cpu_has_avx2();
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!backend_available(backend)) {
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(backend)));
  }
  return backend == Backend::kAvx2 ? *detail::avx2_table() : detail::scalar_table();
}

Backend active_backend() {
  return &current() == &detail::scalar_table() ? Backend::kScalar : Backend::kAvx2;
}

void set_backend(Backend backend) { active_table().store(&table(backend)); }

std::string_view backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "dot");
  return current().dot(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "squared_distance");
  return current().squared_distance(a.data(), b.data(), a.size());
}

double manhattan_distance(std::span<const double> a, std::span<const double> b) {
  check_same_size(a.size(), b.size(), "manhattan_distance");
  return current().manhattan_distance(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size(), "axpy");
  current().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  check_same_size(a.size(), rows * cols, "gemv");
  check_same_size(x.size(), cols, "gemv");
  check_same_size(y.size(), rows, "gemv");
  current().gemv(a.data(), rows, cols, x.data(), y.data());
}

void gemv_transposed_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                         std::span<const double> x, std::span<double> y) {
  check_same_size(a.size(), rows * cols, "gemv_transposed_add");
  check_same_size(x.size(), rows, "gemv_transposed_add");
  check_same_size(y.size(), cols, "gemv_transposed_add");
  current().gemv_transposed_add(a.data(), rows, cols, x.data(), y.data());
}

void rank1_update(std::span<double> a, std::span<const double> u, std::span<const double> v) {
  check_same_size(a.size(), u.size() * v.size(), "rank1_update");
  current().rank1_update(a.data(), u.data(), u.size(), v.data(), v.size());
}

double sum_log_i0_sqrt(std::span<const double> a, std::span<const double> b, double scale) {
  check_same_size(a.size(), b.size(), "sum_log_i0_sqrt");
  return current().sum_log_i0_sqrt(a.data(), b.data(), a.size(), scale);
}

}  // namespace lis::kernels
