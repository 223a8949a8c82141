#pragma once

// Data-parallel inner loops shared by the detectors.
//
// Every kernel has a portable scalar reference and, on x86-64, an AVX2/FMA
// variant. The variant is picked once at startup from the CPU feature flags;
// LIS_KERNELS=scalar|avx2 in the environment overrides the choice. All
// variants agree to rounding (see tests/test_kernels.cpp).

#include <cstddef>
#include <span>
#include <string_view>

namespace lis::kernels {

enum class Backend { kScalar, kAvx2 };

bool backend_available(Backend backend);
Backend active_backend();
/// Throws std::invalid_argument if the backend is not supported on this CPU.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);

double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
double manhattan_distance(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// y = A x, with A row-major rows x cols.
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);

/// y += A^T x, with A row-major rows x cols (x has rows entries, y has cols).
void gemv_transposed_add(std::span<const double> a, std::size_t rows, std::size_t cols,
                         std::span<const double> x, std::span<double> y);

/// A += u v^T, with A row-major u.size() x v.size().
void rank1_update(std::span<double> a, std::span<const double> u, std::span<const double> v);

/// sum_i log I0(scale * sqrt(a_i * b_i)); a_i, b_i >= 0, scale >= 0.
double sum_log_i0_sqrt(std::span<const double> a, std::span<const double> b, double scale);

// Backend tables. Exposed so the equivalence tests can call a specific
// variant without touching the process-wide selection.
struct KernelTable {
  double (*dot)(const double*, const double*, std::size_t);
  double (*squared_distance)(const double*, const double*, std::size_t);
  double (*manhattan_distance)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*gemv)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*gemv_transposed_add)(const double*, std::size_t, std::size_t, const double*, double*);
  void (*rank1_update)(double*, const double*, std::size_t, const double*, std::size_t);
  double (*sum_log_i0_sqrt)(const double*, const double*, std::size_t, double);
};

const KernelTable& table(Backend backend);

}  // namespace lis::kernels
