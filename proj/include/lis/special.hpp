#pragma once

// Special functions in log domain. I0 and I1 overflow a double near x = 713,
// while the likelihoods here routinely take arguments in the thousands.

namespace lis::special {

/// log I0(x) for x >= 0, relative error below 1e-13 everywhere we test.
/// Power series up to x = 25, Hankel asymptotic expansion beyond.
/// Throws std::domain_error for negative or NaN x.
double log_bessel_i0(double x);

/// log I1(x) for x >= 0 (returns -inf at 0). Same split as log_bessel_i0.
double log_bessel_i1(double x);

/// Standard normal quantile, p in (0, 1).
double normal_quantile(double p);

}  // namespace lis::special
