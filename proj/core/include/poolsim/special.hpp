#pragma once

#include <cstddef>

// Scalar special functions: standard normal density, distribution and
// quantile, and the standard bivariate normal distribution function.
// All functions are pure and reentrant.

namespace poolsim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double norm_pdf(double x) noexcept;

// Standard normal CDF. Accepts +-infinity; absolute error below 1e-15.
double norm_cdf(double x) noexcept;

// Standard normal quantile. Returns -inf at p = 0 and +inf at p = 1.
// Throws DomainError for p outside [0, 1] or NaN.
double norm_inv_cdf(double p);

// Wichura's AS241 rational approximation without refinement, for p in
// the open interval (0, 1). Relative accuracy about 1e-16; used by the
// noise generator where the refinement step is not worth its cost.
double norm_inv_cdf_rational(double p) noexcept;

// Elementwise norm_inv_cdf_rational with bitwise identical results,
// arranged so the central branch runs branch-free over the batch.
void norm_inv_cdf_rational(const double* p, double* out, std::size_t n) noexcept;

// P(X <= h, Y <= k) for a standard bivariate normal pair with
// correlation rho. h and k may be infinite. Throws DomainError for
// |rho| > 1 or NaN arguments.
double bvn_cdf(double h, double k, double rho);

}  // namespace poolsim
