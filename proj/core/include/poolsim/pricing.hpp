#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "poolsim/model.hpp"
#include "poolsim/montecarlo.hpp"
#include "poolsim/pathwise.hpp"

namespace poolsim {

// Conditional law of the limiting loss approximated as Phi(c0 - c1 W),
// W standard normal, c1 > 0.
struct CallCoeffs {
  double c0 = 0.0;
  double c1 = 1.0;
};

// Call on the limiting loss, payoff (L_T - a)^+ with default barrier B.
struct TrancheSpec {
  double attachment = 0.0;
  double barrier = -0.1;
  double horizon = 1.0;

  void validate() const;
};

// E[(Phi(c0 - c1 W) - a)^+] via the bivariate normal reduction
//   BvN(c0 / s, w0; c1 / s) - a Phi(w0),  s = sqrt(1 + c1^2),
//   w0 = (c0 - Phi^{-1}(a)) / c1.
// a = 0 returns Phi(c0 / s); a = 1 returns 0. Throws DomainError for a
// outside [0, 1] or c1 <= 0.
double tranche_call_given_coeffs(const CallCoeffs& c, double a);

// Coefficients conditional on W^y for the CLT-corrected approximation,
// computed from the Z path and the W^y increments. Throws
// UnsupportedConfiguration for rho_x <= 0.
CallCoeffs coeffs_appY(const ModelParams& p, const GridSpec& grid, const FactorPath& z,
                       const IncrementPath& dwy, double B);

CallCoeffs coeffs_ergY(const ModelParams& p, const GridSpec& grid, const FactorPath& z,
                       const IncrementPath& dwy, double B, Averaging avg);

// Deterministic coefficients of the Y+Z average.
CallCoeffs coeffs_ergYZ(const ModelParams& p, double T, double B, Averaging avg);

// Outer Monte Carlo over W^y (stream market_y of each sample) of the
// conditional call value. The multi-strike overloads price every
// attachment on the same paths.
Estimate call_appY(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                   std::uint64_t n_outer, std::uint64_t seed, const RunOptions& options = {});
std::vector<Estimate> call_appY(const ModelParams& p, const GridSpec& grid, double B,
                                std::span<const double> attachments, std::uint64_t n_outer,
                                std::uint64_t seed, const RunOptions& options = {});

Estimate call_ergY(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                   Averaging avg, std::uint64_t n_outer, std::uint64_t seed,
                   const RunOptions& options = {});
std::vector<Estimate> call_ergY(const ModelParams& p, const GridSpec& grid, double B,
                                std::span<const double> attachments, Averaging avg,
                                std::uint64_t n_outer, std::uint64_t seed,
                                const RunOptions& options = {});

double call_ergYZ(const ModelParams& p, const TrancheSpec& spec, Averaging avg);

// Brute force: each outer sample draws a market path and n_firms firms and
// pays (L_{N_f} - a)^+.
Estimate call_firms(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                    std::uint64_t n_firms, std::uint64_t n_outer, std::uint64_t seed,
                    const RunOptions& options = {});
// Attachment j paired with a pool of n_firms[j] firms; the pools are
// nested prefixes of one simulated pool, so entry j equals the
// single-attachment call_firms with the same seed.
std::vector<Estimate> call_firms(const ModelParams& p, const GridSpec& grid, double B,
                                 std::span<const double> attachments,
                                 std::span<const std::uint64_t> n_firms, std::uint64_t n_outer,
                                 std::uint64_t seed, const RunOptions& options = {});

// Nested: each outer market path gets a true_loss estimate from n_inner
// samples. For a > 0 the estimator carries the bias of the inner noise
// passing through the kink of the payoff.
Estimate call_limiting(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                       std::uint64_t n_outer, std::uint64_t n_inner, std::uint64_t seed,
                       const RunOptions& options = {});
std::vector<Estimate> call_limiting(const ModelParams& p, const GridSpec& grid, double B,
                                    std::span<const double> attachments, std::uint64_t n_outer,
                                    std::uint64_t n_inner, std::uint64_t seed,
                                    const RunOptions& options = {});

// E[L_T] by sampling W^y and W^{y,1} jointly; no nesting.
Estimate expected_loss(const ModelParams& p, const GridSpec& grid, double B,
                       std::uint64_t n_samples, std::uint64_t seed, const RunOptions& options = {});

}  // namespace poolsim
