#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "poolsim/model.hpp"
#include "poolsim/montecarlo.hpp"
#include "poolsim/noise.hpp"
#include "poolsim/schemes.hpp"

namespace poolsim {

// One realisation of the common factors on a grid. z is generated from
// dwy by the exact OU recursion with rho_factor = rho_y.
struct MarketPath {
  GridSpec grid;
  FactorPath z;
  IncrementPath dwx;
  IncrementPath dwy;
  double wx_T = 0.0;
  double wy_T = 0.0;
  std::vector<double> exp_z;  // e^{z_n}, cached for the inner loops
};

// Builds the path from given increments; terminal values are their sums.
MarketPath make_market_path(const ModelParams& p, const GridSpec& grid, IncrementPath dwy,
                            IncrementPath dwx);

// Draws W^y and the orthogonal part of W^x from streams
// {seed, market_y, 0} and {seed, market_x_orth, 0} as pinned paths, so the
// same seed gives the same W^x_T and W^y_T on every grid.
MarketPath simulate_market(const ModelParams& p, const GridSpec& grid, std::uint64_t seed);

// Linear (lambda = 1) or quadratic (lambda = 0) averaging of sigma in the
// stochastic integral.
enum class Averaging { quadratic = 0, linear = 1 };

constexpr int lambda(Averaging a) noexcept { return static_cast<int>(a); }

enum class ApproxKind { appY, erg1Y, erg2Y, erg1YZ, erg2YZ };

inline constexpr ApproxKind kAllApproximations[] = {ApproxKind::appY, ApproxKind::erg1Y,
                                                    ApproxKind::erg2Y, ApproxKind::erg1YZ,
                                                    ApproxKind::erg2YZ};

std::string_view to_string(ApproxKind kind);
// Throws ConfigError for an unknown name.
ApproxKind parse_approx_kind(std::string_view name);

// P(X_T <= B | W^x, W^y, W^{y,1}) for the discretised log-asset, given the
// idiosyncratic volatility path y1. Exp-OU closed form.
double conditional_cdf_inner(const ModelParams& p, const MarketPath& mkt, const FactorPath& y1,
                             double B);
// Same quantity for general coefficients mu, sigma.
double conditional_cdf_inner(const Coefficients& c, const ModelParams& p, const MarketPath& mkt,
                             const FactorPath& y1, double B);

// d/dB of conditional_cdf_inner.
double conditional_density_inner(const ModelParams& p, const MarketPath& mkt, const FactorPath& y1,
                                 double B);

// Nested estimator of the limiting loss: average of conditional_cdf_inner
// over n_inner fresh y1 paths drawn from streams {seed, inner_y1, j}.
Estimate true_loss(const ModelParams& p, const MarketPath& mkt, double B, std::uint64_t n_inner,
                   std::uint64_t seed, const RunOptions& options = {});

// Loss and its B-density from the same inner samples.
std::pair<Estimate, Estimate> true_loss_and_density(const ModelParams& p, const MarketPath& mkt,
                                                    double B, std::uint64_t n_inner,
                                                    std::uint64_t seed,
                                                    const RunOptions& options = {});

// Fraction of n_firms simulated firms with x_T <= B. Firm i uses streams
// {seed, firm_y, i} and {seed, firm_x, i}.
double finite_pool_loss(const ModelParams& p, const MarketPath& mkt, double B,
                        std::uint64_t n_firms, std::uint64_t seed);

// Losses of the nested pools made of the first pool_sizes[j] firms, from
// one simulation of the largest pool. Entry j equals
// finite_pool_loss(p, mkt, B, pool_sizes[j], seed).
std::vector<double> finite_pool_losses(const ModelParams& p, const MarketPath& mkt, double B,
                                       std::span<const std::uint64_t> pool_sizes,
                                       std::uint64_t seed);

// CLT-corrected approximation.
double loss_appY(const ModelParams& p, const MarketPath& mkt, double B);
double loss_appY(const Coefficients& c, const ModelParams& p, const MarketPath& mkt, double B);

// Ergodic Y-average.
double loss_ergY(const ModelParams& p, const MarketPath& mkt, double B, Averaging avg);
double loss_ergY(const Coefficients& c, const ModelParams& p, const MarketPath& mkt, double B,
                 Averaging avg);

// Ergodic Y+Z average; depends on the market only through W^x_T.
double loss_ergYZ(const ModelParams& p, double T, double wx_T, double B, Averaging avg);
double loss_ergYZ(const Coefficients& c, const ModelParams& p, double T, double wx_T, double B,
                  Averaging avg);

double approx_loss(ApproxKind kind, const ModelParams& p, const MarketPath& mkt, double B);

}  // namespace poolsim
