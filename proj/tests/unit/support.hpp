#pragma once

// Shared helpers: quadrature oracles and hand-rolled random generators.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "poolsim/model.hpp"
#include "poolsim/noise.hpp"
#include "poolsim/pathwise.hpp"

namespace testing {

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Adaptive Gauss-Kronrod on [a, b].
template <typename F>
double integrate(F f, double a, double b, double tol = 1e-14) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol);
}

// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
  std::int64_t integer(std::int64_t a, std::int64_t b) {
    return std::uniform_int_distribution<std::int64_t>(a, b)(rng_);
  }
  std::uint64_t seed() { return rng_(); }

  poolsim::ModelParams params() {
    poolsim::ModelParams p;
    p.y0 = uniform(-0.5, 0.5);
    p.m = uniform(0.05, 0.4);
    p.k = uniform(0.5, 2.0);
    p.xi = uniform(0.05, 0.6);
    p.rho_x = uniform(0.05, 0.95);
    p.rho_y = uniform(-0.9, 0.9);
    p.rho_xy = uniform(-0.9, 0.9);
    p.epsilon = std::pow(10.0, uniform(-3.0, 0.0));
    return p;
  }

  poolsim::IncrementPath increments(const poolsim::GridSpec& grid) {
    poolsim::IncrementPath path;
    const double s = std::sqrt(grid.dt());
    for (std::int64_t n = 0; n < grid.N; ++n) path.values.push_back(s * normal());
    return path;
  }

  poolsim::MarketPath market(const poolsim::ModelParams& p, const poolsim::GridSpec& grid) {
    return poolsim::make_market_path(p, grid, increments(grid), increments(grid));
  }

  // Y^1 path driven by independent increments.
  poolsim::FactorPath y_path(const poolsim::ModelParams& p, const poolsim::GridSpec& grid) {
    return poolsim::ou_path_exact(p, grid, increments(grid), std::sqrt(1.0 - p.rho_y * p.rho_y), p.y0);
  }

 private:
  std::mt19937_64 rng_;
};

template <typename Body>
void for_all(int cases, std::uint64_t seed, Body body) {
  Gen gen(seed);
  for (int i = 0; i < cases; ++i) body(gen);
}

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace testing
