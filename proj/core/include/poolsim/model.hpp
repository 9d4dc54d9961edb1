#pragma once

#include <cstdint>
#include <functional>
#include <string_view>

namespace poolsim {

// Scalar constants of the exponential Ornstein-Uhlenbeck firm model
//
//   dX = mu(Y + Z) dt + sigma(Y + Z) (rho_x dW^x + sqrt(1 - rho_x^2) dW^{x,i})
//   dY = -(k / eps) Y dt + (xi sqrt(2) / sqrt(eps)) sqrt(1 - rho_y^2) dW^{y,i}
//   dZ = -(k / eps) Z dt + (xi sqrt(2) / sqrt(eps)) rho_y dW^y
//
// with sigma(y) = m e^y, mu = -sigma^2 / 2, corr(W^x, W^y) = rho_xy,
// X_0 = 0, Y_0 = y0, Z_0 = 0. The volatility factor has mean level 0.
struct ModelParams {
  double y0 = 0.2;
  double m = 0.1;
  double k = 1.0;
  double xi = 0.26;
  double rho_x = 0.9;
  double rho_y = 0.5;
  double rho_xy = -0.6;
  double epsilon = 4e-3;

  // Throws ConfigError unless m > 0, k > 0, xi >= 0, epsilon > 0 and all
  // correlations lie strictly inside (-1, 1).
  void validate() const;

  // Mean-reversion multiplier of one exact OU step: exp(-k dt / eps).
  double ou_decay(double dt) const noexcept;
  // Diffusion scale xi sqrt(2) / sqrt(eps) shared by Y and Z.
  double ou_vol() const noexcept;
};

// The reference parameter set used in the numerical studies:
// y0 = 0.2, m = 0.1, k = 1, xi = 0.26, rho_x = 0.9, rho_y = 0.5,
// rho_xy = -0.6.
ModelParams reference_params(double epsilon);

// Uniform time grid t_n = n T / N, n = 0..N.
struct GridSpec {
  double T = 1.0;
  std::int64_t N = 1;

  double dt() const noexcept { return T / static_cast<double>(N); }
  double time(std::int64_t n) const noexcept { return T * static_cast<double>(n) / static_cast<double>(N); }
  void validate() const;

  // N = ceil(steps_per_epsilon * T / eps), guarding against the product
  // landing one ulp above an integer.
  static GridSpec from_epsilon(double T, double epsilon, double steps_per_epsilon = 40.0);
};

struct StationaryVariances {
  double var_y = 0.0;   // xi^2 (1 - rho_y^2) / k, law of Y
  double var_yz = 0.0;  // xi^2 / k, law of Y + Z
};

StationaryVariances stationary_variances(const ModelParams& p);

double sigma(double y, const ModelParams& p) noexcept;
double mu(double y, const ModelParams& p) noexcept;

enum class Coefficient { sigma, sigma_sq, mu };

// <f(. + z)> under a centred normal with the given variance, closed form
// from E[e^{aY}] = e^{a^2 v / 2}. Throws DomainError for variance < 0.
double erg_avg(Coefficient f, double z, double variance, const ModelParams& p);

// Coefficient functions of a general (non exp-OU) model.
struct Coefficients {
  std::function<double(double)> mu;
  std::function<double(double)> sigma;
};

Coefficients exp_ou_coefficients(const ModelParams& p);

// E[f(z + V)], V ~ N(0, variance), by 64-node Gauss-Hermite quadrature.
double ergodic_average(const std::function<double(double)>& f, double z, double variance);

// Ergodic averages of the three coefficients entering the loss formulas.
struct AveragedCoefficients {
  double sigma = 0.0;     // <sigma>
  double sigma_sq = 0.0;  // <sigma^2>
  double mu = 0.0;        // <mu>
};

AveragedCoefficients average_coefficients(const Coefficients& c, double z, double variance);

}  // namespace poolsim
