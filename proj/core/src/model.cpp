#include "poolsim/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "poolsim/errors.hpp"

namespace poolsim {

namespace {

constexpr int kHermiteNodes = 64;

struct HermiteRule {
  std::array<double, kHermiteNodes> x{};
  std::array<double, kHermiteNodes> w{};
};

// Nodes and weights for the weight e^{-x^2}, by Newton iteration on the
// orthonormal Hermite recurrence.
HermiteRule make_hermite_rule() {
  HermiteRule rule;
  constexpr int n = kHermiteNodes;
  constexpr double pim4 = 0.7511255444649425;  // pi^{-1/4}
  double z = 0.0;
  double pp = 0.0;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.x[1];
    } else {
      z = 2.0 * z - rule.x[i - 2];
    }
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1.0)) * p2 - std::sqrt(j / (j + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double previous = z;
      z = previous - p1 / pp;
      if (std::abs(z - previous) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.x[i] = z;
    rule.x[n - 1 - i] = -z;
    rule.w[i] = 2.0 / (pp * pp);
    rule.w[n - 1 - i] = rule.w[i];
  }
  return rule;
}

const HermiteRule& hermite_rule() {
  static const HermiteRule rule = make_hermite_rule();
  return rule;
}

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("invalid model parameters: ") + what);
}

}  // namespace

void ModelParams::validate() const {
  require(std::isfinite(y0), "y0 must be finite");
  require(m > 0.0 && std::isfinite(m), "m must be positive");
  require(k > 0.0 && std::isfinite(k), "k must be positive");
  require(xi >= 0.0 && std::isfinite(xi), "xi must be non-negative");
  require(std::abs(rho_x) < 1.0, "rho_x must lie in (-1, 1)");
  require(std::abs(rho_y) < 1.0, "rho_y must lie in (-1, 1)");
  require(std::abs(rho_xy) < 1.0, "rho_xy must lie in (-1, 1)");
  require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be positive");
}

double ModelParams::ou_decay(double dt) const noexcept { return std::exp(-k * dt / epsilon); }

double ModelParams::ou_vol() const noexcept { return xi * std::sqrt(2.0 / epsilon); }

ModelParams reference_params(double epsilon) {
  ModelParams p;
  p.epsilon = epsilon;
  return p;
}

void GridSpec::validate() const {
  if (!(T > 0.0 && std::isfinite(T))) throw ConfigError("grid horizon T must be positive");
  if (N < 1) throw ConfigError("grid must have at least one step");
}

GridSpec GridSpec::from_epsilon(double T, double epsilon, double steps_per_epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (!(steps_per_epsilon > 0.0)) throw ConfigError("steps per epsilon must be positive");
  const double raw = steps_per_epsilon * T / epsilon;
  const double nearest = std::round(raw);
  const double steps = std::abs(raw - nearest) <= 1e-9 * nearest ? nearest : std::ceil(raw);
  if (!(steps <= 0x1.0p62)) throw DomainError("step count steps_per_epsilon * T / epsilon overflows");
  GridSpec grid{T, static_cast<std::int64_t>(std::max(1.0, steps))};
  grid.validate();
  return grid;
}

StationaryVariances stationary_variances(const ModelParams& p) {
  const double total = p.xi * p.xi / p.k;
  return {total * (1.0 - p.rho_y * p.rho_y), total};
}

double sigma(double y, const ModelParams& p) noexcept { return p.m * std::exp(y); }

double mu(double y, const ModelParams& p) noexcept {
  const double s = sigma(y, p);
  return -0.5 * s * s;
}

double erg_avg(Coefficient f, double z, double variance, const ModelParams& p) {
  if (!(variance >= 0.0)) throw DomainError("erg_avg: variance must be non-negative");
  switch (f) {
    case Coefficient::sigma:
      return p.m * std::exp(z + 0.5 * variance);
    case Coefficient::sigma_sq:
      return p.m * p.m * std::exp(2.0 * z + 2.0 * variance);
    case Coefficient::mu:
      return -0.5 * p.m * p.m * std::exp(2.0 * z + 2.0 * variance);
  }
  return 0.0;
}

Coefficients exp_ou_coefficients(const ModelParams& p) {
  return {[p](double y) { return mu(y, p); }, [p](double y) { return sigma(y, p); }};
}

double ergodic_average(const std::function<double(double)>& f, double z, double variance) {
  if (!(variance >= 0.0)) throw DomainError("ergodic_average: variance must be non-negative");
  if (variance == 0.0) return f(z);
  const auto& rule = hermite_rule();
  const double scale = std::sqrt(2.0 * variance);
  double sum = 0.0;
  for (int i = 0; i < kHermiteNodes; ++i) sum += rule.w[i] * f(z + scale * rule.x[i]);
  return sum / std::sqrt(3.14159265358979323846);
}

AveragedCoefficients average_coefficients(const Coefficients& c, double z, double variance) {
  AveragedCoefficients avg;
  avg.sigma = ergodic_average(c.sigma, z, variance);
  avg.sigma_sq = ergodic_average([&](double y) { const double s = c.sigma(y); return s * s; }, z, variance);
  avg.mu = ergodic_average(c.mu, z, variance);
  return avg;
}

}  // namespace poolsim
