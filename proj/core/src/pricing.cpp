#include "poolsim/pricing.hpp"

#include <algorithm>
#include <cmath>

#include "poolsim/errors.hpp"
#include "poolsim/special.hpp"

namespace poolsim {

namespace {

void require_positive_rho_x(const ModelParams& p) {
  if (!(p.rho_x > 0.0))
    throw UnsupportedConfiguration("tranche pricing requires rho_x > 0");
}

void require_horizon(const GridSpec& grid, double horizon) {
  if (std::abs(grid.T - horizon) > 1e-12 * std::max(1.0, horizon))
    throw ConfigError("grid horizon differs from the tranche horizon");
}

void require_attachments(std::span<const double> attachments) {
  if (attachments.empty()) throw ConfigError("no attachment points given");
  for (const double a : attachments)
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("attachment must lie in [0, 1]");
}

// dt sum e^{2 z_n} and sum e^{z_n} dW^y_{n+1}.
struct ZSums {
  double quad = 0.0;
  double ito = 0.0;
};

ZSums z_sums_streamed(const ModelParams& p, const GridSpec& grid, GaussianStream& wy) {
  const double dt = grid.dt();
  const double scale = std::sqrt(dt);
  const double decay = p.ou_decay(dt);
  const double vol = p.ou_vol() * p.rho_y;
  ZSums s;
  double z = 0.0;
  for (std::int64_t n = 0; n < grid.N; ++n) {
    const double e = std::exp(z);
    const double dw = scale * wy.next();
    s.quad += e * e;
    s.ito += e * dw;
    z = decay * (z + vol * dw);
  }
  s.quad *= dt;
  return s;
}

ZSums z_sums(const GridSpec& grid, const FactorPath& z, const IncrementPath& dwy) {
  const auto n_steps = static_cast<std::size_t>(grid.N);
  if (z.size() != n_steps + 1 || dwy.size() != n_steps)
    throw ConfigError("factor path or increments do not match the grid");
  ZSums s;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double e = std::exp(z[n]);
    s.quad += e * e;
    s.ito += e * dwy[n];
  }
  s.quad *= grid.dt();
  return s;
}

CallCoeffs appY_from_sums(const ModelParams& p, const ZSums& s, double B) {
  const double v = stationary_variances(p).var_y;
  const double rx2 = p.rho_x * p.rho_x;
  CallCoeffs c;
  c.c0 = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * s.quad -
          p.rho_x * p.rho_xy * std::exp(-0.5 * v) * s.ito) /
         std::sqrt((1.0 - rx2 * std::exp(-v)) * s.quad);
  c.c1 = p.rho_x * std::sqrt(1.0 - p.rho_xy * p.rho_xy) / std::sqrt(std::exp(v) - rx2);
  return c;
}

CallCoeffs ergY_from_sums(const ModelParams& p, const ZSums& s, double B, Averaging avg) {
  const double v = stationary_variances(p).var_y;
  const double orth = std::sqrt(1.0 - p.rho_x * p.rho_x);
  const double weight = std::exp(-lambda(avg) * 0.5 * v);
  CallCoeffs c;
  c.c0 = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * s.quad -
          p.rho_x * p.rho_xy * weight * s.ito) /
         (orth * std::sqrt(s.quad));
  c.c1 = p.rho_x * std::sqrt(1.0 - p.rho_xy * p.rho_xy) / orth * weight;
  return c;
}

void price_strikes(const CallCoeffs& c, std::span<const double> attachments, std::span<double> out) {
  for (std::size_t i = 0; i < attachments.size(); ++i)
    out[i] = tranche_call_given_coeffs(c, attachments[i]);
}

void payoff_strikes(double loss, std::span<const double> attachments, std::span<double> out) {
  for (std::size_t i = 0; i < attachments.size(); ++i) out[i] = std::max(loss - attachments[i], 0.0);
}

}  // namespace

void TrancheSpec::validate() const {
  if (!(attachment >= 0.0 && attachment <= 1.0)) throw DomainError("attachment must lie in [0, 1]");
  if (std::isnan(barrier)) throw ConfigError("barrier must not be NaN");
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
}

double tranche_call_given_coeffs(const CallCoeffs& c, double a) {
  if (!(a >= 0.0 && a <= 1.0)) throw DomainError("attachment must lie in [0, 1]");
  if (!(c.c1 > 0.0)) throw DomainError("call coefficient c1 must be positive");
  const double s = std::sqrt(1.0 + c.c1 * c.c1);
  if (a == 0.0) return norm_cdf(c.c0 / s);
  if (a == 1.0) return 0.0;
  const double w0 = (c.c0 - norm_inv_cdf(a)) / c.c1;
  const double price = bvn_cdf(c.c0 / s, w0, c.c1 / s) - a * norm_cdf(w0);
  return std::max(price, 0.0);
}

CallCoeffs coeffs_appY(const ModelParams& p, const GridSpec& grid, const FactorPath& z,
                       const IncrementPath& dwy, double B) {
  require_positive_rho_x(p);
  return appY_from_sums(p, z_sums(grid, z, dwy), B);
}

CallCoeffs coeffs_ergY(const ModelParams& p, const GridSpec& grid, const FactorPath& z,
                       const IncrementPath& dwy, double B, Averaging avg) {
  require_positive_rho_x(p);
  return ergY_from_sums(p, z_sums(grid, z, dwy), B, avg);
}

CallCoeffs coeffs_ergYZ(const ModelParams& p, double T, double B, Averaging avg) {
  require_positive_rho_x(p);
  if (!(T > 0.0)) throw ConfigError("horizon must be positive");
  const double v = stationary_variances(p).var_yz;
  const double orth = std::sqrt(1.0 - p.rho_x * p.rho_x);
  CallCoeffs c;
  c.c0 = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * T) / (orth * std::sqrt(T));
  c.c1 = p.rho_x / orth * std::exp(-lambda(avg) * 0.5 * v);
  return c;
}

std::vector<Estimate> call_appY(const ModelParams& p, const GridSpec& grid, double B,
                                std::span<const double> attachments, std::uint64_t n_outer,
                                std::uint64_t seed, const RunOptions& options) {
  require_positive_rho_x(p);
  require_attachments(attachments);
  grid.validate();
  return run_multi(
      attachments.size(),
      [&](const SampleContext& ctx, std::span<double> out) {
        GaussianStream wy(ctx.stream(StreamRole::market_y));
        price_strikes(appY_from_sums(p, z_sums_streamed(p, grid, wy), B), attachments, out);
      },
      n_outer, seed, options);
}

Estimate call_appY(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                   std::uint64_t n_outer, std::uint64_t seed, const RunOptions& options) {
  spec.validate();
  require_horizon(grid, spec.horizon);
  const double a[] = {spec.attachment};
  return call_appY(p, grid, spec.barrier, a, n_outer, seed, options)[0];
}

std::vector<Estimate> call_ergY(const ModelParams& p, const GridSpec& grid, double B,
                                std::span<const double> attachments, Averaging avg,
                                std::uint64_t n_outer, std::uint64_t seed,
                                const RunOptions& options) {
  require_positive_rho_x(p);
  require_attachments(attachments);
  grid.validate();
  return run_multi(
      attachments.size(),
      [&](const SampleContext& ctx, std::span<double> out) {
        GaussianStream wy(ctx.stream(StreamRole::market_y));
        price_strikes(ergY_from_sums(p, z_sums_streamed(p, grid, wy), B, avg), attachments, out);
      },
      n_outer, seed, options);
}

Estimate call_ergY(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                   Averaging avg, std::uint64_t n_outer, std::uint64_t seed,
                   const RunOptions& options) {
  spec.validate();
  require_horizon(grid, spec.horizon);
  const double a[] = {spec.attachment};
  return call_ergY(p, grid, spec.barrier, a, avg, n_outer, seed, options)[0];
}

double call_ergYZ(const ModelParams& p, const TrancheSpec& spec, Averaging avg) {
  spec.validate();
  return tranche_call_given_coeffs(coeffs_ergYZ(p, spec.horizon, spec.barrier, avg),
                                   spec.attachment);
}

Estimate call_firms(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                    std::uint64_t n_firms, std::uint64_t n_outer, std::uint64_t seed,
                    const RunOptions& options) {
  spec.validate();
  require_horizon(grid, spec.horizon);
  if (n_firms < 1) throw ConfigError("call_firms needs at least one firm");
  return run(
      [&](const SampleContext& ctx) {
        const auto mkt = simulate_market(p, grid, ctx.sample_seed());
        const double loss = finite_pool_loss(p, mkt, spec.barrier, n_firms, ctx.sample_seed());
        return std::max(loss - spec.attachment, 0.0);
      },
      n_outer, seed, options);
}

std::vector<Estimate> call_firms(const ModelParams& p, const GridSpec& grid, double B,
                                 std::span<const double> attachments,
                                 std::span<const std::uint64_t> n_firms, std::uint64_t n_outer,
                                 std::uint64_t seed, const RunOptions& options) {
  require_attachments(attachments);
  if (n_firms.size() != attachments.size())
    throw ConfigError("call_firms needs one firm count per attachment");
  grid.validate();
  return run_multi(
      attachments.size(),
      [&](const SampleContext& ctx, std::span<double> out) {
        const auto mkt = simulate_market(p, grid, ctx.sample_seed());
        const auto losses = finite_pool_losses(p, mkt, B, n_firms, ctx.sample_seed());
        for (std::size_t j = 0; j < attachments.size(); ++j)
          out[j] = std::max(losses[j] - attachments[j], 0.0);
      },
      n_outer, seed, options);
}

std::vector<Estimate> call_limiting(const ModelParams& p, const GridSpec& grid, double B,
                                    std::span<const double> attachments, std::uint64_t n_outer,
                                    std::uint64_t n_inner, std::uint64_t seed,
                                    const RunOptions& options) {
  require_attachments(attachments);
  if (n_inner < 2) throw ConfigError("call_limiting needs at least two inner samples");
  RunOptions inner_options;
  inner_options.threads = 1;
  return run_multi(
      attachments.size(),
      [&](const SampleContext& ctx, std::span<double> out) {
        const auto mkt = simulate_market(p, grid, ctx.sample_seed());
        const double loss = true_loss(p, mkt, B, n_inner, ctx.sample_seed(), inner_options).mean;
        payoff_strikes(loss, attachments, out);
      },
      n_outer, seed, options);
}

Estimate call_limiting(const ModelParams& p, const GridSpec& grid, const TrancheSpec& spec,
                       std::uint64_t n_outer, std::uint64_t n_inner, std::uint64_t seed,
                       const RunOptions& options) {
  spec.validate();
  require_horizon(grid, spec.horizon);
  const double a[] = {spec.attachment};
  return call_limiting(p, grid, spec.barrier, a, n_outer, n_inner, seed, options)[0];
}

Estimate expected_loss(const ModelParams& p, const GridSpec& grid, double B,
                       std::uint64_t n_samples, std::uint64_t seed, const RunOptions& options) {
  grid.validate();
  const double shrink = 1.0 - p.rho_x * p.rho_x * p.rho_xy * p.rho_xy;
  if (!(shrink > 0.0)) throw DomainError("expected_loss requires rho_x^2 rho_xy^2 < 1");
  const double dt = grid.dt();
  const double scale = std::sqrt(dt);
  const double decay = p.ou_decay(dt);
  const double vol_z = p.ou_vol() * p.rho_y;
  const double vol_y = p.ou_vol() * std::sqrt(1.0 - p.rho_y * p.rho_y);
  const double corr = p.rho_x * p.rho_xy;
  return run(
      [&](const SampleContext& ctx) {
        GaussianStream wy(ctx.stream(StreamRole::market_y));
        GaussianStream wy1(ctx.stream(StreamRole::inner_y1));
        double z = 0.0;
        double y = p.y0;
        double quad = 0.0;
        double ito = 0.0;
        for (std::int64_t n = 0; n < grid.N; ++n) {
          const double e = std::exp(y + z);
          const double dw = scale * wy.next();
          quad += e * e;
          ito += e * dw;
          z = decay * (z + vol_z * dw);
          y = decay * (y + vol_y * (scale * wy1.next()));
        }
        quad *= dt;
        return norm_cdf((B / p.m + 0.5 * p.m * quad - corr * ito) / std::sqrt(shrink * quad));
      },
      n_samples, seed, options);
}

}  // namespace poolsim
