#include "poolsim/pathwise.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "poolsim/errors.hpp"
#include "poolsim/special.hpp"

namespace poolsim {

namespace {

void require_grid(const MarketPath& mkt, const FactorPath& y1) {
  if (y1.size() != mkt.z.size())
    throw ConfigError("idiosyncratic factor path is not on the market grid");
}

void require_rho_x(const ModelParams& p) {
  if (!(p.rho_x * p.rho_x < 1.0)) throw DomainError("|rho_x| must be < 1");
}

// dt * sum e^{2(y+z)} and sum e^{y+z} dW^x over the left points.
struct InnerSums {
  double quad = 0.0;
  double ito = 0.0;
};

InnerSums inner_sums(const MarketPath& mkt, const FactorPath& y1) {
  InnerSums s;
  const std::size_t n_steps = mkt.dwx.size();
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double e = std::exp(y1[n]) * mkt.exp_z[n];
    s.quad += e * e;
    s.ito += e * mkt.dwx[n];
  }
  s.quad *= mkt.grid.dt();
  return s;
}

// The same sums with y1 generated on the fly from its stream, matching
// ou_path_exact over gaussian_increments operation for operation.
InnerSums inner_sums_streamed(const ModelParams& p, const MarketPath& mkt, GaussianStream& stream) {
  const double dt = mkt.grid.dt();
  const double scale = std::sqrt(dt);
  const double decay = p.ou_decay(dt);
  const double vol = p.ou_vol() * std::sqrt(1.0 - p.rho_y * p.rho_y);
  InnerSums s;
  double y = p.y0;
  const std::size_t n_steps = mkt.dwx.size();
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double e = std::exp(y) * mkt.exp_z[n];
    s.quad += e * e;
    s.ito += e * mkt.dwx[n];
    y = decay * (y + vol * (scale * stream.next()));
  }
  s.quad *= dt;
  return s;
}

// Argument of Phi in the exp-OU conditional CDF.
double inner_argument(const ModelParams& p, const InnerSums& s, double B) {
  const double orth = std::sqrt(1.0 - p.rho_x * p.rho_x);
  const double root = std::sqrt(s.quad);
  return (B / p.m + 0.5 * p.m * s.quad) / (orth * root) - p.rho_x / orth * s.ito / root;
}

double inner_density(const ModelParams& p, const InnerSums& s, double B) {
  const double denom = p.m * std::sqrt((1.0 - p.rho_x * p.rho_x) * s.quad);
  return norm_pdf(inner_argument(p, s, B)) / denom;
}

// dt * sum e^{2z} and sum e^{z} dW^x.
struct MarketSums {
  double quad = 0.0;
  double ito = 0.0;
};

MarketSums market_sums(const MarketPath& mkt) {
  MarketSums s;
  for (std::size_t n = 0; n < mkt.dwx.size(); ++n) {
    s.quad += mkt.exp_z[n] * mkt.exp_z[n];
    s.ito += mkt.exp_z[n] * mkt.dwx[n];
  }
  s.quad *= mkt.grid.dt();
  return s;
}

// Discretised integrals of the conditional ergodic averages along z.
struct AveragedSums {
  double mu = 0.0;        // dt sum <mu>
  double sigma_sq = 0.0;  // dt sum <sigma^2>
  double sigma_sq_linear = 0.0;  // dt sum <sigma>^2
  double ito_linear = 0.0;       // sum <sigma> dW^x
  double ito_quadratic = 0.0;    // sum <sigma^2>^{1/2} dW^x
};

AveragedSums averaged_sums(const Coefficients& c, const ModelParams& p, const MarketPath& mkt) {
  const double var_y = stationary_variances(p).var_y;
  const double dt = mkt.grid.dt();
  AveragedSums s;
  for (std::size_t n = 0; n < mkt.dwx.size(); ++n) {
    const auto avg = average_coefficients(c, mkt.z[n], var_y);
    s.mu += avg.mu;
    s.sigma_sq += avg.sigma_sq;
    s.sigma_sq_linear += avg.sigma * avg.sigma;
    s.ito_linear += avg.sigma * mkt.dwx[n];
    s.ito_quadratic += std::sqrt(avg.sigma_sq) * mkt.dwx[n];
  }
  s.mu *= dt;
  s.sigma_sq *= dt;
  s.sigma_sq_linear *= dt;
  return s;
}

}  // namespace

std::string_view to_string(ApproxKind kind) {
  switch (kind) {
    case ApproxKind::appY: return "appY";
    case ApproxKind::erg1Y: return "erg1Y";
    case ApproxKind::erg2Y: return "erg2Y";
    case ApproxKind::erg1YZ: return "erg1YZ";
    case ApproxKind::erg2YZ: return "erg2YZ";
  }
  return "unknown";
}

ApproxKind parse_approx_kind(std::string_view name) {
  for (const auto kind : kAllApproximations)
    if (to_string(kind) == name) return kind;
  throw ConfigError("unknown approximation '" + std::string(name) + "'");
}

MarketPath make_market_path(const ModelParams& p, const GridSpec& grid, IncrementPath dwy,
                            IncrementPath dwx) {
  grid.validate();
  const auto n_steps = static_cast<std::size_t>(grid.N);
  if (dwy.size() != n_steps || dwx.size() != n_steps)
    throw ConfigError("market increments do not match the grid");
  MarketPath mkt;
  mkt.grid = grid;
  mkt.z = ou_path_exact(p, grid, dwy, p.rho_y, 0.0);
  mkt.wx_T = dwx.total();
  mkt.wy_T = dwy.total();
  mkt.dwx = std::move(dwx);
  mkt.dwy = std::move(dwy);
  mkt.exp_z.resize(mkt.z.size());
  for (std::size_t n = 0; n < mkt.z.size(); ++n) mkt.exp_z[n] = std::exp(mkt.z[n]);
  return mkt;
}

MarketPath simulate_market(const ModelParams& p, const GridSpec& grid, std::uint64_t seed) {
  auto wy = pinned_increments({seed, StreamRole::market_y, 0}, grid);
  auto wx_orth = pinned_increments({seed, StreamRole::market_x_orth, 0}, grid);
  auto dwx = correlate_market_x(wy.increments, wx_orth.increments, p.rho_xy);
  MarketPath mkt = make_market_path(p, grid, std::move(wy.increments), std::move(dwx));
  mkt.wy_T = wy.terminal;
  mkt.wx_T = p.rho_xy * wy.terminal + std::sqrt(1.0 - p.rho_xy * p.rho_xy) * wx_orth.terminal;
  return mkt;
}

double conditional_cdf_inner(const ModelParams& p, const MarketPath& mkt, const FactorPath& y1,
                             double B) {
  require_rho_x(p);
  require_grid(mkt, y1);
  return norm_cdf(inner_argument(p, inner_sums(mkt, y1), B));
}

double conditional_cdf_inner(const Coefficients& c, const ModelParams& p, const MarketPath& mkt,
                             const FactorPath& y1, double B) {
  require_rho_x(p);
  require_grid(mkt, y1);
  double drift = 0.0, ito = 0.0, quad = 0.0;
  for (std::size_t n = 0; n < mkt.dwx.size(); ++n) {
    const double v = y1[n] + mkt.z[n];
    const double s = c.sigma(v);
    drift += c.mu(v);
    ito += s * mkt.dwx[n];
    quad += s * s;
  }
  const double dt = mkt.grid.dt();
  const double num = B - dt * drift - p.rho_x * ito;
  return norm_cdf(num / std::sqrt((1.0 - p.rho_x * p.rho_x) * dt * quad));
}

double conditional_density_inner(const ModelParams& p, const MarketPath& mkt, const FactorPath& y1,
                                 double B) {
  require_rho_x(p);
  require_grid(mkt, y1);
  return inner_density(p, inner_sums(mkt, y1), B);
}

Estimate true_loss(const ModelParams& p, const MarketPath& mkt, double B, std::uint64_t n_inner,
                   std::uint64_t seed, const RunOptions& options) {
  require_rho_x(p);
  return run(
      [&](const SampleContext& ctx) {
        GaussianStream stream({ctx.seed, StreamRole::inner_y1, ctx.index});
        return norm_cdf(inner_argument(p, inner_sums_streamed(p, mkt, stream), B));
      },
      n_inner, seed, options);
}

std::pair<Estimate, Estimate> true_loss_and_density(const ModelParams& p, const MarketPath& mkt,
                                                    double B, std::uint64_t n_inner,
                                                    std::uint64_t seed,
                                                    const RunOptions& options) {
  require_rho_x(p);
  const auto est = run_multi(
      2,
      [&](const SampleContext& ctx, std::span<double> out) {
        GaussianStream stream({ctx.seed, StreamRole::inner_y1, ctx.index});
        const auto sums = inner_sums_streamed(p, mkt, stream);
        out[0] = norm_cdf(inner_argument(p, sums, B));
        out[1] = inner_density(p, sums, B);
      },
      n_inner, seed, options);
  return {est[0], est[1]};
}

std::vector<double> finite_pool_losses(const ModelParams& p, const MarketPath& mkt, double B,
                                       std::span<const std::uint64_t> pool_sizes,
                                       std::uint64_t seed) {
  if (pool_sizes.empty()) throw ConfigError("finite_pool_losses needs at least one pool size");
  for (const auto n : pool_sizes)
    if (n < 1) throw ConfigError("finite_pool_losses needs at least one firm");
  const std::uint64_t n_firms = *std::max_element(pool_sizes.begin(), pool_sizes.end());
  const double dt = mkt.grid.dt();
  const double scale = std::sqrt(dt);
  const double decay = p.ou_decay(dt);
  const double vol = p.ou_vol() * std::sqrt(1.0 - p.rho_y * p.rho_y);
  const double idio = std::sqrt(1.0 - p.rho_x * p.rho_x);
  const std::size_t n_steps = mkt.dwx.size();

  // defaults_before[i]: defaults among firms 0..i-1
  std::vector<std::uint64_t> defaults_before(n_firms + 1, 0);
  for (std::uint64_t i = 0; i < n_firms; ++i) {
    GaussianStream wy({seed, StreamRole::firm_y, i});
    GaussianStream wx({seed, StreamRole::firm_x, i});
    double y = p.y0;
    double x = 0.0;
    for (std::size_t n = 0; n < n_steps; ++n) {
      const double s = sigma(y + mkt.z[n], p);
      x = x + (-0.5 * s * s) * dt + s * (p.rho_x * mkt.dwx[n] + idio * (scale * wx.next()));
      y = decay * (y + vol * (scale * wy.next()));
    }
    defaults_before[i + 1] = defaults_before[i] + (x <= B ? 1 : 0);
  }
  std::vector<double> losses;
  losses.reserve(pool_sizes.size());
  for (const auto n : pool_sizes)
    losses.push_back(static_cast<double>(defaults_before[n]) / static_cast<double>(n));
  return losses;
}

double finite_pool_loss(const ModelParams& p, const MarketPath& mkt, double B,
                        std::uint64_t n_firms, std::uint64_t seed) {
  if (n_firms < 1) throw ConfigError("finite_pool_loss needs at least one firm");
  const std::uint64_t sizes[] = {n_firms};
  return finite_pool_losses(p, mkt, B, sizes, seed)[0];
}

double loss_appY(const ModelParams& p, const MarketPath& mkt, double B) {
  require_rho_x(p);
  const double v = stationary_variances(p).var_y;
  const auto s = market_sums(mkt);
  const double root = std::sqrt(s.quad);
  const double rx2 = p.rho_x * p.rho_x;
  const double arg = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * s.quad) /
                         std::sqrt((1.0 - rx2 * std::exp(-v)) * s.quad) -
                     p.rho_x / std::sqrt(std::exp(v) - rx2) * s.ito / root;
  return norm_cdf(arg);
}

double loss_appY(const Coefficients& c, const ModelParams& p, const MarketPath& mkt, double B) {
  require_rho_x(p);
  const auto s = averaged_sums(c, p, mkt);
  const double num = B - s.mu - p.rho_x * s.ito_linear;
  const double den = std::sqrt(s.sigma_sq - p.rho_x * p.rho_x * s.sigma_sq_linear);
  return norm_cdf(num / den);
}

double loss_ergY(const ModelParams& p, const MarketPath& mkt, double B, Averaging avg) {
  require_rho_x(p);
  const double v = stationary_variances(p).var_y;
  const auto s = market_sums(mkt);
  const double root = std::sqrt(s.quad);
  const double orth = std::sqrt(1.0 - p.rho_x * p.rho_x);
  const double arg = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * s.quad) / (orth * root) -
                     p.rho_x / orth * std::exp(-lambda(avg) * 0.5 * v) * s.ito / root;
  return norm_cdf(arg);
}

double loss_ergY(const Coefficients& c, const ModelParams& p, const MarketPath& mkt, double B,
                 Averaging avg) {
  require_rho_x(p);
  const auto s = averaged_sums(c, p, mkt);
  const double ito = avg == Averaging::linear ? s.ito_linear : s.ito_quadratic;
  const double num = B - s.mu - p.rho_x * ito;
  return norm_cdf(num / std::sqrt((1.0 - p.rho_x * p.rho_x) * s.sigma_sq));
}

double loss_ergYZ(const ModelParams& p, double T, double wx_T, double B, Averaging avg) {
  require_rho_x(p);
  const double v = stationary_variances(p).var_yz;
  const double orth = std::sqrt(1.0 - p.rho_x * p.rho_x);
  const double arg = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * T) / (orth * std::sqrt(T)) -
                     p.rho_x / orth * std::exp(-lambda(avg) * 0.5 * v) * wx_T / std::sqrt(T);
  return norm_cdf(arg);
}

double loss_ergYZ(const Coefficients& c, const ModelParams& p, double T, double wx_T, double B,
                  Averaging avg) {
  require_rho_x(p);
  const auto bar = average_coefficients(c, 0.0, stationary_variances(p).var_yz);
  const double vol = avg == Averaging::linear ? bar.sigma : std::sqrt(bar.sigma_sq);
  const double num = B - bar.mu * T - p.rho_x * vol * wx_T;
  return norm_cdf(num / std::sqrt((1.0 - p.rho_x * p.rho_x) * bar.sigma_sq * T));
}

double approx_loss(ApproxKind kind, const ModelParams& p, const MarketPath& mkt, double B) {
  switch (kind) {
    case ApproxKind::appY: return loss_appY(p, mkt, B);
    case ApproxKind::erg1Y: return loss_ergY(p, mkt, B, Averaging::linear);
    case ApproxKind::erg2Y: return loss_ergY(p, mkt, B, Averaging::quadratic);
    case ApproxKind::erg1YZ: return loss_ergYZ(p, mkt.grid.T, mkt.wx_T, B, Averaging::linear);
    case ApproxKind::erg2YZ: return loss_ergYZ(p, mkt.grid.T, mkt.wx_T, B, Averaging::quadratic);
  }
  throw ConfigError("unknown approximation");
}

}  // namespace poolsim
