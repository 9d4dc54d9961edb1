#include "poolsim/schemes.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <string>

#include "poolsim/errors.hpp"

namespace poolsim {

namespace {

void require_length(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) throw ConfigError(std::string(what) + ": path length does not match grid");
}

}  // namespace

bool euler_is_stable(const ModelParams& p, const GridSpec& grid) noexcept {
  return p.k * grid.dt() / p.epsilon < 2.0;
}

FactorPath ou_path_euler(const ModelParams& p, const GridSpec& grid, const IncrementPath& dw,
                         double rho_factor, double init) {
  grid.validate();
  require_length(dw.size(), static_cast<std::size_t>(grid.N), "ou_path_euler");
  if (!euler_is_stable(p, grid)) {
    std::clog << "warning: explicit OU scheme unstable, k*dt/eps = " << p.k * grid.dt() / p.epsilon
              << " >= 2\n";
  }
  const double decay = 1.0 - p.k * grid.dt() / p.epsilon;
  const double vol = p.ou_vol() * rho_factor;
  FactorPath path;
  path.values.resize(dw.size() + 1);
  path.values[0] = init;
  for (std::size_t n = 1; n < path.values.size(); ++n)
    path.values[n] = decay * path.values[n - 1] + vol * dw[n - 1];
  return path;
}

FactorPath ou_path_exact(const ModelParams& p, const GridSpec& grid, const IncrementPath& dw,
                         double rho_factor, double init) {
  grid.validate();
  require_length(dw.size(), static_cast<std::size_t>(grid.N), "ou_path_exact");
  const double decay = p.ou_decay(grid.dt());
  const double vol = p.ou_vol() * rho_factor;
  FactorPath path;
  path.values.resize(dw.size() + 1);
  path.values[0] = init;
  for (std::size_t n = 1; n < path.values.size(); ++n)
    path.values[n] = decay * (path.values[n - 1] + vol * dw[n - 1]);
  return path;
}

AssetPath asset_path_euler(const ModelParams& p, const GridSpec& grid, const FactorPath& y,
                           const FactorPath& z, const IncrementPath& dwx_market,
                           const IncrementPath& dwx_idio) {
  grid.validate();
  const auto n_steps = static_cast<std::size_t>(grid.N);
  require_length(y.size(), n_steps + 1, "asset_path_euler");
  require_length(z.size(), n_steps + 1, "asset_path_euler");
  require_length(dwx_market.size(), n_steps, "asset_path_euler");
  require_length(dwx_idio.size(), n_steps, "asset_path_euler");

  const double dt = grid.dt();
  const double idio = std::sqrt(1.0 - p.rho_x * p.rho_x);
  AssetPath x;
  x.values.resize(n_steps + 1);
  x.values[0] = 0.0;
  for (std::size_t n = 1; n <= n_steps; ++n) {
    const double v = y[n - 1] + z[n - 1];
    x.values[n] = x.values[n - 1] + mu(v, p) * dt +
                  sigma(v, p) * (p.rho_x * dwx_market[n - 1] + idio * dwx_idio[n - 1]);
  }
  return x;
}

void write_path_csv(std::ostream& out, const GridSpec& grid, const FactorPath& y,
                    const FactorPath& z, const AssetPath& x) {
  const auto points = static_cast<std::size_t>(grid.N) + 1;
  require_length(y.size(), points, "write_path_csv");
  require_length(z.size(), points, "write_path_csv");
  require_length(x.size(), points, "write_path_csv");
  out << "t,y,z,x\n" << std::setprecision(17);
  for (std::size_t n = 0; n < points; ++n)
    out << grid.time(static_cast<std::int64_t>(n)) << ',' << y[n] << ',' << z[n] << ',' << x[n] << '\n';
}

}  // namespace poolsim
