#pragma once

#include <iosfwd>
#include <vector>

#include "poolsim/model.hpp"
#include "poolsim/noise.hpp"

namespace poolsim {

// Values of a fast factor (Y^i or Z) on grid times t_0..t_N.
struct FactorPath {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
  double back() const noexcept { return values.back(); }
};

// Log-asset values x^i on t_0..t_N, starting from 0.
struct AssetPath {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
  double back() const noexcept { return values.back(); }
};

// Euler-Maruyama for the fast OU factor:
//   v_n = v_{n-1} - (k dt / eps) v_{n-1} + (xi sqrt(2) / sqrt(eps)) rho_factor dW_n
// where dt is the physical grid step, i.e. eps times the step of the fast
// time scale. Writes a warning to std::clog when k dt / eps >= 2.
FactorPath ou_path_euler(const ModelParams& p, const GridSpec& grid, const IncrementPath& dw,
                         double rho_factor, double init);

// Exact-kernel recursion
//   v_n = e^{-k dt / eps} (v_{n-1} + (xi sqrt(2) / sqrt(eps)) rho_factor dW_n).
// Y paths use rho_factor = sqrt(1 - rho_y^2), init = y0; Z paths use
// rho_factor = rho_y, init = 0.
FactorPath ou_path_exact(const ModelParams& p, const GridSpec& grid, const IncrementPath& dw,
                         double rho_factor, double init);

bool euler_is_stable(const ModelParams& p, const GridSpec& grid) noexcept;

// Log-asset Euler step with coefficients evaluated at the left point:
//   x_n = x_{n-1} + mu(y_{n-1} + z_{n-1}) dt
//         + sigma(y_{n-1} + z_{n-1}) (rho_x dW^x_n + sqrt(1 - rho_x^2) dW^{x,i}_n)
AssetPath asset_path_euler(const ModelParams& p, const GridSpec& grid, const FactorPath& y,
                           const FactorPath& z, const IncrementPath& dwx_market,
                           const IncrementPath& dwx_idio);

// Debug dump with header "t,y,z,x".
void write_path_csv(std::ostream& out, const GridSpec& grid, const FactorPath& y,
                    const FactorPath& z, const AssetPath& x);

}  // namespace poolsim
