#include <doctest.h>

#include <cmath>
#include <limits>

#include "poolsim/errors.hpp"
#include "poolsim/pathwise.hpp"
#include "poolsim/special.hpp"
#include "support.hpp"

using namespace poolsim;
using testing::Gen;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ModelParams collapsed(double eps) {
  ModelParams p = reference_params(eps);
  p.xi = 0.0;
  p.y0 = 0.0;
  return p;
}

IncrementPath zeros(std::int64_t n) { return IncrementPath{std::vector<double>(static_cast<std::size_t>(n), 0.0)}; }

}  // namespace

TEST_SUITE("pathwise") {

TEST_CASE("approximation names") {
  for (const auto k : kAllApproximations) CHECK(parse_approx_kind(to_string(k)) == k);
  CHECK(to_string(ApproxKind::erg2YZ) == "erg2YZ");
  CHECK_THROWS_AS(parse_approx_kind("erg3Y"), ConfigError);
  CHECK(lambda(Averaging::linear) == 1);
  CHECK(lambda(Averaging::quadratic) == 0);
}

TEST_CASE("market path construction") {
  const ModelParams p = reference_params(1e-2);
  const GridSpec grid{1.0, 400};
  const auto mkt = simulate_market(p, grid, 3);
  CHECK(mkt.z.size() == 401);
  CHECK(mkt.dwx.size() == 400);
  CHECK(mkt.z[0] == 0.0);
  const auto z = ou_path_exact(p, grid, mkt.dwy, p.rho_y, 0.0);
  CHECK(z.values == mkt.z.values);
  CHECK(std::abs(mkt.wx_T - mkt.dwx.total()) < 1e-12);
  CHECK(std::abs(mkt.wy_T - mkt.dwy.total()) < 1e-12);
  const auto again = simulate_market(p, grid, 3);
  CHECK(again.dwx.values == mkt.dwx.values);
  // Terminal values do not depend on the grid or on epsilon.
  const auto fine = simulate_market(reference_params(1e-3), {1.0, 4000}, 3);
  CHECK(fine.wx_T == mkt.wx_T);
  CHECK(fine.wy_T == mkt.wy_T);
  CHECK_THROWS_AS(make_market_path(p, grid, zeros(400), zeros(399)), ConfigError);
}

TEST_CASE("inner conditional CDF with constant volatility") {
  const ModelParams p = collapsed(1.0);
  const GridSpec grid{1.0, 50};
  const auto mkt = make_market_path(p, grid, zeros(50), zeros(50));
  const auto y1 = ou_path_exact(p, grid, zeros(50), 1.0, 0.0);
  const double B = -0.1;
  const double expected =
      norm_cdf((B + 0.5 * p.m * p.m * grid.T) / std::sqrt((1.0 - p.rho_x * p.rho_x) * p.m * p.m * grid.T));
  CHECK(std::abs(conditional_cdf_inner(p, mkt, y1, B) - expected) < 1e-15);
}

TEST_CASE("inner conditional CDF: exp-OU form equals the generic form") {
  testing::for_all(40, 51, [](Gen& g) {
    const ModelParams p = g.params();
    const GridSpec grid{g.uniform(0.5, 2.0), g.integer(1, 300)};
    const auto mkt = g.market(p, grid);
    const auto y1 = g.y_path(p, grid);
    const auto c = exp_ou_coefficients(p);
    for (int i = 0; i < 5; ++i) {
      const double B = g.uniform(-0.6, 0.2);
      const double fast = conditional_cdf_inner(p, mkt, y1, B);
      const double generic = conditional_cdf_inner(c, p, mkt, y1, B);
      CHECK(std::abs(fast - generic) < 1e-12);
    }
  });
}

TEST_CASE("inner conditional CDF is nondecreasing in B and bounded") {
  testing::for_all(30, 52, [](Gen& g) {
    const ModelParams p = g.params();
    const GridSpec grid{1.0, 100};
    const auto mkt = g.market(p, grid);
    const auto y1 = g.y_path(p, grid);
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double B = -1.0 + 1.2 * i / 200.0;
      const double v = conditional_cdf_inner(p, mkt, y1, B);
      CHECK(v >= prev);
      CHECK(v <= 1.0);
      prev = v;
    }
    CHECK(conditional_cdf_inner(p, mkt, y1, -kInf) == 0.0);
    CHECK(conditional_cdf_inner(p, mkt, y1, kInf) == 1.0);
  });
}

TEST_CASE("conditional density is the B-derivative") {
  testing::for_all(20, 53, [](Gen& g) {
    const ModelParams p = g.params();
    const GridSpec grid{1.0, 80};
    const auto mkt = g.market(p, grid);
    const auto y1 = g.y_path(p, grid);
    const double B = g.uniform(-0.4, 0.1);
    const double h = 1e-5;
    const double fd =
        (conditional_cdf_inner(p, mkt, y1, B + h) - conditional_cdf_inner(p, mkt, y1, B - h)) / (2.0 * h);
    const double d = conditional_density_inner(p, mkt, y1, B);
    CHECK(d >= 0.0);
    CHECK(std::abs(fd - d) < 1e-6 * std::max(1.0, d));
    const double mass = testing::integrate(
        [&](double b) { return conditional_density_inner(p, mkt, y1, b); }, -5.0, 5.0, 1e-12);
    const double diff = conditional_cdf_inner(p, mkt, y1, 5.0) - conditional_cdf_inner(p, mkt, y1, -5.0);
    CHECK(std::abs(mass - diff) < 1e-6);
  });
}

TEST_CASE("nested estimator: degenerate volatility and streamed inner paths") {
  ModelParams p = collapsed(0.5);
  const GridSpec grid{1.0, 80};
  auto mkt = simulate_market(p, grid, 4);
  const auto t = true_loss(p, mkt, -0.1, 100, 5);
  CHECK(t.sample_std == 0.0);

  p = reference_params(0.5);
  mkt = simulate_market(p, grid, 4);
  RunOptions opts;
  opts.threads = 2;
  const auto est = true_loss(p, mkt, -0.08, 1000, 6, opts);
  const double rho = std::sqrt(1.0 - p.rho_y * p.rho_y);
  const auto manual = run(
      [&](const SampleContext& ctx) {
        const auto y1 = ou_path_exact(
            p, grid, gaussian_increments({ctx.seed, StreamRole::inner_y1, ctx.index}, grid), rho, p.y0);
        return conditional_cdf_inner(p, mkt, y1, -0.08);
      },
      1000, 6, opts);
  CHECK(est.mean == manual.mean);
  CHECK(est.sample_std == manual.sample_std);

  const auto [cdf, pdf] = true_loss_and_density(p, mkt, -0.08, 1000, 6, opts);
  CHECK(cdf.mean == est.mean);
  CHECK(pdf.mean > 0.0);
}

TEST_CASE("finite pool loss limits and bitwise agreement with the asset scheme") {
  const ModelParams p = reference_params(0.2);
  const GridSpec grid{1.0, 100};
  const auto mkt = simulate_market(p, grid, 8);
  CHECK(finite_pool_loss(p, mkt, kInf, 20, 1) == 1.0);
  CHECK(finite_pool_loss(p, mkt, -kInf, 20, 1) == 0.0);
  CHECK_THROWS_AS(finite_pool_loss(p, mkt, 0.0, 0, 1), ConfigError);

  const std::uint64_t seed = 99;
  const double rho = std::sqrt(1.0 - p.rho_y * p.rho_y);
  std::vector<double> terminal;
  for (std::uint64_t i = 0; i < 30; ++i) {
    const auto y = ou_path_exact(p, grid, gaussian_increments({seed, StreamRole::firm_y, i}, grid), rho, p.y0);
    const auto x = asset_path_euler(p, grid, y, mkt.z, mkt.dwx,
                                    gaussian_increments({seed, StreamRole::firm_x, i}, grid));
    terminal.push_back(x.back());
  }
  std::vector<double> sorted = terminal;
  std::sort(sorted.begin(), sorted.end());
  // Barriers just above each terminal value count exactly the firms below.
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    const double B = sorted[j];
    const double count = static_cast<double>(j + 1);
    CHECK(finite_pool_loss(p, mkt, B, 30, seed) == count / 30.0);
  }
  const std::uint64_t sizes[] = {5, 30, 12};
  const auto losses = finite_pool_losses(p, mkt, sorted[10], sizes, seed);
  for (std::size_t j = 0; j < 3; ++j) CHECK(losses[j] == finite_pool_loss(p, mkt, sorted[10], sizes[j], seed));
}

TEST_CASE("large finite pool agrees with the nested estimator") {
  const ModelParams p = reference_params(0.1);
  const GridSpec grid{1.0, 200};
  for (std::uint64_t path = 0; path < 2; ++path) {
    const auto mkt = simulate_market(p, grid, 100 + path);
    const double B = -0.1;
    const auto t = true_loss(p, mkt, B, 20000, 7);
    const double pool = finite_pool_loss(p, mkt, B, 10000, 8);
    const double se = std::hypot(t.std_error(), std::sqrt(pool * (1.0 - pool) / 10000.0));
    CAPTURE(t.mean);
    CAPTURE(pool);
    CHECK(std::abs(t.mean - pool) < 3.0 * se);
  }
}

TEST_CASE("approximations: exp-OU forms equal the generic forms") {
  testing::for_all(40, 54, [](Gen& g) {
    const ModelParams p = g.params();
    const GridSpec grid{g.uniform(0.5, 2.0), g.integer(1, 200)};
    const auto mkt = g.market(p, grid);
    const auto c = exp_ou_coefficients(p);
    const double B = g.uniform(-0.5, 0.1);
    CHECK(std::abs(loss_appY(p, mkt, B) - loss_appY(c, p, mkt, B)) < 1e-12);
    for (const auto avg : {Averaging::linear, Averaging::quadratic}) {
      CHECK(std::abs(loss_ergY(p, mkt, B, avg) - loss_ergY(c, p, mkt, B, avg)) < 1e-12);
      CHECK(std::abs(loss_ergYZ(p, grid.T, mkt.wx_T, B, avg) - loss_ergYZ(c, p, grid.T, mkt.wx_T, B, avg)) <
            1e-12);
    }
  });
}

TEST_CASE("CLT-corrected approximation: explicit exp-OU factors") {
  testing::for_all(30, 55, [](Gen& g) {
    const ModelParams p = g.params();
    const GridSpec grid{1.0, g.integer(1, 200)};
    const auto mkt = g.market(p, grid);
    const double B = g.uniform(-0.5, 0.1);
    const double v = p.xi * p.xi * (1.0 - p.rho_y * p.rho_y) / p.k;
    double I = 0.0, J = 0.0;
    for (std::size_t n = 0; n < mkt.dwx.size(); ++n) {
      I += std::exp(2.0 * mkt.z[n]) * grid.dt();
      J += std::exp(mkt.z[n]) * mkt.dwx[n];
    }
    const double rx2 = p.rho_x * p.rho_x;
    const double arg = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * I) / std::sqrt((1.0 - rx2 * std::exp(-v)) * I) -
                       p.rho_x / std::sqrt(std::exp(v) - rx2) * J / std::sqrt(I);
    CHECK(std::abs(loss_appY(p, mkt, B) - norm_cdf(arg)) < 1e-12);
    for (const auto avg : {Averaging::linear, Averaging::quadratic}) {
      const double w = std::exp(-lambda(avg) * v / 2.0);
      const double erg = (B / p.m * std::exp(-v) + 0.5 * p.m * std::exp(v) * I) / std::sqrt((1.0 - rx2) * I) -
                         p.rho_x / std::sqrt(1.0 - rx2) * w * J / std::sqrt(I);
      CHECK(std::abs(loss_ergY(p, mkt, B, avg) - norm_cdf(erg)) < 1e-12);
    }
  });
}

TEST_CASE("ergodic Y+Z approximation") {
  const ModelParams p = reference_params(4e-3);
  const double v = 0.0676;
  const double arg = (-0.1 / 0.1 * std::exp(-v) + 0.05 * std::exp(v)) / std::sqrt(0.19);
  CHECK(std::abs(arg + 2.021467809948935) < 1e-12);
  CHECK(std::abs(loss_ergYZ(p, 1.0, 0.0, -0.1, Averaging::quadratic) - 0.021615680665321394) < 1e-14);
  CHECK(loss_ergYZ(p, 1.0, 0.0, -0.1, Averaging::linear) == loss_ergYZ(p, 1.0, 0.0, -0.1, Averaging::quadratic));
  testing::for_all(100, 56, [&](Gen& g) {
    ModelParams q = g.params();
    const double wx = g.normal();
    const double B = g.uniform(-0.5, 0.1);
    const double a = loss_ergYZ(q, 1.0, wx, B, Averaging::linear);
    q.epsilon = g.uniform(1e-5, 10.0);
    CHECK(loss_ergYZ(q, 1.0, wx, B, Averaging::linear) == a);
  });
  // Degenerate volatility: exact conditional CDF given W^x_T.
  const ModelParams c = collapsed(1.0);
  const double wx = 0.37;
  const double exact = norm_cdf((-0.1 + 0.5 * c.m * c.m - c.m * c.rho_x * wx) /
                                (c.m * std::sqrt(1.0 - c.rho_x * c.rho_x)));
  CHECK(std::abs(loss_ergYZ(c, 1.0, wx, -0.1, Averaging::quadratic) - exact) < 1e-14);
}

TEST_CASE("degenerate volatility collapses every estimator") {
  const ModelParams p = collapsed(0.1);
  const GridSpec grid{1.0, 400};
  const auto mkt = simulate_market(p, grid, 12);
  const double B = -0.1;
  const auto t = true_loss(p, mkt, B, 50, 1);
  CHECK(t.sample_std == 0.0);
  for (const auto kind : kAllApproximations) {
    CAPTURE(to_string(kind));
    CHECK(std::abs(approx_loss(kind, p, mkt, B) - t.mean) < 1e-12);
  }
  const auto y1 = ou_path_exact(p, grid, zeros(400), 1.0, 0.0);
  CHECK(std::abs(loss_appY(p, mkt, B) - conditional_cdf_inner(p, mkt, y1, B)) < 1e-15);
}

TEST_CASE("approximations are bounded and nondecreasing in B") {
  testing::for_all(30, 57, [](Gen& g) {
    const ModelParams p = g.params();
    const GridSpec grid{1.0, 100};
    const auto mkt = g.market(p, grid);
    for (const auto kind : kAllApproximations) {
      double prev = 0.0;
      for (int i = 0; i <= 100; ++i) {
        const double v = approx_loss(kind, p, mkt, -1.0 + 1.2 * i / 100.0);
        CHECK(v >= prev);
        CHECK(v <= 1.0);
        prev = v;
      }
    }
  });
}

TEST_CASE("approx_loss dispatch") {
  const ModelParams p = reference_params(1e-2);
  const auto mkt = simulate_market(p, {1.0, 400}, 2);
  CHECK(approx_loss(ApproxKind::appY, p, mkt, -0.1) == loss_appY(p, mkt, -0.1));
  CHECK(approx_loss(ApproxKind::erg1Y, p, mkt, -0.1) == loss_ergY(p, mkt, -0.1, Averaging::linear));
  CHECK(approx_loss(ApproxKind::erg2Y, p, mkt, -0.1) == loss_ergY(p, mkt, -0.1, Averaging::quadratic));
  CHECK(approx_loss(ApproxKind::erg1YZ, p, mkt, -0.1) == loss_ergYZ(p, 1.0, mkt.wx_T, -0.1, Averaging::linear));
  CHECK(approx_loss(ApproxKind::erg2YZ, p, mkt, -0.1) == loss_ergYZ(p, 1.0, mkt.wx_T, -0.1, Averaging::quadratic));
}

}  // TEST_SUITE
