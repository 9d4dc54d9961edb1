#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "poolsim/errors.hpp"
#include "poolsim/montecarlo.hpp"
#include "support.hpp"

using namespace poolsim;

namespace {

double normal_draw(const SampleContext& ctx) { return GaussianStream(ctx.stream(StreamRole::firm_x)).next(); }

double lognormal_draw(const SampleContext& ctx) {
  GaussianStream g(ctx.stream(StreamRole::market_y));
  return std::exp(0.5 * g.next()) + 1e3;
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("constant sampler") {
  const auto e = run([](const SampleContext&) { return 0.375; }, 1000, 1);
  CHECK(e.mean == 0.375);
  CHECK(e.sample_std == 0.0);
  CHECK(e.n == 1000);
  CHECK(e.std_error() == 0.0);
  CHECK(e.rel_se() == 0.0);
  const auto zero = run([](const SampleContext&) { return 0.0; }, 10, 1);
  CHECK(zero.rel_se() == 0.0);
}

TEST_CASE("standard normal sampler") {
  const std::uint64_t n = 1000000;
  const auto e = run(normal_draw, n, 77);
  CHECK(std::abs(e.mean) < 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(e.sample_std - 1.0) < 0.01);
  CHECK(e.std_error() == doctest::Approx(e.sample_std / 1000.0).epsilon(1e-12));
  CHECK(e.rel_se() == doctest::Approx(e.std_error() / std::abs(e.mean)).epsilon(1e-12));
}

TEST_CASE("mean and corrected deviation of a known sequence") {
  // Samples 0, 1, ..., n-1: mean (n-1)/2, variance n(n+1)/12.
  for (const std::uint64_t n : {2ull, 3ull, 255ull, 256ull, 257ull, 10000ull}) {
    const auto e = run([](const SampleContext& c) { return static_cast<double>(c.index); }, n, 0);
    const double nd = static_cast<double>(n);
    CHECK(e.mean == doctest::Approx((nd - 1.0) / 2.0).epsilon(1e-14));
    CHECK(e.sample_std == doctest::Approx(std::sqrt(nd * (nd + 1.0) / 12.0)).epsilon(1e-12));
  }
}

TEST_CASE("deterministic mode is bit-identical across worker counts") {
  for (const std::uint64_t n : {1000ull, 65537ull}) {
    RunOptions one;
    one.threads = 1;
    RunOptions eight;
    eight.threads = 8;
    const auto a = run(lognormal_draw, n, 5, one);
    const auto b = run(lognormal_draw, n, 5, eight);
    CHECK(a.mean == b.mean);
    CHECK(a.sample_std == b.sample_std);
    CHECK(a.n == b.n);
    const auto c = run(lognormal_draw, n, 5, one);
    CHECK(a.mean == c.mean);
  }
}

TEST_CASE("free-running mode agrees with deterministic mode") {
  RunOptions det;
  det.threads = 3;
  RunOptions free = det;
  free.deterministic = false;
  const auto a = run(lognormal_draw, 200000, 9, det);
  const auto b = run(lognormal_draw, 200000, 9, free);
  CHECK(testing::rel_diff(a.mean, b.mean) < 1e-12);
  CHECK(testing::rel_diff(a.sample_std, b.sample_std) < 1e-9);
  CHECK(b.n == 200000);
}

TEST_CASE("standard error halves when the sample count quadruples") {
  const auto a = run(normal_draw, 40000, 3);
  const auto b = run(normal_draw, 160000, 4);
  CHECK(std::abs(a.std_error() / b.std_error() - 2.0) < 0.2);
}

TEST_CASE("samplers see their own index and a derived seed") {
  const auto e = run(
      [](const SampleContext& c) {
        return c.sample_seed() == derive_seed(c.seed, c.index) && c.seed == 123 ? 1.0 : 0.0;
      },
      5000, 123);
  CHECK(e.mean == 1.0);
}

TEST_CASE("multi-output runs") {
  RunOptions opts;
  opts.threads = 4;
  const auto r = run_multi(
      3,
      [](const SampleContext& c, std::span<double> out) {
        const double x = normal_draw(c);
        out[0] = x;
        out[1] = x * x;
        out[2] = 2.0;
      },
      50000, 31, opts);
  REQUIRE(r.size() == 3);
  const auto single = run(normal_draw, 50000, 31, opts);
  CHECK(r[0].mean == single.mean);
  CHECK(r[0].sample_std == single.sample_std);
  CHECK(std::abs(r[1].mean - 1.0) < 4.0 * r[1].std_error());
  CHECK(r[2].mean == 2.0);
  CHECK(r[2].sample_std == 0.0);
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(run(normal_draw, 1, 0), ConfigError);
  CHECK_THROWS_AS(run(normal_draw, 0, 0), ConfigError);
  RunOptions opts;
  opts.threads = 4;
  CHECK_THROWS_AS(run(
                      [](const SampleContext& c) -> double {
                        if (c.index == 777) throw DomainError("boom");
                        return 1.0;
                      },
                      5000, 0, opts),
                  DomainError);
}

}  // TEST_SUITE
