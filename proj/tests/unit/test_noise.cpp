#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "poolsim/errors.hpp"
#include "poolsim/noise.hpp"
#include "poolsim/special.hpp"
#include "support.hpp"

using namespace poolsim;

namespace {

double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

struct Moments {
  double mean = 0.0, var = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (const double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (const double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ma = moments(a), mb = moments(b);
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean);
  c /= static_cast<double>(a.size() - 1);
  return c / std::sqrt(ma.var * mb.var);
}

std::vector<double> draws(const StreamKey& key, std::size_t n) {
  GaussianStream g(key);
  std::vector<double> out(n);
  for (auto& x : out) x = g.next();
  return out;
}

}  // namespace

TEST_SUITE("noise") {

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("stream draws are the inverse-CDF images of consecutive Philox blocks") {
  const StreamKey key{0x0123456789abcdefull, StreamRole::firm_x, 0x0000000500000007ull};
  GaussianStream g(key);
  const std::array<std::uint32_t, 2> k{0x89abcdefu, 0x01234567u};
  for (std::uint32_t block = 0; block < 100; ++block) {
    const auto out = philox4x32({block, 7u, 5u, static_cast<std::uint32_t>(StreamRole::firm_x)}, k);
    REQUIRE(g.next() == norm_inv_cdf_rational(open_unit(out[0], out[1])));
    REQUIRE(g.next() == norm_inv_cdf_rational(open_unit(out[2], out[3])));
  }
  const auto t = philox4x32({0u, 7u, 5u, static_cast<std::uint32_t>(StreamRole::firm_x) | 0x80000000u}, k);
  CHECK(g.terminal() == norm_inv_cdf_rational(open_unit(t[0], t[1])));
}

TEST_CASE("identical keys reproduce, distinct keys differ") {
  const StreamKey a{42, StreamRole::market_y, 3};
  CHECK(draws(a, 1000) == draws(a, 1000));
  CHECK(draws(a, 10) != draws({42, StreamRole::market_y, 4}, 10));
  CHECK(draws(a, 10) != draws({43, StreamRole::market_y, 3}, 10));
  CHECK(draws(a, 10) != draws({42, StreamRole::firm_y, 3}, 10));
  const GridSpec grid{1.0, 777};
  const auto p1 = gaussian_increments(a, grid);
  const auto p2 = gaussian_increments(a, grid);
  CHECK(p1.values == p2.values);
  CHECK(p1.size() == 777);
}

TEST_CASE("terminal draw does not disturb the sequence") {
  const StreamKey key{9, StreamRole::inner_y1, 11};
  GaussianStream g(key);
  const double t0 = g.terminal();
  const double first = g.next();
  CHECK(g.terminal() == t0);
  CHECK(first == draws(key, 1)[0]);
}

TEST_CASE("increment variance matches dt") {
  const GridSpec grid{100.0, 1000000};  // dt = 1e-4
  const auto path = gaussian_increments({2024, StreamRole::firm_y, 0}, grid);
  const auto m = moments(path.values);
  CHECK(std::abs(m.var / 1e-4 - 1.0) < 0.01);
  CHECK(std::abs(m.mean) < 3.0 * std::sqrt(1e-4 / 1e6));
  for (const double v : path.values) REQUIRE(std::isfinite(v));
}

TEST_CASE("streams differing in index or role are uncorrelated") {
  const std::size_t n = 1000000;
  const auto a = draws({5, StreamRole::firm_x, 0}, n);
  const auto b = draws({5, StreamRole::firm_x, 1}, n);
  CHECK(std::abs(correlation(a, b)) < 0.01);
  const StreamRole roles[] = {StreamRole::market_y, StreamRole::market_x_orth, StreamRole::firm_x,
                              StreamRole::firm_y, StreamRole::inner_y1};
  std::vector<std::vector<double>> by_role;
  for (const auto r : roles) by_role.push_back(draws({5, r, 0}, n));
  for (std::size_t i = 0; i < by_role.size(); ++i)
    for (std::size_t j = i + 1; j < by_role.size(); ++j) {
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(correlation(by_role[i], by_role[j])) < 3.0 / std::sqrt(static_cast<double>(n)));
    }
  const auto m = moments(a);
  CHECK(std::abs(m.mean) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(m.var - 1.0) < 0.01);
}

TEST_CASE("correlate_market_x") {
  const GridSpec grid{1.0, 1000000};
  const auto wy = gaussian_increments({1, StreamRole::market_y, 0}, grid);
  const auto wo = gaussian_increments({1, StreamRole::market_x_orth, 0}, grid);
  CHECK(correlate_market_x(wy, wo, 0.0).values == wo.values);
  const auto wx = correlate_market_x(wy, wo, -0.6);
  CHECK(std::abs(correlation(wx.values, wy.values) + 0.6) < 0.01);
  CHECK(std::abs(moments(wx.values).var / grid.dt() - 1.0) < 0.01);

  const auto same = correlate_market_x(wy, wy, -0.6);
  for (std::size_t i = 0; i < 1000; ++i) REQUIRE(std::abs(same[i] - 0.2 * wy[i]) < 1e-15);

  IncrementPath shorter{{0.1, 0.2}};
  CHECK_THROWS_AS(correlate_market_x(shorter, wo, 0.1), ConfigError);
  CHECK_THROWS_AS(correlate_market_x(wy, wo, 1.0), DomainError);
  CHECK_THROWS_AS(correlate_market_x(wy, wo, -1.2), DomainError);
}

TEST_CASE("pinned increments sum to a grid-independent terminal value") {
  const StreamKey key{77, StreamRole::market_y, 0};
  const auto coarse = pinned_increments(key, {1.0, 10});
  const auto fine = pinned_increments(key, {1.0, 10000});
  CHECK(coarse.terminal == fine.terminal);
  CHECK(std::abs(coarse.increments.total() - coarse.terminal) < 1e-14);
  CHECK(std::abs(fine.increments.total() - fine.terminal) < 1e-12);
  const auto other_t = pinned_increments(key, {4.0, 10});
  CHECK(std::abs(other_t.terminal - 2.0 * coarse.terminal) < 1e-15);
}

TEST_CASE("pinned increments keep the Brownian law") {
  // Over many keys: increments are N(0, dt), mutually uncorrelated, and
  // independent of the step count in the terminal value.
  const GridSpec grid{1.0, 8};
  const std::size_t n = 200000;
  std::vector<double> first(n), last(n), terminal(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = pinned_increments({3, StreamRole::market_y, i}, grid);
    first[i] = p.increments[0];
    last[i] = p.increments[7];
    terminal[i] = p.terminal;
  }
  const double tol = 4.0 * std::sqrt(2.0 / static_cast<double>(n));
  CHECK(std::abs(moments(first).var / grid.dt() - 1.0) < tol);
  CHECK(std::abs(moments(last).var / grid.dt() - 1.0) < tol);
  CHECK(std::abs(moments(terminal).var - 1.0) < tol);
  CHECK(std::abs(correlation(first, last)) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(correlation(first, terminal) - std::sqrt(grid.dt())) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("derive_seed spreads indices") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(derive_seed(1, i));
  CHECK(seen.size() == 100000);
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(1, 5) == derive_seed(1, 5));
}

TEST_CASE("role names") {
  CHECK(to_string(StreamRole::market_y) == "market_y");
  CHECK(to_string(StreamRole::inner_y1) == "inner_y1");
}

}  // TEST_SUITE
