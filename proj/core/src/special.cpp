#include "poolsim/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "poolsim/errors.hpp"

namespace poolsim {

namespace {

constexpr double kSqrt2Pi = 2.50662827463100050242;

// Upper orthant probability P(X > h, Y > k), Drezner-Wesolowsky form with
// Gauss-Legendre quadrature as arranged by A. Genz (bvnu). |r| < 1.
double bvn_upper(double h, double k, double r) {
  struct Rule {
    int n;
    std::array<double, 10> w;
    std::array<double, 10> x;
  };
  static constexpr Rule kRule6{
      3,
      {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
      {0.9324695142031522, 0.6612093864662647, 0.2386191860831970}};
  static constexpr Rule kRule12{
      6,
      {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
       0.2031674267230659, 0.2334925365383547, 0.2491470458134029},
      {0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
       0.5873179542866171, 0.3678314989981802, 0.1252334085114692}};
  static constexpr Rule kRule20{
      10,
      {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
       0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
       0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
       0.1527533871307259},
      {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
       0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
       0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
       0.07652652113349733}};

  const double ar = std::abs(r);
  const Rule& rule = ar < 0.3 ? kRule6 : (ar < 0.75 ? kRule12 : kRule20);
  constexpr double tp = 2.0 * kPi;
  double hk = h * k;
  double bvn = 0.0;

  if (ar < 0.925) {
    const double hs = 0.5 * (h * h + k * k);
    const double asr = 0.5 * std::asin(r);
    for (int i = 0; i < rule.n; ++i) {
      for (const double sign : {-1.0, 1.0}) {
        const double sn = std::sin(asr * (1.0 + sign * rule.x[i]));
        bvn += rule.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
      }
    }
    return bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
  }

  if (r < 0.0) {
    k = -k;
    hk = -hk;
  }
  const double as = 1.0 - r * r;
  double a = std::sqrt(as);
  const double bs = (h - k) * (h - k);
  const double c = (4.0 - hk) / 8.0;
  const double d = (12.0 - hk) / 80.0;
  double asr = -0.5 * (bs / as + hk);
  if (asr > -100.0) {
    bvn = a * std::exp(asr) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
  }
  if (hk > -100.0) {
    const double b = std::sqrt(bs);
    const double sp = kSqrt2Pi * norm_cdf(-b / a);
    bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
  }
  a *= 0.5;
  for (int i = 0; i < rule.n; ++i) {
    for (const double sign : {-1.0, 1.0}) {
      const double xs = std::pow(a * (1.0 + sign * rule.x[i]), 2);
      asr = -0.5 * (bs / xs + hk);
      if (asr > -100.0) {
        const double sp = 1.0 + c * xs * (1.0 + d * xs);
        const double rs = std::sqrt(1.0 - xs);
        const double ep = std::exp(-hk * xs / (2.0 * (1.0 + rs) * (1.0 + rs))) / rs;
        bvn += a * rule.w[i] * std::exp(asr) * (ep - sp);
      }
    }
  }
  bvn = -bvn / tp;

  if (r > 0.0) return bvn + norm_cdf(-std::max(h, k));
  if (h >= k) return -bvn;
  const double band = h < 0.0 ? norm_cdf(k) - norm_cdf(h) : norm_cdf(-h) - norm_cdf(-k);
  return band - bvn;
}

}  // namespace

double norm_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) noexcept {
  // t = -x / sqrt(2) carries a rounding error d that erfc amplifies by 2t;
  // recover d exactly and apply erfc(t + d) ~ erfc(t) - d 2/sqrt(pi) e^{-t^2}.
  constexpr double c_hi = 0.7071067811865476;
  constexpr double c_lo = -4.833646656726457e-17;
  if (std::isinf(x)) return x > 0.0 ? 1.0 : 0.0;
  const double t = -x * c_hi;
  const double d = std::fma(-x, c_hi, -t) - x * c_lo;
  const double e = std::erfc(t);
  if (d == 0.0 || e == 0.0) return 0.5 * e;
  return 0.5 * (e - d * (2.0 / std::sqrt(std::numbers::pi)) * std::exp(-t * t));
}

namespace {

inline double inv_central(double q) noexcept {
  const double r = 0.180625 - q * q;
  return q *
         (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
               6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
             1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
           1.3314166789178437745e+2) * r + 3.3871328727963666080e0) /
         (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
               3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
             5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
           4.2313330701600911252e+1) * r + 1.0);
}

inline double inv_tail(double p, double q) noexcept {
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -x : x;
}

}  // namespace

double norm_inv_cdf_rational(double p) noexcept {
  const double q = p - 0.5;
  return std::abs(q) <= 0.425 ? inv_central(q) : inv_tail(p, q);
}

void norm_inv_cdf_rational(const double* p, double* out, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) out[i] = inv_central(p[i] - 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = p[i] - 0.5;
    if (std::abs(q) > 0.425) out[i] = inv_tail(p[i], q);
  }
}

double norm_inv_cdf(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("norm_inv_cdf: p must lie in [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();

  double x = norm_inv_cdf_rational(p);
  // One Halley step on F(x) = Phi(x) - p. The residual is formed on the
  // tail nearest to x so that it keeps full relative precision.
  const double density = norm_pdf(x);
  if (density > std::numeric_limits<double>::min()) {
    const double e = x < 0.0 ? norm_cdf(x) - p : (1.0 - p) - norm_cdf(-x);
    const double u = e / density;
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double bvn_cdf(double h, double k, double rho) {
  if (std::isnan(h) || std::isnan(k) || std::isnan(rho))
    throw DomainError("bvn_cdf: NaN argument");
  if (std::abs(rho) > 1.0) throw DomainError("bvn_cdf: |rho| must not exceed 1");

  constexpr double inf = std::numeric_limits<double>::infinity();
  if (h == -inf || k == -inf) return 0.0;
  if (h == inf) return norm_cdf(k);
  if (k == inf) return norm_cdf(h);
  if (rho == 1.0) return norm_cdf(std::min(h, k));
  if (rho == -1.0) return std::max(0.0, norm_cdf(h) + norm_cdf(k) - 1.0);
  if (rho == 0.0) return norm_cdf(h) * norm_cdf(k);

  return std::clamp(bvn_upper(-h, -k, rho), 0.0, 1.0);
}

}  // namespace poolsim
