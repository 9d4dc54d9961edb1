#include "poolsim/noise.hpp"

#include <cmath>
#include <numeric>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include "poolsim/errors.hpp"
#include "poolsim/special.hpp"

namespace poolsim {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

// Counter word 3 carries the role tag; this bit marks the reserved block
// holding the terminal draw of a pinned path.
constexpr std::uint32_t kTerminalBit = 0x80000000u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

// Maps 64 random bits to a uniform on the open interval (0, 1).
inline double to_open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline std::uint64_t combine(std::uint32_t hi, std::uint32_t lo) {
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

}  // namespace

std::string_view to_string(StreamRole role) {
  switch (role) {
    case StreamRole::market_y: return "market_y";
    case StreamRole::market_x_orth: return "market_x_orth";
    case StreamRole::firm_x: return "firm_x";
    case StreamRole::firm_y: return "firm_y";
    case StreamRole::inner_y1: return "inner_y1";
  }
  return "unknown";
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed ^ (index * 0x9E3779B97F4A7C15ull + 0x632BE59BD9B4E019ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

GaussianStream::GaussianStream(const StreamKey& key) noexcept
    : key_{static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)},
      index_lo_(static_cast<std::uint32_t>(key.index)),
      index_hi_(static_cast<std::uint32_t>(key.index >> 32)),
      role_(static_cast<std::uint32_t>(key.role)) {}

namespace {

#if defined(__SSE2__)
// 32x32 -> 64 products of four lanes: high and low words.
inline void mulhilo4(__m128i a, __m128i m, __m128i& hi, __m128i& lo) {
  const __m128i mask_lo = _mm_set1_epi64x(0xffffffffll);
  const __m128i even = _mm_mul_epu32(a, m);
  const __m128i odd = _mm_mul_epu32(_mm_srli_epi64(a, 32), m);
  hi = _mm_or_si128(_mm_srli_epi64(even, 32), _mm_andnot_si128(mask_lo, odd));
  lo = _mm_or_si128(_mm_and_si128(even, mask_lo), _mm_slli_epi64(odd, 32));
}

// Philox4x32-10 on four consecutive counters; word w of block l lands in out_w[l].
void philox_x4(std::uint32_t first, std::uint32_t w1, std::uint32_t w2, std::uint32_t w3,
               std::array<std::uint32_t, 2> key, std::uint32_t* out0, std::uint32_t* out1,
               std::uint32_t* out2, std::uint32_t* out3) noexcept {
  __m128i c0 = _mm_add_epi32(_mm_set1_epi32(static_cast<int>(first)), _mm_set_epi32(3, 2, 1, 0));
  __m128i c1 = _mm_set1_epi32(static_cast<int>(w1));
  __m128i c2 = _mm_set1_epi32(static_cast<int>(w2));
  __m128i c3 = _mm_set1_epi32(static_cast<int>(w3));
  const __m128i m0 = _mm_set1_epi32(static_cast<int>(kPhiloxM0));
  const __m128i m1 = _mm_set1_epi32(static_cast<int>(kPhiloxM1));
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    __m128i hi0, lo0, hi1, lo1;
    mulhilo4(c0, m0, hi0, lo0);
    mulhilo4(c2, m1, hi1, lo1);
    c0 = _mm_xor_si128(_mm_xor_si128(hi1, c1), _mm_set1_epi32(static_cast<int>(key[0])));
    c1 = lo1;
    c2 = _mm_xor_si128(_mm_xor_si128(hi0, c3), _mm_set1_epi32(static_cast<int>(key[1])));
    c3 = lo0;
  }
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out0), c0);
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out1), c1);
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out2), c2);
  _mm_storeu_si128(reinterpret_cast<__m128i*>(out3), c3);
}
#endif

}  // namespace

void GaussianStream::refill() noexcept {
  constexpr int L = kBlocksPerRefill;
  std::uint32_t c0[L], c1[L], c2[L], c3[L];
#if defined(__SSE2__)
  static_assert(L % 4 == 0);
  for (int l = 0; l < L; l += 4)
    philox_x4(block_ + static_cast<std::uint32_t>(l), index_lo_, index_hi_, role_, key_, c0 + l,
              c1 + l, c2 + l, c3 + l);
#else
  for (int l = 0; l < L; ++l) {
    const auto out = philox4x32({block_ + static_cast<std::uint32_t>(l), index_lo_, index_hi_, role_}, key_);
    c0[l] = out[0];
    c1[l] = out[1];
    c2[l] = out[2];
    c3[l] = out[3];
  }
#endif
  block_ += L;
  double u[kBufferSize];
  for (int l = 0; l < L; ++l) {
    u[2 * l] = to_open_unit(combine(c0[l], c1[l]));
    u[2 * l + 1] = to_open_unit(combine(c2[l], c3[l]));
  }
  norm_inv_cdf_rational(u, buffer_, kBufferSize);
  pos_ = 0;
}

double GaussianStream::terminal() const noexcept {
  const auto out = philox4x32({0u, index_lo_, index_hi_, role_ | kTerminalBit}, key_);
  return norm_inv_cdf_rational(to_open_unit(combine(out[0], out[1])));
}

double IncrementPath::total() const noexcept {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

IncrementPath gaussian_increments(const StreamKey& key, const GridSpec& grid) {
  grid.validate();
  GaussianStream stream(key);
  const double scale = std::sqrt(grid.dt());
  IncrementPath path;
  path.values.resize(grid.N);
  for (auto& v : path.values) v = scale * stream.next();
  return path;
}

PinnedIncrements pinned_increments(const StreamKey& key, const GridSpec& grid) {
  PinnedIncrements out;
  out.increments = gaussian_increments(key, grid);
  out.terminal = std::sqrt(grid.T) * GaussianStream(key).terminal();
  // Shift every increment by the same amount so that they sum to the
  // terminal value: the discrete Brownian bridge construction.
  const double shift = (out.terminal - out.increments.total()) / static_cast<double>(grid.N);
  for (auto& v : out.increments.values) v += shift;
  return out;
}

IncrementPath correlate_market_x(const IncrementPath& w_y, const IncrementPath& w_x_orth,
                                 double rho_xy) {
  if (w_y.size() != w_x_orth.size())
    throw ConfigError("correlate_market_x: increment paths differ in length");
  if (!(std::abs(rho_xy) < 1.0)) throw DomainError("correlate_market_x: |rho_xy| must be < 1");
  const double orth = std::sqrt(1.0 - rho_xy * rho_xy);
  IncrementPath out;
  out.values.resize(w_y.size());
  for (std::size_t i = 0; i < w_y.size(); ++i)
    out.values[i] = rho_xy * w_y.values[i] + orth * w_x_orth.values[i];
  return out;
}

}  // namespace poolsim
