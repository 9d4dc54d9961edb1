#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "poolsim/model.hpp"

namespace poolsim {

// Which Brownian driver a stream feeds.
enum class StreamRole : std::uint32_t {
  market_y = 1,       // W^y
  market_x_orth = 2,  // component of W^x orthogonal to W^y
  firm_x = 3,         // W^{x,i}, index = firm i
  firm_y = 4,         // W^{y,i}, index = firm i
  inner_y1 = 5,       // W^{y,1} for inner sample j, index = j
};

std::string_view to_string(StreamRole role);

// Addresses one independent Gaussian stream. Distinct keys give
// independent streams; equal keys give identical output.
struct StreamKey {
  std::uint64_t seed = 0;
  StreamRole role = StreamRole::market_y;
  std::uint64_t index = 0;

  friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

// Mixes a parent seed with a sample index into a child seed
// (splitmix64 finalizer). Used to give every outer Monte Carlo sample its
// own family of streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// Sequential view of a stream: draw j is a pure function of (key, j).
// Each Philox block yields two 64-bit uniforms which are mapped to
// standard normals by inverse-CDF.
class GaussianStream {
 public:
  explicit GaussianStream(const StreamKey& key) noexcept;

  double next() noexcept {
    if (pos_ == kBufferSize) refill();
    return buffer_[pos_++];
  }

  // Independent standard normal reserved for the Brownian terminal value
  // of a pinned path; does not disturb the sequence returned by next().
  double terminal() const noexcept;

 private:
  // Philox blocks generated per refill; each block yields two normals.
  static constexpr int kBlocksPerRefill = 8;
  static constexpr int kBufferSize = 2 * kBlocksPerRefill;

  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint32_t index_lo_;
  std::uint32_t index_hi_;
  std::uint32_t role_;
  std::uint32_t block_ = 0;
  int pos_ = kBufferSize;
  double buffer_[kBufferSize];
};

// N i.i.d. N(0, dt) increments on the grid.
struct IncrementPath {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
  double total() const noexcept;
};

IncrementPath gaussian_increments(const StreamKey& key, const GridSpec& grid);

// Increments with the same joint law as gaussian_increments, built as a
// discrete Brownian bridge to a terminal value drawn from a reserved part
// of the stream. The terminal value therefore does not depend on the grid,
// so paths with the same key share W_T across step counts.
struct PinnedIncrements {
  IncrementPath increments;
  double terminal = 0.0;
};

PinnedIncrements pinned_increments(const StreamKey& key, const GridSpec& grid);

// rho_xy * w_y + sqrt(1 - rho_xy^2) * w_x_orth elementwise.
// Throws ConfigError on length mismatch and DomainError for |rho_xy| >= 1.
IncrementPath correlate_market_x(const IncrementPath& w_y, const IncrementPath& w_x_orth,
                                 double rho_xy);

}  // namespace poolsim
