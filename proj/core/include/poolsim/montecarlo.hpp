#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "poolsim/noise.hpp"

namespace poolsim {

// Monte Carlo result. sample_std uses the n - 1 divisor.
struct Estimate {
  double mean = 0.0;
  double sample_std = 0.0;
  std::uint64_t n = 0;

  double std_error() const noexcept;
  // Standard error relative to |mean|; zero when both vanish.
  double rel_se() const noexcept;
};

struct RunOptions {
  // Worker threads; 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
  // Accumulate fixed-size blocks and reduce them in index order, giving
  // bit-identical results for any worker count. Otherwise each worker
  // reduces its own blocks and the partial results are merged in
  // completion order.
  bool deterministic = true;
  std::uint64_t block_size = 256;
};

// Handed to the sampler for each sample index.
struct SampleContext {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;

  // Seed owned by this sample: derive_seed(seed, index).
  std::uint64_t sample_seed() const noexcept { return derive_seed(seed, index); }
  StreamKey stream(StreamRole role, std::uint64_t sub_index = 0) const noexcept {
    return {sample_seed(), role, sub_index};
  }
};

using Sampler = std::function<double(const SampleContext&)>;
// Writes one value per output dimension into the span.
using MultiSampler = std::function<void(const SampleContext&, std::span<double>)>;

// Mean and corrected standard deviation of sampler(0..n-1).
// Throws ConfigError for n < 2.
Estimate run(const Sampler& sampler, std::uint64_t n, std::uint64_t seed,
             const RunOptions& options = {});

// As run, for samplers producing several correlated outputs per sample.
std::vector<Estimate> run_multi(std::size_t dims, const MultiSampler& sampler, std::uint64_t n,
                                std::uint64_t seed, const RunOptions& options = {});

}  // namespace poolsim
