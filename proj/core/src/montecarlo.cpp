#include "poolsim/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "poolsim/errors.hpp"

namespace poolsim {

namespace {

// Running count, mean and sum of squared deviations.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }

  // Chan et al. pairwise combination.
  static Moments merge(const Moments& a, const Moments& b) noexcept {
    if (a.count == 0.0) return b;
    if (b.count == 0.0) return a;
    Moments out;
    out.count = a.count + b.count;
    const double delta = b.mean - a.mean;
    out.mean = a.mean + delta * (b.count / out.count);
    out.m2 = a.m2 + b.m2 + delta * delta * (a.count * b.count / out.count);
    return out;
  }
};

// Tree reduction of blocks [first, last) for one output dimension.
Moments reduce_tree(const std::vector<Moments>& blocks, std::size_t dims, std::size_t dim,
                    std::size_t first, std::size_t last) {
  if (last - first == 1) return blocks[first * dims + dim];
  const std::size_t mid = first + (last - first) / 2;
  return Moments::merge(reduce_tree(blocks, dims, dim, first, mid),
                        reduce_tree(blocks, dims, dim, mid, last));
}

Estimate to_estimate(const Moments& m) {
  Estimate e;
  e.mean = m.mean;
  e.n = static_cast<std::uint64_t>(m.count);
  e.sample_std = e.n > 1 ? std::sqrt(std::max(0.0, m.m2) / (m.count - 1.0)) : 0.0;
  return e;
}

}  // namespace

double Estimate::std_error() const noexcept {
  return n > 0 ? sample_std / std::sqrt(static_cast<double>(n)) : 0.0;
}

double Estimate::rel_se() const noexcept {
  const double se = std_error();
  if (se == 0.0) return 0.0;
  return se / std::abs(mean);
}

std::vector<Estimate> run_multi(std::size_t dims, const MultiSampler& sampler, std::uint64_t n,
                                std::uint64_t seed, const RunOptions& options) {
  if (n < 2) throw ConfigError("Monte Carlo run needs at least two samples");
  if (dims == 0) throw ConfigError("Monte Carlo run needs at least one output");
  const std::uint64_t block_size = std::max<std::uint64_t>(1, options.block_size);
  const std::uint64_t n_blocks = (n + block_size - 1) / block_size;

  unsigned workers = options.threads != 0 ? options.threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, n_blocks));

  // Deterministic mode keeps every block; the other mode keeps one
  // accumulator per worker.
  std::vector<Moments> block_moments(options.deterministic ? n_blocks * dims : 0);
  std::vector<Moments> worker_moments(options.deterministic ? 0 : workers * dims);

  std::atomic<std::uint64_t> next_block{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&](unsigned worker) {
    std::vector<double> values(dims);
    std::vector<Moments> local(dims);
    try {
      for (;;) {
        if (failed.load(std::memory_order_relaxed)) return;
        const std::uint64_t block = next_block.fetch_add(1, std::memory_order_relaxed);
        if (block >= n_blocks) return;
        std::fill(local.begin(), local.end(), Moments{});
        const std::uint64_t end = std::min(n, (block + 1) * block_size);
        for (std::uint64_t i = block * block_size; i < end; ++i) {
          sampler(SampleContext{seed, i}, values);
          for (std::size_t d = 0; d < dims; ++d) local[d].add(values[d]);
        }
        for (std::size_t d = 0; d < dims; ++d) {
          if (options.deterministic) {
            block_moments[block * dims + d] = local[d];
          } else {
            auto& acc = worker_moments[worker * dims + d];
            acc = Moments::merge(acc, local[d]);
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      failed = true;
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<Estimate> out(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    Moments total;
    if (options.deterministic) {
      total = reduce_tree(block_moments, dims, d, 0, n_blocks);
    } else {
      for (unsigned w = 0; w < workers; ++w) total = Moments::merge(total, worker_moments[w * dims + d]);
    }
    out[d] = to_estimate(total);
  }
  return out;
}

Estimate run(const Sampler& sampler, std::uint64_t n, std::uint64_t seed, const RunOptions& options) {
  return run_multi(
      1, [&](const SampleContext& ctx, std::span<double> out) { out[0] = sampler(ctx); }, n, seed,
      options)[0];
}

}  // namespace poolsim
