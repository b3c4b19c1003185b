#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace wfd {

// Monte Carlo mean with its standard error.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

// Pairwise (cascade) summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> values) noexcept;

// Mean and standard error of the mean (sample standard deviation / sqrt(n)).
Estimate estimate_from(std::span<const double> values);

// Estimate of a Bernoulli proportion from a success count.
Estimate proportion(std::size_t successes, std::size_t trials) noexcept;

// z = (a - b) / sqrt(se_a^2 + se_b^2); 0 when the estimates coincide exactly
// with zero uncertainty, +-inf when they differ with zero uncertainty.
double z_score(const Estimate& a, const Estimate& b) noexcept;

// Number of workers: explicit request if positive, else hardware concurrency.
unsigned resolve_workers(unsigned requested) noexcept;

// Evaluates fn(i) for i in [0, count) on up to `workers` threads. Batches are
// claimed from a shared counter (dynamic load balancing); the output vector is
// indexed by i, so results never depend on the worker count or on timing.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, unsigned workers, Fn&& fn) {
  std::vector<T> out(count);
  workers = std::max(1u, workers);
  const std::size_t batch = std::max<std::size_t>(1, std::min<std::size_t>(1024, count / (8 * workers) + 1));
  if (workers == 1 || count <= batch) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(batch);
        if (begin >= count) return;
        const std::size_t end = std::min(count, begin + batch);
        for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(count);
    }
  };
  std::vector<std::thread> pool;
  const unsigned spawn = static_cast<unsigned>(std::min<std::size_t>(workers, (count + batch - 1) / batch));
  pool.reserve(spawn);
  for (unsigned w = 0; w < spawn; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Monte Carlo settings shared by every replicate-parallel operation.
struct McOptions {
  std::uint64_t seed = 1;
  std::size_t replicates = 100000;
  unsigned workers = 1;
};

}  // namespace wfd
