#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "wfduality/measure.hpp"
#include "wfduality/parallel.hpp"
#include "wfduality/rng.hpp"

namespace wfd {

// Jump rates of Z out of state n. branch[k-1] is the rate of n -> n+k for
// k = 1..k_max, branch_tail the rate of all larger jumps; coalesce[k-1] is the
// rate of n -> n-k for k = 1..n-1.
struct RateTable {
  std::int64_t n = 1;
  std::vector<double> branch;
  double branch_tail = 0.0;
  std::vector<double> coalesce;
  double total = 0.0;

  double branch_total() const;
  double coalesce_total() const;
};

// k_max = 0 picks the smallest k_max whose tail rate is below 1e-9 * total.
RateTable jump_rates(const LimitParams& params, std::int64_t n, std::int64_t k_max = 0);

// Total rates out of n in closed form (no truncation).
double total_branch_rate(const LimitParams& params, std::int64_t n);
double total_coalesce_rate(const LimitParams& params, std::int64_t n);

struct ZEvent {
  double time = 0.0;
  std::int64_t from = 0;
  std::int64_t to = 0;
};

struct PathZ {
  std::int64_t n0 = 1;
  double horizon = 0.0;
  std::vector<ZEvent> events;

  std::int64_t final_state() const { return events.empty() ? n0 : events.back().to; }
  std::int64_t state_at(double t) const;
};

inline constexpr std::int64_t kDefaultStateCeiling = 1'000'000;
inline constexpr std::size_t kDefaultRateCacheCapacity = 4096;

// Gillespie simulator for the branching-coalescing process in random
// environment. Event kinds are chosen from per-state rates (memoized, LRU);
// jump sizes are then drawn exactly from the conditional laws, so no part of
// the jump distribution is truncated.
class BcreSimulator {
 public:
  explicit BcreSimulator(const LimitParams& params, std::int64_t ceiling = kDefaultStateCeiling,
                         std::size_t cache_capacity = kDefaultRateCacheCapacity);

  const LimitParams& params() const noexcept { return params_; }
  std::int64_t ceiling() const noexcept { return ceiling_; }

  // Advances from state n over a time span; throws StateExplosionGuard.
  // `on_jump` (optional) receives each event.
  template <typename OnJump>
  std::int64_t advance(std::int64_t n, double t0, double t1, Rng& rng, OnJump&& on_jump) const;
  std::int64_t advance(std::int64_t n, double t0, double t1, Rng& rng) const {
    return advance(n, t0, t1, rng, [](const ZEvent&) {});
  }

  PathZ simulate(std::int64_t n0, double T, Rng& rng) const;

  // Total rate out of n and one jump drawn from the jump law.
  double total_rate(std::int64_t n) const;
  std::int64_t sample_jump(std::int64_t n, Rng& rng) const;

  std::size_t cache_hits() const;
  std::size_t cache_misses() const;

 private:
  struct StateRates {
    std::vector<double> branch_cumulative;    // per mu atom: mu_i (1 - q1(y_i)^n)
    std::vector<double> coalesce_cumulative;  // per Lambda_c node: c v_j z^-2 P(Bin(n,z) >= 2)
    double branch = 0.0;                      // excludes w n
    double coalesce = 0.0;                    // excludes sigma C(n,2)
  };
  std::shared_ptr<const StateRates> rates(std::int64_t n) const;
  std::shared_ptr<const StateRates> compute(std::int64_t n) const;
  std::int64_t sample_branch_size(std::int64_t n, double y, Rng& rng) const;

  LimitParams params_;
  std::vector<Atom> mu_;
  std::vector<double> mu_q1_;
  std::vector<Atom> lambda_c_;
  std::int64_t ceiling_;

  // LRU cache; rates are a pure function of n, so sharing it between workers
  // cannot change results.
  using Entry = std::pair<std::int64_t, std::shared_ptr<const StateRates>>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::list<Entry> lru_;
  mutable std::unordered_map<std::int64_t, std::list<Entry>::iterator> index_;
  mutable std::size_t hits_ = 0;
  mutable std::size_t misses_ = 0;
};

template <typename OnJump>
std::int64_t BcreSimulator::advance(std::int64_t n, double t0, double t1, Rng& rng, OnJump&& on_jump) const {
  double t = t0;
  for (;;) {
    const double rate = total_rate(n);
    if (rate <= 0.0) return n;
    t += rng.exponential(rate);
    if (t > t1) return n;
    const std::int64_t next = sample_jump(n, rng);
    if (next > ceiling_) {
      throw Error(ErrorCode::StateExplosionGuard,
                  "Z exceeded the state ceiling " + std::to_string(ceiling_) + " at t=" + std::to_string(t));
    }
    on_jump(ZEvent{t, n, next});
    n = next;
  }
}

// Monte Carlo estimate of E^n[x^Z(t)].
Estimate dual_moment(const LimitParams& params, double x, std::int64_t n0, double t, const McOptions& opts);
// E^n[x^Z(t)] for every (t, x) pair from one set of paths: result[i][j]
// belongs to (times[i], xs[j]).
std::vector<std::vector<Estimate>> dual_moment_grid(const LimitParams& params, std::span<const double> xs,
                                                    std::int64_t n0, std::span<const double> times,
                                                    const McOptions& opts);

// Explosion-guard census: Z(T) over many paths, guard triggers counted
// instead of propagated.
struct ConservativenessProbe {
  std::size_t replicates = 0;
  std::size_t guard_triggers = 0;
  Estimate mean_final;    // E[Z(T)] over paths that stayed below the ceiling
  double yule_bound = 0;  // n0 exp((alpha_s + w) T)
};
ConservativenessProbe conservativeness_probe(const LimitParams& params, std::int64_t n0, double T,
                                             const McOptions& opts, std::int64_t ceiling = kDefaultStateCeiling);

inline constexpr double kDefaultStationaryTvThreshold = 0.05;

// Time-weighted occupation law of Z over [burn_in, T].
struct StationaryEstimate {
  std::vector<double> pmf;  // pmf[k] = occupation fraction of state k (pmf[0] = 0)
  double tv_halves = 0.0;   // TV distance between the two half-window estimates
  bool converged = true;    // false: the half-window estimates disagree (tv_halves > threshold)
  std::size_t events = 0;

  // Generating function sum_k pmf[k] x^k.
  double pgf(double x) const;
};

StationaryEstimate stationary_estimate(const LimitParams& params, std::int64_t n0, double burn_in, double T,
                                       Rng& rng, double tv_threshold = kDefaultStationaryTvThreshold);

double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace wfd
