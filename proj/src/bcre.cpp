#include "wfduality/bcre.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace wfd {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// P(Bin(n, z) >= 2).
double prob_at_least_two(std::int64_t n, double z) {
  if (n < 2 || z <= 0.0) return 0.0;
  if (z >= 1.0) return 1.0;
  const double nd = static_cast<double>(n);
  const double l1 = std::log1p(-z);
  if (nd * z < 0.5) {
    // Direct summation avoids the cancellation in 1 - P(0) - P(1).
    double term = std::exp(log_choose(nd, 2.0) + 2.0 * std::log(z) + (nd - 2.0) * l1);
    double s = 0.0;
    const double r = z / (1.0 - z);
    for (std::int64_t k = 2; k <= n && term > 0.0; ++k) {
      s += term;
      if (term < s * 1e-18) break;
      term *= static_cast<double>(n - k) / static_cast<double>(k + 1) * r;
    }
    return s;
  }
  return -std::expm1(nd * l1) - nd * z * std::exp((nd - 1.0) * l1);
}

// B ~ Bin(n, z) conditioned on B >= 2; `accept` = P(B >= 2).
std::int64_t sample_binomial_at_least_two(std::int64_t n, double z, double accept, Rng& rng) {
  if (z >= 1.0) return n;
  if (accept >= 0.5) {
    std::binomial_distribution<std::int64_t> b(n, z);
    for (;;) {
      const std::int64_t v = b(rng);
      if (v >= 2) return v;
    }
  }
  const double nd = static_cast<double>(n);
  double term = std::exp(log_choose(nd, 2.0) + 2.0 * std::log(z) + (nd - 2.0) * std::log1p(-z));
  const double r = z / (1.0 - z);
  double target = rng.uniform() * accept;
  for (std::int64_t k = 2; k < n; ++k) {
    if (target < term) return k;
    target -= term;
    term *= static_cast<double>(n - k) / static_cast<double>(k + 1) * r;
  }
  return n;
}

double branch_weight(double mu_weight, double q1, std::int64_t n) {
  if (q1 <= 0.0) return mu_weight;
  return -mu_weight * std::expm1(static_cast<double>(n) * std::log(q1));
}

constexpr double kTailRelTol = 1e-9;

}  // namespace

double RateTable::branch_total() const {
  double s = branch_tail;
  for (double r : branch) s += r;
  return s;
}

double RateTable::coalesce_total() const {
  double s = 0.0;
  for (double r : coalesce) s += r;
  return s;
}

double total_branch_rate(const LimitParams& params, std::int64_t n) {
  double s = params.w() * static_cast<double>(n);
  for (const Atom& a : params.mu_atoms()) s += branch_weight(a.weight, params.kernel().prob_one(a.location), n);
  return s;
}

double total_coalesce_rate(const LimitParams& params, std::int64_t n) {
  const double nd = static_cast<double>(n);
  double s = params.sigma() * nd * (nd - 1.0) / 2.0;
  if (params.c() > 0.0) {
    for (const Atom& a : params.lambda_c().nodes()) {
      s += params.c() * a.weight / (a.location * a.location) * prob_at_least_two(n, a.location);
    }
  }
  return s;
}

RateTable jump_rates(const LimitParams& params, std::int64_t n, std::int64_t k_max) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "state n must be >= 1");
  if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "k_max must be >= 0");
  RateTable table;
  table.n = n;
  const double nd = static_cast<double>(n);

  table.coalesce.assign(static_cast<std::size_t>(n - 1), 0.0);
  if (n >= 2) table.coalesce[0] += params.sigma() * nd * (nd - 1.0) / 2.0;
  if (params.c() > 0.0) {
    for (const Atom& a : params.lambda_c().nodes()) {
      const double z = a.location;
      const double scale = params.c() * a.weight / (z * z);
      for (std::int64_t k = 1; k <= n - 1; ++k) {
        // C(n, k+1) z^(k+1) (1-z)^(n-k-1): k+1 of the n blocks merge.
        const double kd = static_cast<double>(k + 1);
        double p;
        if (z >= 1.0) {
          p = (k + 1 == n) ? 1.0 : 0.0;
        } else {
          p = std::exp(log_choose(nd, kd) + kd * std::log(z) + (nd - kd) * std::log1p(-z));
        }
        table.coalesce[static_cast<std::size_t>(k - 1)] += scale * p;
      }
    }
  }

  const auto mu = params.mu_atoms();
  const double branch_closed = total_branch_rate(params, n);
  const double coalesce_total = table.coalesce_total();
  auto fill = [&](std::int64_t km) {
    table.branch.assign(static_cast<std::size_t>(km), 0.0);
    table.branch_tail = 0.0;
    if (km >= 1) table.branch[0] += params.w() * nd;
    for (const Atom& a : mu) {
      const SumDistribution d = sum_distribution(params.kernel(), a.location, n, km);
      for (std::int64_t k = 1; k <= km; ++k) table.branch[static_cast<std::size_t>(k - 1)] += a.weight * d.pmf[static_cast<std::size_t>(k)];
      table.branch_tail += a.weight * d.tail;
    }
    if (km == 0) table.branch_tail += params.w() * nd;
  };
  if (k_max > 0) {
    fill(k_max);
  } else {
    std::int64_t km = 8;
    for (;;) {
      fill(km);
      const double total = branch_closed + coalesce_total;
      if (table.branch_tail < kTailRelTol * total || km >= (std::int64_t{1} << 20)) break;
      km *= 2;
    }
    // Shrink to the smallest k_max that keeps the tail below tolerance.
    const double total = branch_closed + coalesce_total;
    double tail = table.branch_tail;
    std::int64_t k = km;
    while (k > 1 && tail + table.branch[static_cast<std::size_t>(k - 1)] < kTailRelTol * total) {
      tail += table.branch[static_cast<std::size_t>(k - 1)];
      --k;
    }
    table.branch.resize(static_cast<std::size_t>(k));
    table.branch_tail = tail;
  }
  table.total = table.branch_total() + coalesce_total;
  return table;
}

std::int64_t PathZ::state_at(double t) const {
  std::int64_t n = n0;
  for (const ZEvent& e : events) {
    if (e.time > t) break;
    n = e.to;
  }
  return n;
}

// ---------------------------------------------------------------------------

BcreSimulator::BcreSimulator(const LimitParams& params, std::int64_t ceiling, std::size_t cache_capacity)
    : params_(params), ceiling_(ceiling), capacity_(std::max<std::size_t>(1, cache_capacity)) {
  if (ceiling_ < 1) throw Error(ErrorCode::InvalidArgument, "state ceiling must be >= 1");
  mu_ = params_.mu_atoms();
  for (const Atom& a : mu_) mu_q1_.push_back(params_.kernel().prob_one(a.location));
  if (params_.c() > 0.0) {
    const auto nodes = params_.lambda_c().nodes();
    lambda_c_.assign(nodes.begin(), nodes.end());
  }
}

std::shared_ptr<const BcreSimulator::StateRates> BcreSimulator::compute(std::int64_t n) const {
  auto r = std::make_shared<StateRates>();
  r->branch_cumulative.reserve(mu_.size());
  for (std::size_t i = 0; i < mu_.size(); ++i) {
    r->branch += branch_weight(mu_[i].weight, mu_q1_[i], n);
    r->branch_cumulative.push_back(r->branch);
  }
  r->coalesce_cumulative.reserve(lambda_c_.size());
  for (const Atom& a : lambda_c_) {
    r->coalesce += params_.c() * a.weight / (a.location * a.location) * prob_at_least_two(n, a.location);
    r->coalesce_cumulative.push_back(r->coalesce);
  }
  return r;
}

std::shared_ptr<const BcreSimulator::StateRates> BcreSimulator::rates(std::int64_t n) const {
  {
    std::lock_guard lock(mutex_);
    const auto it = index_.find(n);
    if (it != index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      ++hits_;
      return it->second->second;
    }
  }
  auto fresh = compute(n);
  std::lock_guard lock(mutex_);
  if (index_.find(n) == index_.end()) {
    ++misses_;
    lru_.emplace_front(n, fresh);
    index_[n] = lru_.begin();
    if (lru_.size() > capacity_) {
      index_.erase(lru_.back().first);
      lru_.pop_back();
    }
  }
  return fresh;
}

std::size_t BcreSimulator::cache_hits() const {
  std::lock_guard lock(mutex_);
  return hits_;
}

std::size_t BcreSimulator::cache_misses() const {
  std::lock_guard lock(mutex_);
  return misses_;
}

double BcreSimulator::total_rate(std::int64_t n) const {
  const double nd = static_cast<double>(n);
  const auto r = rates(n);
  return r->branch + r->coalesce + params_.w() * nd + params_.sigma() * nd * (nd - 1.0) / 2.0;
}

std::int64_t BcreSimulator::sample_branch_size(std::int64_t n, double y, Rng& rng) const {
  const SelectionKernel& kernel = params_.kernel();
  const double q1 = kernel.prob_one(y);
  // J = index of the first copy with K >= 2, given that one exists:
  // P(J = j) proportional to q1^(j-1), j = 1..n.
  std::int64_t j = 1;
  if (q1 > 0.0) {
    const double nd = static_cast<double>(n);
    const double mass = -std::expm1(nd * std::log(q1));
    const double v = std::floor(std::log1p(-rng.uniform() * mass) / std::log(q1));
    j = 1 + std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::max(0.0, v)));
  }
  const std::int64_t big = kernel.sample_at_least_two(y, rng);
  const std::int64_t rest = kernel.sample_sum(y, n - j, rng);
  if (big == kInfiniteCount || rest == kInfiniteCount) return kInfiniteCount;
  if (big > ceiling_ || rest > ceiling_) return kInfiniteCount;
  return (j - 1) + big + rest;
}

std::int64_t BcreSimulator::sample_jump(std::int64_t n, Rng& rng) const {
  const double nd = static_cast<double>(n);
  const auto r = rates(n);
  const double weak = params_.w() * nd;
  const double kingman = params_.sigma() * nd * (nd - 1.0) / 2.0;
  double u = rng.uniform() * (r->branch + r->coalesce + weak + kingman);
  if (u < weak) return n + 1;
  u -= weak;
  if (u < r->branch) {
    const auto it = std::upper_bound(r->branch_cumulative.begin(), r->branch_cumulative.end(), u);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(it - r->branch_cumulative.begin()), mu_.size() - 1);
    return sample_branch_size(n, mu_[i].location, rng);
  }
  u -= r->branch;
  if (u < kingman || r->coalesce_cumulative.empty()) return n - 1;
  u -= kingman;
  const auto it = std::upper_bound(r->coalesce_cumulative.begin(), r->coalesce_cumulative.end(), u);
  const auto jdx = std::min<std::size_t>(static_cast<std::size_t>(it - r->coalesce_cumulative.begin()), lambda_c_.size() - 1);
  const double z = lambda_c_[jdx].location;
  const std::int64_t merged = sample_binomial_at_least_two(n, z, prob_at_least_two(n, z), rng);
  return n - merged + 1;
}

PathZ BcreSimulator::simulate(std::int64_t n0, double T, Rng& rng) const {
  if (n0 < 1) throw Error(ErrorCode::InvalidArgument, "n0 must be >= 1");
  if (!(T >= 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be >= 0");
  PathZ path;
  path.n0 = n0;
  path.horizon = T;
  advance(n0, 0.0, T, rng, [&](const ZEvent& e) {
    if (e.to < 1 || e.to == e.from) throw std::logic_error("invalid Z transition");
    path.events.push_back(e);
  });
  return path;
}

// ---------------------------------------------------------------------------

std::vector<std::vector<Estimate>> dual_moment_grid(const LimitParams& params, std::span<const double> xs,
                                                    std::int64_t n0, std::span<const double> times,
                                                    const McOptions& opts) {
  if (n0 < 1) throw Error(ErrorCode::InvalidArgument, "n0 must be >= 1");
  for (double x : xs) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, "x must lie in [0,1]");
  }
  const BcreSimulator sim(params);
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const auto states = parallel_map<std::vector<std::int64_t>>(
      opts.replicates, resolve_workers(opts.workers), [&](std::size_t i) {
        Rng rng(opts.seed, StreamDomain::Backward, i);
        std::vector<std::int64_t> out(sorted.size());
        std::int64_t n = n0;
        double t = 0.0;
        for (std::size_t k = 0; k < sorted.size(); ++k) {
          n = sim.advance(n, t, sorted[k], rng);
          t = sorted[k];
          out[k] = n;
        }
        return out;
      });
  std::vector<std::vector<Estimate>> out(times.size(), std::vector<Estimate>(xs.size()));
  std::vector<double> column(states.size());
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const auto col = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), times[ti]) - sorted.begin());
    for (std::size_t xj = 0; xj < xs.size(); ++xj) {
      if (times[ti] == 0.0) {
        out[ti][xj] = {std::pow(xs[xj], static_cast<double>(n0)), 0.0, opts.replicates};
        continue;
      }
      for (std::size_t r = 0; r < states.size(); ++r) column[r] = std::pow(xs[xj], static_cast<double>(states[r][col]));
      out[ti][xj] = estimate_from(column);
    }
  }
  return out;
}

Estimate dual_moment(const LimitParams& params, double x, std::int64_t n0, double t, const McOptions& opts) {
  const double xs[] = {x};
  const double times[] = {t};
  return dual_moment_grid(params, xs, n0, times, opts)[0][0];
}

ConservativenessProbe conservativeness_probe(const LimitParams& params, std::int64_t n0, double T,
                                             const McOptions& opts, std::int64_t ceiling) {
  const BcreSimulator sim(params, ceiling);
  // -1 marks a guard trigger.
  const auto finals = parallel_map<std::int64_t>(opts.replicates, resolve_workers(opts.workers), [&](std::size_t i) {
    Rng rng(opts.seed, StreamDomain::Backward, i);
    try {
      return sim.advance(n0, 0.0, T, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StateExplosionGuard) throw;
      return std::int64_t{-1};
    }
  });
  ConservativenessProbe probe;
  probe.replicates = finals.size();
  std::vector<double> kept;
  kept.reserve(finals.size());
  for (std::int64_t v : finals) {
    if (v < 0) {
      ++probe.guard_triggers;
    } else {
      kept.push_back(static_cast<double>(v));
    }
  }
  probe.mean_final = estimate_from(kept);
  probe.yule_bound = static_cast<double>(n0) * std::exp((params.alpha_s() + params.w()) * T);
  return probe;
}

// ---------------------------------------------------------------------------

double total_variation(std::span<const double> p, std::span<const double> q) {
  const std::size_t len = std::max(p.size(), q.size());
  double s = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    const double a = k < p.size() ? p[k] : 0.0;
    const double b = k < q.size() ? q[k] : 0.0;
    s += std::abs(a - b);
  }
  return 0.5 * s;
}

double StationaryEstimate::pgf(double x) const {
  double s = 0.0;
  double xk = 1.0;
  for (double p : pmf) {
    s += p * xk;
    xk *= x;
  }
  return s;
}

StationaryEstimate stationary_estimate(const LimitParams& params, std::int64_t n0, double burn_in, double T,
                                       Rng& rng, double tv_threshold) {
  if (n0 < 1) throw Error(ErrorCode::InvalidArgument, "n0 must be >= 1");
  if (!(burn_in >= 0.0 && T > burn_in)) throw Error(ErrorCode::InvalidArgument, "need 0 <= burn_in < T");
  const BcreSimulator sim(params);
  const double mid = 0.5 * (burn_in + T);
  std::vector<double> first;
  std::vector<double> second;
  StationaryEstimate est;

  auto occupy = [&](std::int64_t n, double a, double b) {
    // Credits the part of [a, b) inside [burn_in, T] to state n.
    auto credit = [&](std::vector<double>& bins, double lo, double hi) {
      const double len = std::min(b, hi) - std::max(a, lo);
      if (len <= 0.0) return;
      const auto k = static_cast<std::size_t>(n);
      if (bins.size() <= k) bins.resize(k + 1, 0.0);
      bins[k] += len;
    };
    credit(first, burn_in, mid);
    credit(second, mid, T);
  };

  std::int64_t n = n0;
  double t = 0.0;
  while (t < T) {
    const double rate = sim.total_rate(n);
    const double next = rate > 0.0 ? t + rng.exponential(rate) : T;
    occupy(n, t, std::min(next, T));
    if (next >= T) break;
    const std::int64_t to = sim.sample_jump(n, rng);
    if (to > sim.ceiling()) throw Error(ErrorCode::StateExplosionGuard, "Z exceeded the state ceiling");
    n = to;
    t = next;
    ++est.events;
  }

  const double half = mid - burn_in;
  for (double& v : first) v /= half;
  for (double& v : second) v /= (T - mid);
  est.tv_halves = total_variation(first, second);
  est.converged = est.tv_halves <= tv_threshold;
  est.pmf.assign(std::max(first.size(), second.size()), 0.0);
  for (std::size_t k = 0; k < est.pmf.size(); ++k) {
    const double a = k < first.size() ? first[k] : 0.0;
    const double b = k < second.size() ? second[k] : 0.0;
    est.pmf[k] = 0.5 * (a + b);
  }
  return est;
}

}  // namespace wfd
