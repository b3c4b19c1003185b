#include "wfduality/wf_graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace wfd {

namespace {

std::size_t sample_cumulative(const std::vector<double>& cumulative, double u) {
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * cumulative.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::int64_t draw_binomial(std::int64_t n, double p, Rng& rng) {
  if (p <= 0.0 || n == 0) return 0;
  if (p >= 1.0) return n;
  std::binomial_distribution<std::int64_t> b(n, p);
  return b(rng);
}

// Failures before the first success with success probability p.
std::int64_t geometric_skip(double p, Rng& rng) {
  if (p >= 1.0) return 0;
  const double v = std::floor(std::log(rng.uniform_open()) / std::log1p(-p));
  return v < 9.0e18 ? static_cast<std::int64_t>(v) : std::numeric_limits<std::int64_t>::max();
}

}  // namespace

// ---------------------------------------------------------------------------

MergerLaw MergerLaw::from_lambda_c(const FiniteMeasure& lambda_c) {
  MergerLaw law;
  if (lambda_c.empty()) return law;
  const double total = lambda_c.inverse_square_mass();
  if (!std::isfinite(total)) {
    throw Error(ErrorCode::InfiniteJumpIntensity, "z^-2 Lambda_c(dz) is not a finite measure");
  }
  double acc = 0.0;
  for (const Atom& a : lambda_c.nodes()) {
    const double p = a.weight / (a.location * a.location) / total;
    law.atoms_.push_back({a.location, p});
    acc += p;
    law.cumulative_.push_back(acc);
  }
  return law;
}

double MergerLaw::sample(Rng& rng) const {
  if (atoms_.size() == 1) return atoms_.front().location;
  return atoms_[sample_cumulative(cumulative_, rng.uniform())].location;
}

// ---------------------------------------------------------------------------

FiniteModel::FiniteModel(FiniteModelParams params) : params_(std::move(params)) {
  if (params_.N < 2) throw Error(ErrorCode::ModelError, "population size N must be >= 2");
  if (!params_.env_law.is_probability()) {
    throw Error(ErrorCode::ModelError, "environment law must be a probability measure, total mass is " +
                                           std::to_string(params_.env_law.total_mass()));
  }
  if (!(params_.c_N >= 0.0 && params_.c_N <= 1.0)) throw Error(ErrorCode::ModelError, "c_N must lie in [0,1]");
  if (params_.lambda_c.has_atom_at(0.0)) throw Error(ErrorCode::ModelError, "Lambda_c has an atom at 0");
  if (params_.c_N > 0.0) {
    if (params_.lambda_c.empty()) throw Error(ErrorCode::ModelError, "c_N > 0 requires a nonzero Lambda_c");
    merger_ = MergerLaw::from_lambda_c(params_.lambda_c);
  }
  double acc = 0.0;
  for (const Atom& a : params_.env_law.nodes()) {
    acc += a.weight;
    env_cumulative_.push_back(acc);
  }
}

std::int64_t FiniteModel::step_frequency(const SelectionKernel& kernel, std::int64_t count, double y,
                                         Rng& rng) const {
  const std::int64_t N = params_.N;
  if (count <= 0) return 0;
  const double x = static_cast<double>(count) / static_cast<double>(N);
  double parent_p = x;
  if (params_.c_N > 0.0 && rng.bernoulli(params_.c_N)) {
    const double v = merger_.sample(rng);
    const bool central_is_zero = rng.bernoulli(x);
    parent_p = (1.0 - v) * x + (central_is_zero ? v : 0.0);
  }
  return draw_binomial(N, kernel.pgf(y, parent_p), rng);
}

std::vector<double> FiniteModel::frequency_transition(std::int64_t count, double y) const {
  const std::int64_t N = params_.N;
  const double x = static_cast<double>(count) / static_cast<double>(N);
  std::vector<double> out(static_cast<std::size_t>(N) + 1, 0.0);
  auto add = [&](double weight, double parent_p) {
    if (weight == 0.0) return;
    const auto pmf = binomial_pmf(N, params_.kernel.pgf(y, parent_p));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += weight * pmf[k];
  };
  add(1.0 - params_.c_N, x);
  if (params_.c_N > 0.0) {
    for (const Atom& a : merger_.atoms()) {
      const double v = a.location;
      add(params_.c_N * a.weight * x, (1.0 - v) * x + v);
      add(params_.c_N * a.weight * (1.0 - x), (1.0 - v) * x);
    }
  }
  return out;
}

AncestryStep FiniteModel::step_ancestry(std::int64_t n, double y, Rng& rng) const {
  const std::int64_t N = params_.N;
  const std::int64_t picks = params_.kernel.sample_sum(y, n, rng);
  double v = 0.0;
  if (params_.c_N > 0.0 && rng.bernoulli(params_.c_N)) v = merger_.sample(rng);
  if (picks == kInfiniteCount) {
    // Infinitely many picks: every label is hit unless all picks go to the
    // central individual.
    return {v >= 1.0 ? 1 : N, true};
  }
  std::int64_t central = 0;
  if (v > 0.0) central = draw_binomial(picks, v, rng);
  std::int64_t remaining = picks - central;
  std::int64_t distinct = central > 0 ? 1 : 0;
  // Uniform picks: each hits a new label with probability (N - distinct)/N.
  while (remaining > 0 && distinct < N) {
    const double p_new = static_cast<double>(N - distinct) / static_cast<double>(N);
    const std::int64_t misses = geometric_skip(p_new, rng);
    if (misses >= remaining) break;
    remaining -= misses + 1;
    ++distinct;
  }
  return {distinct, false};
}

AncestryTransition FiniteModel::ancestry_transition(std::int64_t n, double y, std::int64_t k_max) const {
  const std::int64_t N = params_.N;
  const SumDistribution sums = sum_distribution(params_.kernel, y, n, k_max);
  AncestryTransition out;
  out.pmf.assign(static_cast<std::size_t>(N) + 1, 0.0);
  out.truncated = sums.tail;
  const std::int64_t max_picks = n + k_max;
  const auto width = static_cast<std::size_t>(N) + 1;

  // Dynamic programme over picks for one merger strength v. State: number of
  // distinct non-central labels hit, and whether the central label was hit.
  auto run = [&](double weight, double v) {
    if (weight == 0.0) return;
    std::vector<double> miss(width, 0.0);
    std::vector<double> hit(width, 0.0);
    miss[0] = 1.0;
    const double nd = static_cast<double>(N);
    const double p_central = v + (1.0 - v) / nd;
    const double p_other = (1.0 - v) / nd;
    for (std::int64_t s = 1; s <= max_picks; ++s) {
      std::vector<double> nmiss(width, 0.0);
      std::vector<double> nhit(width, 0.0);
      for (std::size_t d = 0; d + 1 < width; ++d) {
        const double fresh = static_cast<double>(N - 1 - static_cast<std::int64_t>(d)) * p_other;
        const double stale = static_cast<double>(d) * p_other;
        for (int h = 0; h < 2; ++h) {
          const double mass = h ? hit[d] : miss[d];
          if (mass == 0.0) continue;
          auto& same = h ? nhit : nmiss;
          nhit[d] += mass * p_central;
          same[d] += mass * stale;
          if (fresh > 0.0) same[d + 1] += mass * fresh;
        }
      }
      miss.swap(nmiss);
      hit.swap(nhit);
      if (s >= n) {
        const double ps = sums.pmf[static_cast<std::size_t>(s - n)];
        if (ps == 0.0) continue;
        for (std::size_t d = 0; d + 1 < width; ++d) {
          out.pmf[d] += weight * ps * miss[d];
          out.pmf[d + 1] += weight * ps * hit[d];
        }
      }
    }
  };
  run(1.0 - params_.c_N, 0.0);
  if (params_.c_N > 0.0) {
    for (const Atom& a : merger_.atoms()) run(params_.c_N * a.weight, a.location);
  }
  return out;
}

double FiniteModel::sample_environment(Rng& rng) const {
  const auto nodes = params_.env_law.nodes();
  if (nodes.size() == 1) return nodes.front().location;
  return nodes[sample_cumulative(env_cumulative_, rng.uniform())].location;
}

EnvSequence FiniteModel::draw_environment(std::size_t length, std::uint64_t seed, std::uint64_t stream_index) const {
  EnvSequence env;
  env.drawn = true;
  env.seed = seed;
  env.stream_index = stream_index;
  Rng rng(seed, StreamDomain::Environment, stream_index);
  env.values.reserve(length);
  for (std::size_t i = 0; i < length; ++i) env.values.push_back(sample_environment(rng));
  return env;
}

FrequencyPath FiniteModel::simulate_frequency(std::int64_t x0_count, const EnvSequence& env, Rng& rng) const {
  if (x0_count < 0 || x0_count > params_.N) {
    throw Error(ErrorCode::InvalidArgument, "initial count must lie in [0, N]");
  }
  FrequencyPath path;
  path.N = params_.N;
  path.env = env;
  path.counts.reserve(env.values.size() + 1);
  path.counts.push_back(x0_count);
  std::int64_t count = x0_count;
  for (double y : env.values) {
    const std::int64_t prev = count;
    count = step_frequency(count, y, rng);
    if ((prev == 0 && count != 0) || (prev == params_.N && count != params_.N && params_.kernel.prob_infinite(y) == 0.0)) {
      throw Error(ErrorCode::ModelError, "frequency left an absorbing state");
    }
    path.counts.push_back(count);
  }
  return path;
}

BlockCountPath FiniteModel::simulate_ancestry(std::int64_t n0, const EnvSequence& env, Rng& rng) const {
  if (n0 < 1 || n0 > params_.N) throw Error(ErrorCode::InvalidArgument, "sample size must lie in [1, N]");
  BlockCountPath path;
  path.env = env;
  path.counts.reserve(env.values.size() + 1);
  path.counts.push_back(n0);
  std::int64_t n = n0;
  for (auto it = env.values.rbegin(); it != env.values.rend(); ++it) {
    const AncestryStep step = step_ancestry(n, *it, rng);
    n = step.value;
    if (step.saturated) ++path.saturations;
    path.counts.push_back(n);
  }
  return path;
}

}  // namespace wfd
