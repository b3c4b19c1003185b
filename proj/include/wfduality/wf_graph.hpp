#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wfduality/measure.hpp"
#include "wfduality/rng.hpp"

namespace wfd {

// Law of the merger strength V on a merger generation: the normalisation of
// z^-2 Lambda_c(dz).
class MergerLaw {
 public:
  MergerLaw() = default;
  // Throws InfiniteJumpIntensity if z^-2 Lambda_c does not normalise.
  static MergerLaw from_lambda_c(const FiniteMeasure& lambda_c);

  bool empty() const noexcept { return atoms_.empty(); }
  std::span<const Atom> atoms() const noexcept { return atoms_; }
  double sample(Rng& rng) const;

 private:
  std::vector<Atom> atoms_;  // (v, probability)
  std::vector<double> cumulative_;
};

struct FiniteModelParams {
  std::int64_t N = 2;
  SelectionKernel kernel = SelectionKernel::geometric();
  FiniteMeasure env_law = FiniteMeasure::dirac(0.0);  // common law of the iid environment
  double c_N = 0.0;                                   // merger probability per generation
  FiniteMeasure lambda_c;                             // merger strength law (via z^-2 Lambda_c)
};

struct EnvSequence {
  std::vector<double> values;
  // Provenance: how the values were produced (fixed by the caller, or drawn
  // from env_law on stream (seed, Environment, stream_index)).
  bool drawn = false;
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
};

struct FrequencyPath {
  std::int64_t N = 0;
  std::vector<std::int64_t> counts;  // counts[g] = N * X(g)
  EnvSequence env;

  double value(std::size_t g) const { return static_cast<double>(counts[g]) / static_cast<double>(N); }
};

struct BlockCountPath {
  std::vector<std::int64_t> counts;  // counts[l] = block count l generations back
  EnvSequence env;
  std::size_t saturations = 0;       // steps where some K was infinite
};

struct AncestryStep {
  std::int64_t value = 1;
  bool saturated = false;
};

// Exact one-generation law of the block count, with the mass that fell beyond
// the truncation of the parent-pick total (or on K = infinity).
struct AncestryTransition {
  std::vector<double> pmf;  // pmf[k] = P(next = k), k = 0..N
  double truncated = 0.0;
};

// Wright-Fisher graph with selection in random environment and multiple
// mergers, at population size N. Forward steps use the conditional binomial
// law of the next type-0 count; backward steps sample parent labels.
class FiniteModel {
 public:
  explicit FiniteModel(FiniteModelParams params);

  const FiniteModelParams& params() const noexcept { return params_; }
  std::int64_t N() const noexcept { return params_.N; }
  const MergerLaw& merger_law() const noexcept { return merger_; }

  std::int64_t step_frequency(std::int64_t count, double y, Rng& rng) const {
    return step_frequency(params_.kernel, count, y, rng);
  }
  // Same step with an explicit kernel (used by scaling schemes whose weak
  // selection generations use a different kernel).
  std::int64_t step_frequency(const SelectionKernel& kernel, std::int64_t count, double y, Rng& rng) const;

  // Exact law of the next type-0 count (index = count).
  std::vector<double> frequency_transition(std::int64_t count, double y) const;

  AncestryStep step_ancestry(std::int64_t n, double y, Rng& rng) const;
  AncestryTransition ancestry_transition(std::int64_t n, double y, std::int64_t k_max) const;

  double sample_environment(Rng& rng) const;
  EnvSequence draw_environment(std::size_t length, std::uint64_t seed, std::uint64_t stream_index) const;

  FrequencyPath simulate_frequency(std::int64_t x0_count, const EnvSequence& env, Rng& rng) const;
  // The environment is consumed from its last entry backwards.
  BlockCountPath simulate_ancestry(std::int64_t n0, const EnvSequence& env, Rng& rng) const;

 private:
  FiniteModelParams params_;
  MergerLaw merger_;
  std::vector<double> env_cumulative_;
};

}  // namespace wfd
