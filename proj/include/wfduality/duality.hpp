#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wfduality/measure.hpp"
#include "wfduality/parallel.hpp"
#include "wfduality/wf_graph.hpp"

namespace wfd {

inline constexpr double kDefaultZThreshold = 4.0;

struct DualityReport {
  std::string identity;
  Estimate lhs;
  Estimate rhs;
  double z = 0.0;
  std::vector<std::pair<std::string, std::string>> echo;  // resolved parameters

  bool passes(double threshold = kDefaultZThreshold) const { return std::abs(z) < threshold; }
};

DualityReport make_report(std::string identity, const Estimate& lhs, const Estimate& rhs);

// phi_y(x)^n.
double eval_H(const SelectionKernel& kernel, double x, std::int64_t n, double y);
// Integral of phi_y(x)^n against env_law.
double eval_H_mu(const SelectionKernel& kernel, const FiniteMeasure& env_law, double x, std::int64_t n);

// Duality function of the finite model. Without mergers (c_N = 0) it is
// phi_y(x)^n. On a merger generation the parents' type-0 probability is
// (1-v)x + v or (1-v)x depending on the central individual, so
//   H(x,n;y) = (1-c_N) phi_y(x)^n
//            + c_N E_V[x phi_y((1-V)x+V)^n + (1-x) phi_y((1-V)x)^n].
double eval_H_model(const FiniteModel& model, double x, std::int64_t n, double y);
double eval_H_mu_model(const FiniteModel& model, double x, std::int64_t n);

// Environment (y_0, ..., y_{L-1}). The forward side runs L-1 generations over
// y_0..y_{L-2} from x and averages H(X, n; y_{L-1}); the backward side starts
// from n, steps over y_{L-1}..y_1 and averages H(x, Z; y_0).
DualityReport quenched_check(const FiniteModel& model, const EnvSequence& env, double x, std::int64_t n,
                             const McOptions& opts);

// g generations with a fresh iid environment per replicate; statistic H_mu.
DualityReport annealed_check(const FiniteModel& model, std::size_t generations, double x, std::int64_t n,
                             const McOptions& opts);

// E_x[X(t)^n] from the jump-diffusion against E^n[x^Z(t)] from the
// branching-coalescing process.
DualityReport moment_check(const LimitParams& params, double x, std::int64_t n, double t, double dt,
                           const McOptions& opts);
// All (t, n) cells from one set of paths per side: result[i][j] belongs to
// (times[i], ns[j]).
std::vector<std::vector<DualityReport>> moment_check_grid(const LimitParams& params, double x,
                                                          std::span<const int> ns, std::span<const double> times,
                                                          double dt, const McOptions& opts);

// Maps population size N to the finite-model parameters that approximate a
// LimitParams bundle. rho_N = 1/(sigma N) when sigma > 0, else N^-exponent.
// Rare selection: with probability rho_N |mu| a generation draws y from
// mu/|mu| under the model's kernel; otherwise it is a weak-selection
// generation with geometric kernel at w_N = w rho_N. Mergers happen with
// probability c_N = c rho_N integral z^-2 Lambda_c(dz), strength drawn from
// the normalisation of z^-2 Lambda_c.
struct ScalingScheme {
  double exponent = 0.75;

  double rho(const LimitParams& limit, std::int64_t N) const;
  double c_N(const LimitParams& limit, std::int64_t N) const;
  double w_N(const LimitParams& limit, std::int64_t N) const;
  double rare_probability(const LimitParams& limit, std::int64_t N) const;
  std::size_t generations(const LimitParams& limit, std::int64_t N, double t) const;
  // Throws InvalidScaling if rho_N |mu| >= 1 or c_N > 1.
  void validate(const LimitParams& limit, std::int64_t N) const;
};

struct ConvergenceRow {
  std::int64_t N = 0;
  double rho = 0.0;
  std::size_t generations = 0;
  Estimate finite;
  double gap = 0.0;     // |finite - limit|
  double gap_se = 0.0;  // combined standard error
};

struct ConvergenceTable {
  Estimate limit;  // E^n[x^Z(t)] from the branching-coalescing process
  std::vector<ConvergenceRow> rows;
};

// E[X^N(floor(t / rho_N))^n] for each N against the limit moment.
ConvergenceTable convergence_experiment(const LimitParams& limit, std::span<const std::int64_t> Ns,
                                        const ScalingScheme& scheme, double x, std::int64_t n, double t,
                                        const McOptions& opts);

}  // namespace wfd
