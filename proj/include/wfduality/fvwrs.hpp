#pragma once

#include <span>
#include <vector>

#include "wfduality/measure.hpp"
#include "wfduality/parallel.hpp"
#include "wfduality/rng.hpp"
#include "wfduality/wf_graph.hpp"

namespace wfd {

enum class JumpKind { Selection, Coalescence };

struct JumpRecord {
  double time = 0.0;
  JumpKind kind = JumpKind::Selection;
  double before = 0.0;
  double after = 0.0;
};

struct PathX {
  double dt = 0.0;
  std::vector<double> values;  // values[k] = X(k * dt)
  std::vector<JumpRecord> jumps;
  bool absorbed = false;
  double absorption_time = 0.0;
};

// Frequency of the weak allele in the Fleming-Viot process with weak and rare
// selection: Poissonian selection jumps x -> phi_y(x) at rate mu(dy),
// Lambda_c jumps at rate c z^-2 Lambda_c(dz), and the drift/diffusion
// dx = -w x(1-x) dt + sqrt(sigma x(1-x)) dB integrated by Euler-Maruyama.
class FvwrsSimulator {
 public:
  // Values within this distance of 0 or 1 are snapped and frozen.
  static constexpr double kAbsorbTol = 1e-12;

  explicit FvwrsSimulator(const LimitParams& params);

  const LimitParams& params() const noexcept { return params_; }
  double selection_rate() const noexcept { return selection_rate_; }
  double coalescence_rate() const noexcept { return coalescence_rate_; }
  bool has_continuous_part() const noexcept { return params_.w() > 0.0 || params_.sigma() > 0.0; }

  // Writes X(obs_times[i]) to out[i]; obs_times must be nondecreasing.
  void run(double x0, std::span<const double> obs_times, double dt, Rng& rng, std::span<double> out,
           std::vector<JumpRecord>* jumps = nullptr) const;

  PathX simulate_path(double x0, double T, double dt, Rng& rng, bool record_jumps = false) const;

 private:
  LimitParams params_;
  std::vector<Atom> mu_;
  std::vector<double> mu_cumulative_;
  double selection_rate_ = 0.0;
  MergerLaw coalescence_;
  double coalescence_rate_ = 0.0;
};

PathX simulate_path(const LimitParams& params, double x0, double T, double dt, Rng& rng, bool record_jumps = false);

// Monte Carlo estimate of E_x[X(t)^n] over opts.replicates paths.
Estimate moment_estimate(const LimitParams& params, double x0, int n, double t, double dt, const McOptions& opts);

// E_x[X(t)^n] for every (t, n) pair from one set of paths: result[i][j]
// belongs to (times[i], powers[j]).
std::vector<std::vector<Estimate>> moment_grid(const LimitParams& params, double x0, std::span<const int> powers,
                                               std::span<const double> times, double dt, const McOptions& opts);

struct AbsorptionScan {
  double horizon = 0.0;
  std::size_t at_zero = 0;
  std::size_t at_one = 0;
  std::size_t interior = 0;
  std::size_t replicates = 0;

  double fraction_at_zero() const { return replicates ? double(at_zero) / double(replicates) : 0.0; }
  double fraction_at_one() const { return replicates ? double(at_one) / double(replicates) : 0.0; }
  double fraction_interior() const { return replicates ? double(interior) / double(replicates) : 0.0; }
};

inline constexpr double kDefaultAbsorptionEps = 1e-4;

// Classifies X(T) as absorbed at 0 (<= eps), at 1 (>= 1-eps) or interior.
AbsorptionScan absorption_scan(const LimitParams& params, double x0, double T, double dt, const McOptions& opts,
                               double eps = kDefaultAbsorptionEps);
// Same classification at several horizons from one set of paths.
std::vector<AbsorptionScan> absorption_ladder(const LimitParams& params, double x0, std::span<const double> horizons,
                                              double dt, const McOptions& opts, double eps = kDefaultAbsorptionEps);

}  // namespace wfd
