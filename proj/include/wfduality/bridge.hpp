#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wfduality/bcre.hpp"
#include "wfduality/fvwrs.hpp"
#include "wfduality/thresholds.hpp"

namespace wfd {

struct FixationBudget {
  std::size_t stationary_runs = 200;  // independent occupation estimates of nu
  std::int64_t n0 = 1;
  double burn_in = 50.0;
  double horizon = 2000.0;            // length of each stationary run
  double absorption_horizon = 200.0;  // T for the forward absorption scan
  double dt = 1e-2;
  double eps = kDefaultAbsorptionEps;
  double tv_threshold = kDefaultStationaryTvThreshold;
};

struct FixationPoint {
  double x = 0.0;
  Estimate predicted;  // phi_nu(x) over the stationary runs
  Estimate simulated;  // fraction of X paths absorbed at 1
  double interior = 0.0;
  double z = 0.0;
};

struct FixationReport {
  std::optional<Regime> regime;  // unset when classification does not apply (sigma > 0)
  std::vector<double> nu;        // average occupation pmf
  std::size_t nonconverged_runs = 0;
  double max_tv_halves = 0.0;
  std::vector<FixationPoint> points;
};

// P_x(X_inf = 1) two ways: the generating function of the stationary law of
// Z, and direct absorption of X. Throws RegimeMismatch when the thresholds
// predict almost sure extinction.
FixationReport fixation_via_duality(const LimitParams& params, std::span<const double> xs,
                                    const FixationBudget& budget, const McOptions& opts);

struct ExtinctionRow {
  double horizon = 0.0;
  Estimate fraction_at_zero;
  Estimate z_at_most;  // P(Z(t) <= M0) from Z(0) = n0
  std::size_t guard_triggers = 0;
};

struct ExtinctionReport {
  Regime regime = Regime::Indeterminate;
  std::vector<ExtinctionRow> rows;
};

// Throws RegimeMismatch unless the thresholds predict almost sure extinction.
ExtinctionReport extinction_corroboration(const LimitParams& params, double x, std::span<const double> horizons,
                                          double dt, std::int64_t m0, std::int64_t n0, const McOptions& opts);

}  // namespace wfd
