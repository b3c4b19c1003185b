#include "wfduality/bridge.hpp"

#include <algorithm>
#include <cmath>

namespace wfd {

namespace {

std::optional<Regime> regime_of(const LimitParams& params) {
  if (params.sigma() > 0.0) return std::nullopt;
  return classify(params).regime;
}

}  // namespace

FixationReport fixation_via_duality(const LimitParams& params, std::span<const double> xs,
                                    const FixationBudget& budget, const McOptions& opts) {
  for (double x : xs) {
    if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, "x must lie in [0,1]");
  }
  if (budget.stationary_runs < 2) throw Error(ErrorCode::InvalidArgument, "need at least two stationary runs");
  FixationReport report;
  report.regime = regime_of(params);
  if (report.regime == Regime::ExtinctionAlmostSure) {
    throw Error(ErrorCode::RegimeMismatch, "thresholds predict almost sure extinction; Z has no stationary law");
  }

  const unsigned workers = resolve_workers(opts.workers);
  const auto runs = parallel_map<StationaryEstimate>(budget.stationary_runs, workers, [&](std::size_t r) {
    Rng rng(opts.seed, StreamDomain::Stationary, r);
    return stationary_estimate(params, budget.n0, budget.burn_in, budget.horizon, rng, budget.tv_threshold);
  });
  std::size_t width = 0;
  for (const auto& s : runs) {
    width = std::max(width, s.pmf.size());
    if (!s.converged) ++report.nonconverged_runs;
    report.max_tv_halves = std::max(report.max_tv_halves, s.tv_halves);
  }
  report.nu.assign(width, 0.0);
  for (const auto& s : runs) {
    for (std::size_t k = 0; k < s.pmf.size(); ++k) report.nu[k] += s.pmf[k] / static_cast<double>(runs.size());
  }

  std::vector<double> phi(runs.size());
  for (double x : xs) {
    FixationPoint p;
    p.x = x;
    for (std::size_t r = 0; r < runs.size(); ++r) phi[r] = runs[r].pgf(x);
    p.predicted = estimate_from(phi);
    const AbsorptionScan scan = absorption_scan(params, x, budget.absorption_horizon, budget.dt, opts, budget.eps);
    p.simulated = proportion(scan.at_one, scan.replicates);
    p.interior = scan.fraction_interior();
    p.z = z_score(p.predicted, p.simulated);
    report.points.push_back(p);
  }
  return report;
}

ExtinctionReport extinction_corroboration(const LimitParams& params, double x, std::span<const double> horizons,
                                          double dt, std::int64_t m0, std::int64_t n0, const McOptions& opts) {
  ExtinctionReport report;
  report.regime = classify(params).regime;
  if (report.regime != Regime::ExtinctionAlmostSure) {
    throw Error(ErrorCode::RegimeMismatch,
                "extinction corroboration needs the ExtinctionAlmostSure regime, thresholds give " +
                    std::string(to_string(report.regime)));
  }
  const auto scans = absorption_ladder(params, x, horizons, dt, opts);

  std::vector<double> sorted(horizons.begin(), horizons.end());
  std::sort(sorted.begin(), sorted.end());
  const BcreSimulator sim(params);
  // Per path: Z at each horizon, or -1 once the state ceiling was crossed.
  const auto states = parallel_map<std::vector<std::int64_t>>(
      opts.replicates, resolve_workers(opts.workers), [&](std::size_t i) {
        Rng rng(opts.seed, StreamDomain::Backward, i);
        std::vector<std::int64_t> out(sorted.size(), -1);
        std::int64_t n = n0;
        double t = 0.0;
        try {
          for (std::size_t k = 0; k < sorted.size(); ++k) {
            n = sim.advance(n, t, sorted[k], rng);
            t = sorted[k];
            out[k] = n;
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::StateExplosionGuard) throw;
        }
        return out;
      });

  for (std::size_t h = 0; h < horizons.size(); ++h) {
    const auto col = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), horizons[h]) - sorted.begin());
    ExtinctionRow row;
    row.horizon = horizons[h];
    row.fraction_at_zero = proportion(scans[h].at_zero, scans[h].replicates);
    std::size_t small = 0;
    for (const auto& s : states) {
      if (s[col] < 0) {
        ++row.guard_triggers;
      } else if (s[col] <= m0) {
        ++small;
      }
    }
    row.z_at_most = proportion(small, states.size());
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace wfd
