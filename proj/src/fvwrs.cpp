#include "wfduality/fvwrs.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace wfd {

FvwrsSimulator::FvwrsSimulator(const LimitParams& params) : params_(params) {
  mu_ = params_.mu_atoms();
  double acc = 0.0;
  for (const Atom& a : mu_) {
    acc += a.weight;
    mu_cumulative_.push_back(acc);
  }
  selection_rate_ = acc;
  if (!std::isfinite(selection_rate_)) throw Error(ErrorCode::InfiniteJumpIntensity, "mu has infinite mass");
  coalescence_rate_ = params_.coalescence_intensity();
  if (!std::isfinite(coalescence_rate_)) {
    throw Error(ErrorCode::InfiniteJumpIntensity, "c * integral z^-2 Lambda_c(dz) is infinite");
  }
  if (coalescence_rate_ > 0.0) coalescence_ = MergerLaw::from_lambda_c(params_.lambda_c());
}

void FvwrsSimulator::run(double x0, std::span<const double> obs_times, double dt, Rng& rng, std::span<double> out,
                         std::vector<JumpRecord>* jumps) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidStep, "dt must be > 0");
  if (!(x0 >= 0.0 && x0 <= 1.0)) throw Error(ErrorCode::InvalidArgument, "x0 must lie in [0,1]");
  if (out.size() < obs_times.size()) throw Error(ErrorCode::InvalidArgument, "output span too short");

  const double w = params_.w();
  const double sigma = params_.sigma();
  const bool continuous = has_continuous_part();
  std::normal_distribution<double> gauss(0.0, 1.0);

  double x = x0;
  double t = 0.0;
  bool frozen = x == 0.0 || x == 1.0;
  double next_sel = selection_rate_ > 0.0 ? rng.exponential(selection_rate_) : kInf;
  double next_coal = coalescence_rate_ > 0.0 ? rng.exponential(coalescence_rate_) : kInf;

  auto snap = [&] {
    if (x < kAbsorbTol) {
      x = 0.0;
      frozen = true;
    } else if (1.0 - x < kAbsorbTol) {
      x = 1.0;
      frozen = true;
    }
  };

  // Applies every jump scheduled in (t, until] in time order.
  auto apply_jumps = [&](double until) {
    while (!frozen) {
      const double next = std::min(next_sel, next_coal);
      if (next > until) break;
      const double before = x;
      JumpKind kind;
      if (next_sel <= next_coal) {
        kind = JumpKind::Selection;
        const double u = rng.uniform() * selection_rate_;
        const auto it = std::upper_bound(mu_cumulative_.begin(), mu_cumulative_.end(), u);
        const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - mu_cumulative_.begin()), mu_.size() - 1);
        x = params_.kernel().pgf(mu_[i].location, x);
        if (x > before + 1e-15) throw std::logic_error("selection jump increased the weak-allele frequency");
        next_sel = next + rng.exponential(selection_rate_);
      } else {
        kind = JumpKind::Coalescence;
        const double z = coalescence_.sample(rng);
        const bool central_is_zero = rng.uniform() <= x;
        x = central_is_zero ? x * (1.0 - z) + z : x * (1.0 - z);
        if (!(x >= 0.0 && x <= 1.0)) throw std::logic_error("coalescence jump left [0,1]");
        next_coal = next + rng.exponential(coalescence_rate_);
      }
      if (jumps) jumps->push_back({next, kind, before, x});
      snap();
    }
  };

  for (std::size_t i = 0; i < obs_times.size(); ++i) {
    const double target = obs_times[i];
    if (target < t) throw Error(ErrorCode::InvalidArgument, "observation times must be nondecreasing");
    if (!frozen) {
      if (continuous) {
        while (t < target && !frozen) {
          const double end = std::min(t + dt, target);
          const double h = end - t;
          const double v = x * (1.0 - x);
          x += -w * v * h;
          if (sigma > 0.0) x += std::sqrt(sigma * v * h) * gauss(rng);
          x = std::clamp(x, 0.0, 1.0);
          snap();
          apply_jumps(end);
          // Keep the grid aligned: snap to the exact multiple of dt.
          t = (end == target) ? target : end;
        }
      } else {
        apply_jumps(target);
      }
      t = target;
    }
    out[i] = x;
  }
}

PathX FvwrsSimulator::simulate_path(double x0, double T, double dt, Rng& rng, bool record_jumps) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidStep, "dt must be > 0");
  if (!(T >= 0.0)) throw Error(ErrorCode::InvalidArgument, "T must be >= 0");
  const auto steps = static_cast<std::size_t>(std::floor(T / dt + 1e-9));
  std::vector<double> times(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) times[k] = static_cast<double>(k) * dt;
  PathX path;
  path.dt = dt;
  path.values.assign(times.size(), 0.0);
  run(x0, times, dt, rng, path.values, record_jumps ? &path.jumps : nullptr);
  for (std::size_t k = 0; k < path.values.size(); ++k) {
    if (path.values[k] == 0.0 || path.values[k] == 1.0) {
      path.absorbed = true;
      path.absorption_time = times[k];
      break;
    }
  }
  return path;
}

PathX simulate_path(const LimitParams& params, double x0, double T, double dt, Rng& rng, bool record_jumps) {
  return FvwrsSimulator(params).simulate_path(x0, T, dt, rng, record_jumps);
}

std::vector<std::vector<Estimate>> moment_grid(const LimitParams& params, double x0, std::span<const int> powers,
                                               std::span<const double> times, double dt, const McOptions& opts) {
  for (int n : powers) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "moment order must be >= 1");
  }
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidStep, "dt must be > 0");
  const FvwrsSimulator sim(params);
  std::vector<double> sorted(times.begin(), times.end());
  std::sort(sorted.begin(), sorted.end());
  const auto samples = parallel_map<std::vector<double>>(opts.replicates, resolve_workers(opts.workers), [&](std::size_t i) {
    Rng rng(opts.seed, StreamDomain::Forward, i);
    std::vector<double> values(sorted.size());
    sim.run(x0, sorted, dt, rng, values);
    return values;
  });
  std::vector<std::vector<Estimate>> out(times.size(), std::vector<Estimate>(powers.size()));
  std::vector<double> column(samples.size());
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    const std::size_t col = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), times[ti]) - sorted.begin());
    for (std::size_t pj = 0; pj < powers.size(); ++pj) {
      if (times[ti] == 0.0) {
        out[ti][pj] = {std::pow(x0, powers[pj]), 0.0, opts.replicates};
        continue;
      }
      for (std::size_t r = 0; r < samples.size(); ++r) column[r] = std::pow(samples[r][col], powers[pj]);
      out[ti][pj] = estimate_from(column);
    }
  }
  return out;
}

Estimate moment_estimate(const LimitParams& params, double x0, int n, double t, double dt, const McOptions& opts) {
  if (t == 0.0) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "moment order must be >= 1");
    return {std::pow(x0, n), 0.0, opts.replicates};
  }
  const int powers[] = {n};
  const double times[] = {t};
  return moment_grid(params, x0, powers, times, dt, opts)[0][0];
}

std::vector<AbsorptionScan> absorption_ladder(const LimitParams& params, double x0, std::span<const double> horizons,
                                              double dt, const McOptions& opts, double eps) {
  const FvwrsSimulator sim(params);
  std::vector<double> sorted(horizons.begin(), horizons.end());
  std::sort(sorted.begin(), sorted.end());
  const auto samples = parallel_map<std::vector<double>>(opts.replicates, resolve_workers(opts.workers), [&](std::size_t i) {
    Rng rng(opts.seed, StreamDomain::Absorption, i);
    std::vector<double> values(sorted.size());
    sim.run(x0, sorted, dt, rng, values);
    return values;
  });
  std::vector<AbsorptionScan> out;
  for (double h : horizons) {
    const std::size_t col = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), h) - sorted.begin());
    AbsorptionScan scan;
    scan.horizon = h;
    scan.replicates = samples.size();
    for (const auto& v : samples) {
      const double x = v[col];
      if (x <= eps) {
        ++scan.at_zero;
      } else if (x >= 1.0 - eps) {
        ++scan.at_one;
      } else {
        ++scan.interior;
      }
    }
    out.push_back(scan);
  }
  return out;
}

AbsorptionScan absorption_scan(const LimitParams& params, double x0, double T, double dt, const McOptions& opts,
                               double eps) {
  const double horizons[] = {T};
  return absorption_ladder(params, x0, horizons, dt, opts, eps)[0];
}

}  // namespace wfd
