#include "wfduality/duality.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wfduality/bcre.hpp"
#include "wfduality/fvwrs.hpp"

namespace wfd {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::int64_t count_of(const FiniteModel& model, double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorCode::InvalidArgument, "x must lie in [0,1]");
  const double scaled = x * static_cast<double>(model.N());
  const auto count = static_cast<std::int64_t>(std::llround(scaled));
  if (std::abs(scaled - static_cast<double>(count)) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "x must be a multiple of 1/N in the finite model");
  }
  return count;
}

void check_sample_size(const FiniteModel& model, std::int64_t n) {
  if (n < 1 || n > model.N()) throw Error(ErrorCode::InvalidArgument, "sample size n must lie in [1, N]");
}

std::vector<std::pair<std::string, std::string>> model_echo(const FiniteModel& model, double x, std::int64_t n,
                                                            const McOptions& opts) {
  const auto& p = model.params();
  return {{"N", std::to_string(p.N)},
          {"kernel", std::string(p.kernel.name())},
          {"env_law", p.env_law.describe()},
          {"c_N", fmt(p.c_N)},
          {"lambda_c", p.lambda_c.describe()},
          {"x", fmt(x)},
          {"n", std::to_string(n)},
          {"replicates", std::to_string(opts.replicates)},
          {"seed", std::to_string(opts.seed)}};
}

std::vector<std::pair<std::string, std::string>> limit_echo(const LimitParams& p) {
  return {{"kernel", std::string(p.kernel().name())},
          {"lambda_s", p.lambda_s().describe()},
          {"w", fmt(p.w())},
          {"lambda_c", p.lambda_c().describe()},
          {"c", fmt(p.c())},
          {"sigma", fmt(p.sigma())}};
}

}  // namespace

DualityReport make_report(std::string identity, const Estimate& lhs, const Estimate& rhs) {
  DualityReport r;
  r.identity = std::move(identity);
  r.lhs = lhs;
  r.rhs = rhs;
  r.z = z_score(lhs, rhs);
  return r;
}

double eval_H(const SelectionKernel& kernel, double x, std::int64_t n, double y) {
  if (n < 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 0");
  if (n == 0) return 1.0;
  return std::pow(kernel.pgf(y, x), static_cast<double>(n));
}

double eval_H_mu(const SelectionKernel& kernel, const FiniteMeasure& env_law, double x, std::int64_t n) {
  if (!env_law.is_probability()) throw Error(ErrorCode::InvalidArgument, "environment law must be a probability");
  return env_law.integrate([&](double y) { return eval_H(kernel, x, n, y); });
}

double eval_H_model(const FiniteModel& model, double x, std::int64_t n, double y) {
  const auto& p = model.params();
  const double plain = eval_H(p.kernel, x, n, y);
  if (p.c_N == 0.0) return plain;
  double merged = 0.0;
  for (const Atom& a : model.merger_law().atoms()) {
    const double v = a.location;
    merged += a.weight * (x * eval_H(p.kernel, (1.0 - v) * x + v, n, y) + (1.0 - x) * eval_H(p.kernel, (1.0 - v) * x, n, y));
  }
  return (1.0 - p.c_N) * plain + p.c_N * merged;
}

double eval_H_mu_model(const FiniteModel& model, double x, std::int64_t n) {
  return model.params().env_law.integrate([&](double y) { return eval_H_model(model, x, n, y); });
}

DualityReport quenched_check(const FiniteModel& model, const EnvSequence& env, double x, std::int64_t n,
                             const McOptions& opts) {
  if (env.values.empty()) throw Error(ErrorCode::InvalidArgument, "environment sequence must be nonempty");
  check_sample_size(model, n);
  const std::int64_t x_count = count_of(model, x);
  const double N = static_cast<double>(model.N());
  const auto& ys = env.values;
  const std::size_t L = ys.size();
  const unsigned workers = resolve_workers(opts.workers);

  const auto lhs = parallel_map<double>(opts.replicates, workers, [&](std::size_t i) {
    Rng rng(opts.seed, StreamDomain::Forward, i);
    std::int64_t c = x_count;
    for (std::size_t g = 0; g + 1 < L; ++g) c = model.step_frequency(c, ys[g], rng);
    return eval_H_model(model, static_cast<double>(c) / N, n, ys[L - 1]);
  });
  const auto rhs = parallel_map<double>(opts.replicates, workers, [&](std::size_t i) {
    Rng rng(opts.seed, StreamDomain::Backward, i);
    std::int64_t z = n;
    for (std::size_t g = L - 1; g >= 1; --g) z = model.step_ancestry(z, ys[g], rng).value;
    return eval_H_model(model, x, z, ys[0]);
  });
  DualityReport r = make_report("quenched sampling duality", estimate_from(lhs), estimate_from(rhs));
  r.echo = model_echo(model, x, n, opts);
  std::string e;
  for (double y : ys) e += (e.empty() ? "" : ",") + fmt(y);
  r.echo.emplace_back("env", "[" + e + "]");
  return r;
}

DualityReport annealed_check(const FiniteModel& model, std::size_t generations, double x, std::int64_t n,
                             const McOptions& opts) {
  check_sample_size(model, n);
  const std::int64_t x_count = count_of(model, x);
  const double N = static_cast<double>(model.N());
  DualityReport r;
  if (generations == 0) {
    const double h = eval_H_mu_model(model, x, n);
    r = make_report("annealed sampling duality", {h, 0.0, opts.replicates}, {h, 0.0, opts.replicates});
  } else {
    const unsigned workers = resolve_workers(opts.workers);
    const auto lhs = parallel_map<double>(opts.replicates, workers, [&](std::size_t i) {
      Rng rng(opts.seed, StreamDomain::Forward, i);
      std::int64_t c = x_count;
      for (std::size_t g = 0; g < generations; ++g) c = model.step_frequency(c, model.sample_environment(rng), rng);
      return eval_H_mu_model(model, static_cast<double>(c) / N, n);
    });
    const auto rhs = parallel_map<double>(opts.replicates, workers, [&](std::size_t i) {
      Rng rng(opts.seed, StreamDomain::Backward, i);
      std::int64_t z = n;
      for (std::size_t g = 0; g < generations; ++g) z = model.step_ancestry(z, model.sample_environment(rng), rng).value;
      return eval_H_mu_model(model, x, z);
    });
    r = make_report("annealed sampling duality", estimate_from(lhs), estimate_from(rhs));
  }
  r.echo = model_echo(model, x, n, opts);
  r.echo.emplace_back("generations", std::to_string(generations));
  return r;
}

std::vector<std::vector<DualityReport>> moment_check_grid(const LimitParams& params, double x,
                                                          std::span<const int> ns, std::span<const double> times,
                                                          double dt, const McOptions& opts) {
  const auto lhs = moment_grid(params, x, ns, times, dt, opts);
  std::vector<std::vector<DualityReport>> out(times.size());
  // The right side needs x^Z for one x; n varies through the initial state.
  for (std::size_t j = 0; j < ns.size(); ++j) {
    const double xs[] = {x};
    const auto rhs = dual_moment_grid(params, xs, ns[j], times, opts);
    for (std::size_t i = 0; i < times.size(); ++i) {
      DualityReport r = make_report("moment duality", lhs[i][j], rhs[i][0]);
      r.echo = limit_echo(params);
      r.echo.emplace_back("x", fmt(x));
      r.echo.emplace_back("n", std::to_string(ns[j]));
      r.echo.emplace_back("t", fmt(times[i]));
      r.echo.emplace_back("dt", fmt(dt));
      r.echo.emplace_back("replicates", std::to_string(opts.replicates));
      r.echo.emplace_back("seed", std::to_string(opts.seed));
      out[i].push_back(std::move(r));
    }
  }
  return out;
}

DualityReport moment_check(const LimitParams& params, double x, std::int64_t n, double t, double dt,
                           const McOptions& opts) {
  if (n < 1 || n > std::numeric_limits<int>::max()) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  const int ns[] = {static_cast<int>(n)};
  const double times[] = {t};
  return moment_check_grid(params, x, ns, times, dt, opts)[0][0];
}

// ---------------------------------------------------------------------------

double ScalingScheme::rho(const LimitParams& limit, std::int64_t N) const {
  if (N < 2) throw Error(ErrorCode::InvalidScaling, "N must be >= 2");
  if (limit.sigma() > 0.0) return 1.0 / (limit.sigma() * static_cast<double>(N));
  if (!(exponent > 0.0)) throw Error(ErrorCode::InvalidScaling, "scaling exponent must be > 0");
  return std::pow(static_cast<double>(N), -exponent);
}

double ScalingScheme::c_N(const LimitParams& limit, std::int64_t N) const {
  return limit.coalescence_intensity() * rho(limit, N);
}

double ScalingScheme::w_N(const LimitParams& limit, std::int64_t N) const { return limit.w() * rho(limit, N); }

double ScalingScheme::rare_probability(const LimitParams& limit, std::int64_t N) const {
  return limit.mu_mass() * rho(limit, N);
}

std::size_t ScalingScheme::generations(const LimitParams& limit, std::int64_t N, double t) const {
  return static_cast<std::size_t>(std::floor(t / rho(limit, N) + 1e-9));
}

void ScalingScheme::validate(const LimitParams& limit, std::int64_t N) const {
  const double rare = rare_probability(limit, N);
  if (!(rare < 1.0)) {
    throw Error(ErrorCode::InvalidScaling, "rho_N |gamma_N| = " + fmt(rare) + " >= 1 at N=" + std::to_string(N));
  }
  const double c = c_N(limit, N);
  if (!(c <= 1.0)) throw Error(ErrorCode::InvalidScaling, "c_N = " + fmt(c) + " > 1 at N=" + std::to_string(N));
  if (!(w_N(limit, N) < 1.0)) throw Error(ErrorCode::InvalidScaling, "w_N >= 1 at N=" + std::to_string(N));
}

ConvergenceTable convergence_experiment(const LimitParams& limit, std::span<const std::int64_t> Ns,
                                        const ScalingScheme& scheme, double x, std::int64_t n, double t,
                                        const McOptions& opts) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be >= 0");
  for (std::int64_t N : Ns) scheme.validate(limit, N);

  ConvergenceTable table;
  table.limit = dual_moment(limit, x, n, t, opts);

  const auto mu = limit.mu_atoms();
  FiniteMeasure rare_law = FiniteMeasure::dirac(0.0);
  if (!mu.empty()) {
    const double mass = limit.mu_mass();
    std::vector<Atom> normalized;
    for (const Atom& a : mu) normalized.push_back({a.location, a.weight / mass});
    rare_law = FiniteMeasure::atomic(std::move(normalized));
  }
  const SelectionKernel weak_kernel = SelectionKernel::geometric();
  const unsigned workers = resolve_workers(opts.workers);

  for (std::size_t row = 0; row < Ns.size(); ++row) {
    const std::int64_t N = Ns[row];
    FiniteModelParams fp;
    fp.N = N;
    fp.kernel = limit.kernel();
    fp.env_law = rare_law;
    fp.c_N = scheme.c_N(limit, N);
    fp.lambda_c = limit.lambda_c();
    const FiniteModel model(fp);
    const double rare = scheme.rare_probability(limit, N);
    const double wN = scheme.w_N(limit, N);
    const std::size_t gens = scheme.generations(limit, N, t);
    // x need not be a multiple of 1/N; start from the nearest count.
    const auto x_count = static_cast<std::int64_t>(std::llround(x * static_cast<double>(N)));
    const double Nd = static_cast<double>(N);

    const auto samples = parallel_map<double>(opts.replicates, workers, [&](std::size_t i) {
      Rng rng(opts.seed, StreamDomain::Finite, (static_cast<std::uint64_t>(row) << 40) | i);
      std::int64_t c = x_count;
      for (std::size_t g = 0; g < gens; ++g) {
        if (rare > 0.0 && rng.bernoulli(rare)) {
          c = model.step_frequency(c, model.sample_environment(rng), rng);
        } else {
          c = model.step_frequency(weak_kernel, c, wN, rng);
        }
      }
      return std::pow(static_cast<double>(c) / Nd, static_cast<double>(n));
    });
    ConvergenceRow r;
    r.N = N;
    r.rho = scheme.rho(limit, N);
    r.generations = gens;
    r.finite = estimate_from(samples);
    r.gap = std::abs(r.finite.mean - table.limit.mean);
    r.gap_se = std::sqrt(r.finite.se * r.finite.se + table.limit.se * table.limit.se);
    table.rows.push_back(r);
  }
  return table;
}

}  // namespace wfd
