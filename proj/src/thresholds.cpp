#include "wfduality/thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wfd {

namespace {

double log_ratio(double m) {
  if (m == 0.0) return 1.0;
  if (std::isinf(m)) return 0.0;
  return std::log1p(m) / m;
}

std::vector<double> cumulative_weights(const FiniteMeasure& m) {
  std::vector<double> cum;
  double acc = 0.0;
  for (const Atom& a : m.nodes()) cum.push_back(acc += a.weight);
  return cum;
}

std::size_t pick(const std::vector<double>& cum, double u) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), u * cum.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

}  // namespace

double beta_star(const FiniteMeasure& lambda_c) {
  if (lambda_c.has_atom_at(1.0)) return kInf;
  if (lambda_c.has_atom_at(0.0)) throw Error(ErrorCode::InvalidArgument, "Lambda_c has an atom at 0");
  if (lambda_c.kind() == FiniteMeasure::Kind::Density && lambda_c.shape_a() <= 1.0) return kInf;
  return lambda_c.integrate([](double y) { return -std::log1p(-y) / (y * y); });
}

double alpha_star(const SelectionKernel& kernel, const FiniteMeasure& lambda_s) {
  const double mass = lambda_s.total_mass();
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "alpha* needs Lambda_s with positive mass");
  return lambda_s.integrate([&](double y) { return log_ratio(kernel.mean_excess(y)); }) / mass;
}

double alpha_eff(double alpha_s, double alpha_star, double w) {
  if (alpha_s < 0.0 || w < 0.0 || alpha_star < 0.0 || alpha_star > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "alpha_eff needs nonnegative inputs and alpha* in [0,1]");
  }
  return alpha_s * alpha_star + w;
}

Estimate beta_star_monte_carlo(const FiniteMeasure& lambda_c, std::size_t samples, std::uint64_t seed) {
  if (lambda_c.kind() != FiniteMeasure::Kind::Atomic || lambda_c.empty()) {
    throw Error(ErrorCode::InvalidArgument, "Monte Carlo beta* needs a nonempty atomic Lambda_c");
  }
  const auto cum = cumulative_weights(lambda_c);
  const auto nodes = lambda_c.nodes();
  const double mass = lambda_c.total_mass();
  Rng rng(seed, StreamDomain::Oracle, 0);
  std::vector<double> v(samples);
  for (auto& s : v) {
    const double y = nodes[pick(cum, rng.uniform())].location;
    const double u = std::sqrt(rng.uniform_open());
    const double w = y * u;
    s = 0.5 * mass / (w * (1.0 - w));
  }
  return estimate_from(v);
}

Estimate alpha_star_monte_carlo(const SelectionKernel& kernel, const FiniteMeasure& lambda_s, std::size_t samples,
                                std::uint64_t seed) {
  if (lambda_s.kind() != FiniteMeasure::Kind::Atomic || lambda_s.empty()) {
    throw Error(ErrorCode::InvalidArgument, "Monte Carlo alpha* needs a nonempty atomic Lambda_s");
  }
  const auto cum = cumulative_weights(lambda_s);
  const auto nodes = lambda_s.nodes();
  Rng rng(seed, StreamDomain::Oracle, 1);
  std::vector<double> v(samples);
  for (auto& s : v) {
    const double m = kernel.mean_excess(nodes[pick(cum, rng.uniform())].location);
    s = std::isinf(m) ? 0.0 : 1.0 / (1.0 + rng.uniform() * m);
  }
  return estimate_from(v);
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::ExtinctionAlmostSure: return "ExtinctionAlmostSure";
    case Regime::SurvivalPossible: return "SurvivalPossible";
    case Regime::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

ThresholdReport classify(const LimitParams& params, double tol) {
  if (params.sigma() > 0.0) {
    throw Error(ErrorCode::SigmaNotZero, "classification requires sigma = 0, got " + std::to_string(params.sigma()));
  }
  if (!(tol >= 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be >= 0");
  ThresholdReport r;
  r.tol = tol;
  r.c = params.c();
  r.w = params.w();
  r.alpha_s = params.alpha_s();
  r.beta_star = params.lambda_c().empty() ? 0.0 : beta_star(params.lambda_c());
  r.beta_method = params.lambda_c().kind() == FiniteMeasure::Kind::Atomic ? "closed form per atom"
                                                                          : "composite Gauss-Legendre";
  r.alpha_star = r.alpha_s > 0.0 ? alpha_star(params.kernel(), params.lambda_s()) : 1.0;
  r.alpha_method = r.alpha_s > 0.0 ? "log1p(m)/m against Lambda_s" : "no rare selection";
  r.alpha_eff = alpha_eff(r.alpha_s, r.alpha_star, r.w);
  // The coalescence measure acts as c * Lambda_c; c = 0 leaves no threshold.
  r.threshold = r.c == 0.0 ? 0.0 : r.c * r.beta_star;
  r.margin = r.alpha_eff - r.threshold;
  if (std::isinf(r.threshold)) {
    r.regime = Regime::SurvivalPossible;
  } else if (r.alpha_eff > r.threshold * (1.0 + tol)) {
    r.regime = Regime::ExtinctionAlmostSure;
  } else if (r.alpha_eff < r.threshold * (1.0 - tol)) {
    r.regime = Regime::SurvivalPossible;
  } else {
    r.regime = Regime::Indeterminate;
  }
  return r;
}

}  // namespace wfd
