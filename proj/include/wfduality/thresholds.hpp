#pragma once

#include <string_view>

#include "wfduality/measure.hpp"
#include "wfduality/parallel.hpp"
#include "wfduality/rng.hpp"

namespace wfd {

// beta* = (1/2) E[1/(W(1-W))], W = Y U, Y ~ Lambda_c, U with density 2u.
// Integrating out U gives the integral of -log(1-y)/y^2 against Lambda_c.
// +inf for an atom at 1 or a divergent integral.
double beta_star(const FiniteMeasure& lambda_c);

// alpha* = E[1/(1 + V m(Y))], V uniform, Y ~ Lambda_s / alpha_s. The
// V-integral is log(1+m)/m (1 at m=0, 0 at m=inf).
double alpha_star(const SelectionKernel& kernel, const FiniteMeasure& lambda_s);

double alpha_eff(double alpha_s, double alpha_star, double w);

// Monte Carlo of the defining expectations, for cross-checking the reduced
// forms. Atomic measures only.
Estimate beta_star_monte_carlo(const FiniteMeasure& lambda_c, std::size_t samples, std::uint64_t seed);
Estimate alpha_star_monte_carlo(const SelectionKernel& kernel, const FiniteMeasure& lambda_s, std::size_t samples,
                                std::uint64_t seed);

enum class Regime { ExtinctionAlmostSure, SurvivalPossible, Indeterminate };
std::string_view to_string(Regime r);

inline constexpr double kDefaultClassifyTol = 1e-6;

struct ThresholdReport {
  double beta_star = 0.0;
  double threshold = 0.0;  // c * beta_star, the value alpha_eff is compared with
  double alpha_star = 1.0;
  double alpha_s = 0.0;
  double w = 0.0;
  double c = 0.0;
  double alpha_eff = 0.0;
  double margin = 0.0;  // alpha_eff - threshold
  double tol = kDefaultClassifyTol;
  Regime regime = Regime::Indeterminate;
  const char* beta_method = "";
  const char* alpha_method = "";
};

// Throws SigmaNotZero if sigma > 0.
ThresholdReport classify(const LimitParams& params, double tol = kDefaultClassifyTol);

}  // namespace wfd
