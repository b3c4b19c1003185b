#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library's numerical code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

inline double choose(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Partial sums of sum_k x^k (1-y) y^(k-1) until terms drop below tol.
inline double geometric_pgf_series(double y, double x, double tol = 1e-15) {
  double s = 0.0;
  double term = x * (1.0 - y);
  for (int k = 1; k < 100000 && std::abs(term) > tol; ++k) {
    s += term;
    term *= x * y;
  }
  return s;
}

// P(Geo = k) on {1,2,...} with parameter y.
inline double geometric_pmf(double y, int k) { return (1.0 - y) * std::pow(y, k - 1); }

// Law of K_1 + ... + K_n by repeated convolution of a pmf on {1..kmax}.
inline std::vector<double> convolve_power(const std::vector<double>& pmf1, int n, int width) {
  std::vector<double> acc(width + 1, 0.0);
  acc[0] = 1.0;  // index = sum
  for (int i = 0; i < n; ++i) {
    std::vector<double> next(width + 1, 0.0);
    for (int a = 0; a <= width; ++a) {
      if (acc[a] == 0.0) continue;
      for (std::size_t k = 1; k < pmf1.size() && a + static_cast<int>(k) <= width; ++k) next[a + k] += acc[a] * pmf1[k];
    }
    acc.swap(next);
  }
  return acc;
}

// Composite Simpson rule on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 20000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// Classical RK4 for a scalar-vector ODE system.
inline std::vector<double> rk4(std::function<std::vector<double>(const std::vector<double>&)> f,
                               std::vector<double> y, double t, int steps = 10000) {
  const double h = t / steps;
  auto axpy = [](const std::vector<double>& a, const std::vector<double>& b, double c) {
    std::vector<double> r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + c * b[i];
    return r;
  };
  for (int s = 0; s < steps; ++s) {
    const auto k1 = f(y);
    const auto k2 = f(axpy(y, k1, h / 2));
    const auto k3 = f(axpy(y, k2, h / 2));
    const auto k4 = f(axpy(y, k3, h));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return y;
}

// Pearson chi-square statistic of observed counts against expected
// probabilities, pooling cells with expectation below 5. Returns (stat, dof).
inline std::pair<double, int> chi_square(const std::vector<double>& counts, const std::vector<double>& probs,
                                         double total) {
  double stat = 0.0;
  int cells = 0;
  double pool_obs = 0.0;
  double pool_exp = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double e = probs[i] * total;
    const double o = i < counts.size() ? counts[i] : 0.0;
    if (e < 5.0) {
      pool_obs += o;
      pool_exp += e;
      continue;
    }
    stat += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pool_exp >= 5.0) {
    stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
    ++cells;
  }
  return {stat, cells - 1};
}

// Upper critical value of chi-square at tail 1e-6 (Wilson-Hilferty).
inline double chi_square_critical(int dof) {
  const double z = 4.753424;  // standard normal upper 1e-6 quantile
  const double d = dof;
  const double a = 2.0 / (9.0 * d);
  return d * std::pow(1.0 - a + z * std::sqrt(a), 3.0);
}

}  // namespace oracle
