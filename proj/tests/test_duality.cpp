#include <doctest.h>

#include "enumeration.hpp"
#include "oracles.hpp"
#include "wfduality/duality.hpp"

using namespace wfd;
using doctest::Approx;

namespace {

LimitParams limit(double w, double sigma, FiniteMeasure lambda_s = {}, FiniteMeasure lambda_c = {}, double c = 0.0,
                  SelectionKernel kernel = SelectionKernel::geometric()) {
  return LimitParams(std::move(kernel), std::move(lambda_s), w, std::move(lambda_c), c, sigma);
}

FiniteModel binary_n2(double c_N) {
  FiniteModelParams p;
  p.N = 2;
  p.kernel = SelectionKernel::binary();
  p.c_N = c_N;
  if (c_N > 0.0) p.lambda_c = FiniteMeasure::dirac(0.5, 0.25);
  return FiniteModel(p);
}

enumerate::Generation binary_gen(double y, double c_N) {
  enumerate::Generation g;
  g.N = 2;
  g.k_pmf = {0.0, 1.0 - y, y};
  g.c_N = c_N;
  if (c_N > 0.0) g.mergers = {{0.5, 1.0}};
  return g;
}

}  // namespace

TEST_SUITE("duality") {
  TEST_CASE("duality function examples") {
    const auto geo = SelectionKernel::geometric();
    CHECK(eval_H(geo, 0.3, 0, 0.7) == 1.0);
    CHECK(eval_H(geo, 0.5, 2, 0.5) == Approx(1.0 / 9.0).epsilon(1e-14));
    CHECK(eval_H(geo, 1.0, 5, 0.4) == 1.0);
    const auto mixed = FiniteMeasure::atomic({{0.0, 0.9}, {0.5, 0.1}});
    CHECK(eval_H_mu(geo, mixed, 0.5, 1) == Approx(0.9 * 0.5 + 0.1 / 3.0).epsilon(1e-14));
    CHECK(eval_H_mu(geo, FiniteMeasure::dirac(0.0), 0.4, 3) == Approx(0.064).epsilon(1e-14));
    CHECK(eval_H_mu(geo, mixed, 0.4, 0) == 1.0);
    CHECK_THROWS_AS(eval_H_mu(geo, FiniteMeasure::dirac(0.0, 0.5), 0.4, 1), Error);
  }

  TEST_CASE("H at a point mass equals H_mu and is monotone in n") {
    for (const auto& k : {SelectionKernel::geometric(), SelectionKernel::binary()}) {
      for (double y : {0.0, 0.2, 0.6, 0.9}) {
        for (double x : {0.1, 0.5, 0.95}) {
          double prev = 1.0;
          for (int n = 0; n <= 6; ++n) {
            const double h = eval_H(k, x, n, y);
            CHECK(eval_H_mu(k, FiniteMeasure::dirac(y), x, n) == h);
            CHECK(h <= prev);
            prev = h;
          }
        }
      }
    }
  }

  TEST_CASE("merger-aware H equals the enumerated all-type-0 probability") {
    for (double c_N : {0.0, 0.5}) {
      const auto m = binary_n2(c_N);
      for (double y : {0.0, 0.5, 1.0}) {
        const auto g = binary_gen(y, c_N);
        for (int count = 0; count <= 2; ++count) {
          for (int n = 0; n <= 2; ++n) CHECK(eval_H_model(m, count / 2.0, n, y) == enumerate::all_zero(g, count, n));
        }
      }
    }
  }

  TEST_CASE("one-generation N=2 duality is exact and both simulators agree with it") {
    const double y0 = 0.5;
    const double y1 = 0.25;
    for (double c_N : {0.0, 0.5}) {
      const auto m = binary_n2(c_N);
      const auto g0 = binary_gen(y0, c_N);
      const auto g1 = binary_gen(y1, c_N);
      for (int n = 1; n <= 2; ++n) {
        const int count = 1;
        const auto fwd = enumerate::forward(g0, count);
        const auto bwd = enumerate::backward(g1, n);
        double lhs = 0.0;
        double rhs = 0.0;
        for (int k = 0; k <= 2; ++k) lhs += fwd[k] * enumerate::all_zero(g1, k, n);
        for (int k = 1; k <= 2; ++k) rhs += bwd[k] * enumerate::all_zero(g0, count, k);
        CHECK(lhs == rhs);
        const auto r = quenched_check(m, EnvSequence{{y0, y1}}, 0.5, n, {21, 100000, 4});
        CHECK(std::abs(r.lhs.mean - lhs) < 4 * r.lhs.se);
        CHECK(std::abs(r.rhs.mean - rhs) < 4 * r.rhs.se);
        CHECK(r.passes());
      }
    }
  }

  TEST_CASE("quenched duality in a neutral environment") {
    FiniteModelParams p;
    p.N = 10;
    const FiniteModel m(p);
    const auto r = quenched_check(m, EnvSequence{std::vector<double>(6, 0.0)}, 0.3, 2, {22, 100000, 4});
    CHECK(r.passes());
    const auto one = quenched_check(m, EnvSequence{{0.2, 0.7, 0.4}}, 1.0, 3, {22, 1000, 2});
    CHECK(one.lhs.mean == 1.0);
    CHECK(one.rhs.mean == 1.0);
    CHECK(one.z == 0.0);
  }

  TEST_CASE("quenched duality with selection and mergers at N=20") {
    FiniteModelParams p;
    p.N = 20;
    p.c_N = 0.2;
    p.lambda_c = FiniteMeasure::dirac(0.5, 0.25);
    const FiniteModel m(p);
    const auto r = quenched_check(m, EnvSequence{{0.0, 0.5, 0.0, 0.3, 0.5}}, 0.5, 2, {23, 100000, 4});
    CHECK(r.passes());
  }

  TEST_CASE("annealed duality") {
    FiniteModelParams p;
    p.N = 10;
    const FiniteModel neutral(p);
    const auto g0 = annealed_check(neutral, 0, 0.5, 2, {24, 100, 1});
    CHECK(g0.lhs.mean == Approx(0.25).epsilon(1e-15));
    CHECK(g0.z == 0.0);
    CHECK(annealed_check(neutral, 3, 0.5, 2, {24, 100000, 4}).passes());
    p.N = 20;
    p.env_law = FiniteMeasure::atomic({{0.0, 0.9}, {0.5, 0.1}});
    const FiniteModel mixed(p);
    CHECK(annealed_check(mixed, 5, 0.5, 2, {25, 100000, 4}).passes());
  }

  TEST_CASE("inputs off the 1/N grid are rejected") {
    FiniteModelParams p;
    p.N = 10;
    const FiniteModel m(p);
    CHECK_THROWS_AS(quenched_check(m, EnvSequence{{0.0}}, 0.33, 1, {1, 10, 1}), Error);
    CHECK_THROWS_AS(quenched_check(m, EnvSequence{{0.0}}, 0.3, 11, {1, 10, 1}), Error);
    CHECK_THROWS_AS(quenched_check(m, EnvSequence{}, 0.3, 1, {1, 10, 1}), Error);
  }

  TEST_CASE("moment duality in the Kingman case") {
    const auto p = limit(0.0, 1.0);
    const auto r0 = moment_check(p, 0.5, 2, 0.0, 0.01, {26, 1000, 2});
    CHECK(r0.lhs.mean == 0.25);
    CHECK(r0.rhs.mean == 0.25);
    CHECK(r0.z == 0.0);
    const auto r = moment_check(p, 0.5, 2, 0.5, 0.002, {27, 100000, 4});
    CHECK(r.passes());
    const auto ode = oracle::rk4([](const std::vector<double>& m) { return std::vector<double>{0.0, m[0] - m[1]}; },
                                 {0.5, 0.25}, 0.5);
    CHECK(std::abs(r.lhs.mean - ode[1]) < 4 * r.lhs.se);
    CHECK(std::abs(r.rhs.mean - ode[1]) < 4 * r.rhs.se);
  }

  TEST_CASE("moment duality with every mechanism switched on") {
    const auto p = limit(0.1, 0.0, FiniteMeasure::dirac(0.5, 0.5), FiniteMeasure::dirac(0.5, 1.0), 1.0);
    const std::vector<int> ns = {1, 3};
    const std::vector<double> times = {0.5};
    const auto grid = moment_check_grid(p, 0.5, ns, times, 0.002, {28, 50000, 4});
    for (const auto& row : grid) {
      for (const auto& r : row) CHECK(r.passes());
    }
    CHECK_FALSE(grid[0][0].echo.empty());
  }

  TEST_CASE("scaling scheme") {
    const auto kingman = limit(0.0, 2.0);
    const ScalingScheme s;
    CHECK(s.rho(kingman, 100) == Approx(1.0 / 200));
    CHECK(s.generations(kingman, 100, 0.5) == 100);
    const auto rare = limit(0.2, 0.0, FiniteMeasure::dirac(0.5, 0.5), FiniteMeasure::dirac(0.5, 1.0), 1.0);
    CHECK(s.rho(rare, 10000) == Approx(std::pow(10000.0, -0.75)));
    CHECK(s.c_N(rare, 10000) == Approx(4.0 * std::pow(10000.0, -0.75)));
    CHECK(s.w_N(rare, 10000) == Approx(0.2 * std::pow(10000.0, -0.75)));
    CHECK(s.rare_probability(rare, 10000) == Approx(0.5 * std::pow(10000.0, -0.75)));
    const auto heavy = limit(0.0, 1.0, FiniteMeasure::dirac(0.5, 4.0));
    bool thrown = false;
    try {
      s.validate(heavy, 2);
    } catch (const Error& e) {
      thrown = e.code() == ErrorCode::InvalidScaling;
    }
    CHECK(thrown);
    const std::vector<std::int64_t> Ns = {2};
    CHECK_THROWS_AS(convergence_experiment(heavy, Ns, s, 0.5, 1, 1.0, {1, 10, 1}), Error);
  }

  TEST_CASE("neutral convergence keeps the mean") {
    const auto p = limit(0.0, 1.0);
    const std::vector<std::int64_t> Ns = {20, 40};
    const auto table = convergence_experiment(p, Ns, ScalingScheme{}, 0.5, 1, 0.5, {29, 20000, 4});
    CHECK(table.limit.mean == 0.5);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].generations == 10);
    CHECK(table.rows[1].generations == 20);
    for (const auto& row : table.rows) CHECK(std::abs(row.finite.mean - 0.5) < 4 * row.finite.se);
    for (double x : {0.0, 1.0}) {
      const auto t = convergence_experiment(limit(0.2, 1.0, FiniteMeasure::dirac(0.5, 0.5)), Ns, ScalingScheme{}, x, 2,
                                            0.5, {30, 500, 2});
      CHECK(t.limit.mean == x);
      for (const auto& row : t.rows) CHECK(row.finite.mean == x);
    }
  }
}
