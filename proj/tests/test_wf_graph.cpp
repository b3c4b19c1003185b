#include <doctest.h>

#include <map>

#include "enumeration.hpp"
#include "oracles.hpp"
#include "wfduality/parallel.hpp"
#include "wfduality/wf_graph.hpp"

using namespace wfd;
using doctest::Approx;

namespace {

FiniteModel model(std::int64_t N, SelectionKernel kernel, double c_N = 0.0, double v = 0.5) {
  FiniteModelParams p;
  p.N = N;
  p.kernel = std::move(kernel);
  p.c_N = c_N;
  if (c_N > 0.0) p.lambda_c = FiniteMeasure::dirac(v, v * v);
  return FiniteModel(p);
}

enumerate::Generation binary_generation(double y, double c_N, double v) {
  enumerate::Generation g;
  g.N = 2;
  g.k_pmf = {0.0, 1.0 - y, y};
  g.c_N = c_N;
  if (c_N > 0.0) g.mergers = {{v, 1.0}};
  return g;
}

// Occupancy law: distinct labels among `picks` uniform draws from N.
std::vector<double> occupancy(int N, int picks) {
  std::vector<double> p(N + 1, 0.0);
  p[0] = 1.0;
  for (int s = 0; s < picks; ++s) {
    std::vector<double> q(N + 1, 0.0);
    for (int d = 0; d <= N; ++d) {
      q[d] += p[d] * d / N;
      if (d < N) q[d + 1] += p[d] * (N - d) / static_cast<double>(N);
    }
    p.swap(q);
  }
  return p;
}

}  // namespace

TEST_SUITE("wf_graph") {
  TEST_CASE("N=2 transitions equal exhaustive enumeration exactly") {
    for (double y : {0.0, 0.25, 0.5, 1.0}) {
      for (double c_N : {0.0, 0.5}) {
        for (double v : {0.5, 1.0}) {
          const auto m = model(2, SelectionKernel::binary(), c_N, v);
          const auto g = binary_generation(y, c_N, v);
          for (int count = 0; count <= 2; ++count) {
            const auto lib = m.frequency_transition(count, y);
            const auto ref = enumerate::forward(g, count);
            for (int k = 0; k <= 2; ++k) CHECK(lib[k] == ref[k]);
          }
          for (int n = 1; n <= 2; ++n) {
            const auto lib = m.ancestry_transition(n, y, n);
            const auto ref = enumerate::backward(g, n);
            CHECK(lib.truncated == 0.0);
            for (int k = 0; k <= 2; ++k) CHECK(lib.pmf[k] == ref[k]);
          }
        }
      }
    }
  }

  TEST_CASE("N=3 table kernel transitions match enumeration") {
    SelectionKernel k = SelectionKernel::table({{0.5, {0.5, 0.25, 0.25}, 0.0}});
    FiniteModelParams p;
    p.N = 3;
    p.kernel = k;
    p.c_N = 0.25;
    p.lambda_c = FiniteMeasure::atomic({{0.5, 0.25}, {0.25, 0.0625}});
    const FiniteModel m(p);
    enumerate::Generation g;
    g.N = 3;
    g.k_pmf = {0.0, 0.5, 0.25, 0.25};
    g.c_N = 0.25;
    g.mergers = {{0.5, 0.5}, {0.25, 0.5}};
    for (int count = 0; count <= 3; ++count) {
      const auto lib = m.frequency_transition(count, 0.5);
      const auto ref = enumerate::forward(g, count);
      for (int j = 0; j <= 3; ++j) CHECK(lib[j] == Approx(ref[j]).epsilon(1e-14));
    }
    // Thirds are not dyadic and the enumeration sums up to 3^9 tuples, so its
    // own rounding reaches ~1e-12.
    for (int n = 1; n <= 3; ++n) {
      const auto lib = m.ancestry_transition(n, 0.5, 2 * n);
      const auto ref = enumerate::backward(g, n);
      CHECK(lib.truncated == Approx(0.0).epsilon(1e-15));
      for (int j = 0; j <= 3; ++j) CHECK(lib.pmf[j] == Approx(ref[j]).epsilon(1e-11));
    }
  }

  TEST_CASE("step_frequency law at N=2, geometric y=0.5") {
    const auto m = model(2, SelectionKernel::geometric());
    const std::vector<double> probs = {4.0 / 9.0, 4.0 / 9.0, 1.0 / 9.0};
    const int M = 200000;
    std::vector<double> counts(3, 0.0);
    for (int i = 0; i < M; ++i) {
      Rng rng(17, StreamDomain::Generic, i);
      counts[m.step_frequency(1, 0.5, rng)] += 1.0;
    }
    const auto [stat, dof] = oracle::chi_square(counts, probs, M);
    CHECK(stat < oracle::chi_square_critical(dof));
  }

  TEST_CASE("step_frequency matches frequency_transition with mergers") {
    const auto m = model(20, SelectionKernel::geometric(), 0.3, 0.6);
    const auto probs = m.frequency_transition(7, 0.4);
    const int M = 200000;
    std::vector<double> counts(21, 0.0);
    for (int i = 0; i < M; ++i) {
      Rng rng(23, StreamDomain::Generic, i);
      counts[m.step_frequency(7, 0.4, rng)] += 1.0;
    }
    const auto [stat, dof] = oracle::chi_square(counts, probs, M);
    CHECK(stat < oracle::chi_square_critical(dof));
  }

  TEST_CASE("two neutral lineages collide with probability 1/N") {
    const auto m = model(10, SelectionKernel::geometric());
    const int M = 400000;
    int collisions = 0;
    for (int i = 0; i < M; ++i) {
      Rng rng(5, StreamDomain::Generic, i);
      collisions += m.step_ancestry(2, 0.0, rng).value == 1;
    }
    const double p = static_cast<double>(collisions) / M;
    const double se = std::sqrt(0.1 * 0.9 / M);
    CHECK(std::abs(p - 0.1) < 4 * se);
    const auto exact = m.ancestry_transition(2, 0.0, 0);
    CHECK(exact.pmf[1] == Approx(0.1).epsilon(1e-14));
    CHECK(exact.pmf[2] == Approx(0.9).epsilon(1e-14));
  }

  TEST_CASE("binary kernel at y=1 gives occupancy of 2n picks") {
    const int N = 12;
    const auto m = model(N, SelectionKernel::binary());
    for (int n : {1, 3, 5}) {
      const auto ref = occupancy(N, 2 * n);
      const auto lib = m.ancestry_transition(n, 1.0, n);
      for (int d = 0; d <= N; ++d) CHECK(lib.pmf[d] == Approx(ref[d]).epsilon(1e-12));
      const int M = 100000;
      std::vector<double> counts(N + 1, 0.0);
      for (int i = 0; i < M; ++i) {
        Rng rng(31 + n, StreamDomain::Generic, i);
        counts[m.step_ancestry(n, 1.0, rng).value] += 1.0;
      }
      const auto [stat, dof] = oracle::chi_square(counts, ref, M);
      CHECK(stat < oracle::chi_square_critical(dof));
    }
  }

  TEST_CASE("step_ancestry matches ancestry_transition with mergers") {
    const auto m = model(15, SelectionKernel::geometric(), 0.4, 0.7);
    const auto exact = m.ancestry_transition(4, 0.35, 200);
    CHECK(exact.truncated < 1e-12);
    const int M = 200000;
    std::vector<double> counts(16, 0.0);
    for (int i = 0; i < M; ++i) {
      Rng rng(41, StreamDomain::Generic, i);
      counts[m.step_ancestry(4, 0.35, rng).value] += 1.0;
    }
    const auto [stat, dof] = oracle::chi_square(counts, exact.pmf, M);
    CHECK(stat < oracle::chi_square_critical(dof));
  }

  TEST_CASE("fixed types are absorbing") {
    const auto m = model(30, SelectionKernel::geometric(), 0.5, 0.8);
    for (int i = 0; i < 2000; ++i) {
      Rng rng(2, StreamDomain::Generic, i);
      CHECK(m.step_frequency(0, 0.9, rng) == 0);
      CHECK(m.step_frequency(30, 0.9, rng) == 30);
    }
    const auto t0 = m.frequency_transition(0, 0.7);
    const auto tN = m.frequency_transition(30, 0.7);
    CHECK(t0[0] == 1.0);
    CHECK(tN[30] == Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("selection makes the block count branch") {
    const auto m = model(1000, SelectionKernel::geometric());
    int grew = 0;
    for (int i = 0; i < 1000; ++i) {
      Rng rng(9, StreamDomain::Generic, i);
      grew += m.step_ancestry(1, 0.9, rng).value > 1;
    }
    CHECK(grew > 800);
  }

  TEST_CASE("infinite K saturates the ancestry") {
    const auto m = model(25, SelectionKernel::geometric());
    Rng rng(1, StreamDomain::Generic, 0);
    const auto step = m.step_ancestry(3, 1.0, rng);
    CHECK(step.saturated);
    CHECK(step.value == 25);
  }

  TEST_CASE("neutral frequency is a martingale, with and without mergers") {
    for (double c_N : {0.0, 0.6}) {
      const auto m = model(50, SelectionKernel::geometric(), c_N, 0.5);
      const EnvSequence env{std::vector<double>(10, 0.0)};
      const int M = 40000;
      std::vector<double> finals(M);
      for (int i = 0; i < M; ++i) {
        Rng rng(77, StreamDomain::Generic, i);
        finals[i] = m.simulate_frequency(20, env, rng).value(10);
      }
      const auto est = estimate_from(finals);
      CHECK(std::abs(est.mean - 0.4) < 4 * est.se);
    }
  }

  TEST_CASE("selection favours type 0 under the geometric kernel") {
    const auto m = model(50, SelectionKernel::geometric());
    const auto t = m.frequency_transition(25, 0.5);
    double mean = 0.0;
    for (int k = 0; k <= 50; ++k) mean += k * t[k];
    CHECK(mean / 50 == Approx(1.0 / 3.0).epsilon(1e-12));  // phi_0.5(0.5)
  }

  TEST_CASE("environment draws follow the law and are reproducible") {
    FiniteModelParams p;
    p.N = 10;
    p.env_law = FiniteMeasure::atomic({{0.1, 0.25}, {0.6, 0.75}});
    const FiniteModel m(p);
    const auto a = m.draw_environment(40000, 8, 3);
    const auto b = m.draw_environment(40000, 8, 3);
    CHECK(a.values == b.values);
    CHECK(a.drawn);
    std::map<double, int> freq;
    for (double y : a.values) ++freq[y];
    CHECK(freq.size() == 2);
    const double share = freq[0.6] / 40000.0;
    CHECK(std::abs(share - 0.75) < 4 * std::sqrt(0.75 * 0.25 / 40000));
  }

  TEST_CASE("ancestry consumes the environment from the end") {
    const auto m = model(100, SelectionKernel::geometric());
    // The last entry is 0 (neutral, no branching from a single lineage); the
    // first is 1 (saturation). One step back from n=1 keeps one lineage.
    const EnvSequence env{{1.0, 0.0}};
    Rng rng(3, StreamDomain::Generic, 0);
    const auto path = m.simulate_ancestry(1, env, rng);
    REQUIRE(path.counts.size() == 3);
    CHECK(path.counts[1] == 1);
    CHECK(path.counts[2] == 100);
    CHECK(path.saturations == 1);
  }

  TEST_CASE("model validation") {
    FiniteModelParams p;
    p.N = 1;
    CHECK_THROWS_AS(FiniteModel{p}, Error);
    p.N = 10;
    p.c_N = 0.2;
    CHECK_THROWS_AS(FiniteModel{p}, Error);
    p.lambda_c = FiniteMeasure::dirac(0.0);
    CHECK_THROWS_AS(FiniteModel{p}, Error);
    p.c_N = 0.0;
    p.lambda_c = {};
    p.env_law = FiniteMeasure::dirac(0.5, 0.5);
    CHECK_THROWS_AS(FiniteModel{p}, Error);
  }
}
