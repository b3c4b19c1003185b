#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wfduality/errors.hpp"
#include "wfduality/rng.hpp"

namespace wfd {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Sentinel count for K = infinity.
inline constexpr std::int64_t kInfiniteCount = std::numeric_limits<std::int64_t>::max();

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

// Finite measure on [0,1], either a list of atoms or a density integrated by
// a fixed composite Gauss-Legendre rule. Both expose the same node list, so
// every consumer (integration, sampling, rate tables) treats them alike.
class FiniteMeasure {
 public:
  enum class Kind { Atomic, Density };
  enum class Shape { Uniform, Beta };

  FiniteMeasure() = default;

  static FiniteMeasure atomic(std::vector<Atom> atoms);
  // Density `mass * Beta(a,b)` on [0,1]. The requested node count is rounded
  // up to a multiple of the per-panel rule size and recorded.
  static FiniteMeasure beta(double a, double b, double mass, int nodes);
  static FiniteMeasure uniform(double mass, int nodes) { return beta(1.0, 1.0, mass, nodes); }
  static FiniteMeasure dirac(double y, double mass = 1.0) { return atomic({{y, mass}}); }

  Kind kind() const noexcept { return kind_; }
  Shape shape() const noexcept { return shape_; }
  double shape_a() const noexcept { return a_; }
  double shape_b() const noexcept { return b_; }
  double total_mass() const noexcept { return total_mass_; }
  int node_count() const noexcept { return static_cast<int>(nodes_.size()); }
  std::span<const Atom> nodes() const noexcept { return nodes_; }
  bool empty() const noexcept { return total_mass_ == 0.0; }

  bool has_atom_at(double y) const noexcept;
  bool is_probability(double tol = 1e-9) const noexcept {
    return std::abs(total_mass_ - 1.0) <= tol;
  }

  // Exact weighted sum over atoms, or the quadrature sum over nodes.
  // Throws NonFiniteIntegrand if f is not finite at a node.
  template <typename F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (const Atom& a : nodes_) {
      const double v = f(a.location);
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteIntegrand,
                    "integrand is not finite at y=" + std::to_string(a.location));
      }
      s += a.weight * v;
    }
    return s;
  }

  // Integral of y^-2 against the measure; +inf when it diverges (atom at 0,
  // or a density whose behaviour at 0 is not integrable against y^-2).
  double inverse_square_mass() const noexcept;

  FiniteMeasure scaled(double factor) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::Atomic;
  Shape shape_ = Shape::Uniform;
  double a_ = 1.0;
  double b_ = 1.0;
  double total_mass_ = 0.0;
  std::vector<Atom> nodes_;
};

// The selection kernel y -> Q(y), a law on {1,2,...} plus possibly infinity.
class SelectionKernel {
 public:
  enum class Kind { Geometric, Binary, Table };

  // pmf[k-1] = P(K = k); inf_mass = P(K = infinity).
  struct TableEntry {
    double y = 0.0;
    std::vector<double> pmf;
    double inf_mass = 0.0;
  };

  // Q(y) = Geo_N(1-y): P(K=k) = (1-y) y^(k-1); Q(1) = delta_inf.
  static SelectionKernel geometric();
  // Q(y) = (1-y) delta_1 + y delta_2.
  static SelectionKernel binary();
  // Tabulated laws at given y; between entries Q(y) is the linear mixture of
  // the neighbouring laws, beyond the last entry it is constant. An entry
  // delta_1 at y=0 is implied when the table does not start at 0.
  static SelectionKernel table(std::vector<TableEntry> entries);

  Kind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;
  std::span<const TableEntry> entries() const noexcept { return entries_; }

  double pgf(double y, double x) const;
  double mean_excess(double y) const;
  double prob_one(double y) const;
  double prob_infinite(double y) const;
  double pmf(double y, std::int64_t k) const;

  std::int64_t sample(double y, Rng& rng) const;
  // K conditioned on K >= 2. Requires P(K >= 2) > 0.
  std::int64_t sample_at_least_two(double y, Rng& rng) const;
  // Sum of `count` iid copies of K; kInfiniteCount if any copy is infinite.
  std::int64_t sample_sum(double y, std::int64_t count, Rng& rng) const;

 private:
  struct Mix {
    std::size_t lo;
    std::size_t hi;
    double t;  // weight on hi
  };
  Mix locate(double y) const;
  static std::int64_t sample_entry(const TableEntry& e, Rng& rng);

  Kind kind_ = Kind::Geometric;
  std::vector<TableEntry> entries_;
};

// Binomial(N, p) pmf; exact products for N <= 60, lgamma beyond.
std::vector<double> binomial_pmf(std::int64_t N, double p);

// Law of K_{y,1} + ... + K_{y,n}, truncated: pmf[k] = P(sum = n + k) for
// k = 0..k_max, the remaining mass (including infinity) in `tail`.
struct SumDistribution {
  std::int64_t n = 0;
  std::vector<double> pmf;
  double tail = 0.0;
};

// Closed form for the geometric kernel (negative binomial), convolution
// otherwise.
SumDistribution sum_distribution(const SelectionKernel& kernel, double y, std::int64_t n,
                                 std::int64_t k_max);
// Generic route: n-fold convolution of the truncated law of K-1.
SumDistribution sum_distribution_by_convolution(const SelectionKernel& kernel, double y,
                                                std::int64_t n, std::int64_t k_max);

// The master condition reduces to: m(y) > 0 wherever lambda_s has mass (so that
// mu = m^-1 lambda_s is well defined). Returns lambda_s([0,1]), which equals
// the integral of m against mu.
double check_master_condition(const SelectionKernel& kernel, const FiniteMeasure& lambda_s);

// Parameters of the scaling limits: selection kernel and Lambda_s (rare
// selection), w (weak selection), Lambda_c and c (multiple mergers), sigma
// (Kingman component). Validated on construction.
class LimitParams {
 public:
  LimitParams(SelectionKernel kernel, FiniteMeasure lambda_s, double w, FiniteMeasure lambda_c,
              double c, double sigma);

  const SelectionKernel& kernel() const noexcept { return kernel_; }
  const FiniteMeasure& lambda_s() const noexcept { return lambda_s_; }
  const FiniteMeasure& lambda_c() const noexcept { return lambda_c_; }
  double w() const noexcept { return w_; }
  double c() const noexcept { return c_; }
  double sigma() const noexcept { return sigma_; }
  double alpha_s() const noexcept { return lambda_s_.total_mass(); }

  // Atoms of mu = m(y)^-1 Lambda_s(dy), derived from Lambda_s on demand.
  // Points with m(y) = infinity carry no mu-mass and are dropped.
  std::vector<Atom> mu_atoms() const;
  double mu_mass() const;

  // c * integral z^-2 Lambda_c(dz): the total rate of Lambda_c coalescence
  // jumps of the forward process.
  double coalescence_intensity() const noexcept;

 private:
  SelectionKernel kernel_;
  FiniteMeasure lambda_s_;
  double w_;
  FiniteMeasure lambda_c_;
  double c_;
  double sigma_;
};

}  // namespace wfd
