#include "wfduality/measure.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <sstream>

namespace wfd {

namespace {

// 4-point Gauss-Legendre rule on [-1,1].
constexpr std::array<double, 4> kGlNodes{-0.8611363115940526, -0.3399810435848563,
                                         0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGlWeights{0.3478548451374538, 0.6521451548625461,
                                           0.6521451548625461, 0.3478548451374538};

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must lie in [0,1], got " + std::to_string(v));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// FiniteMeasure

FiniteMeasure FiniteMeasure::atomic(std::vector<Atom> atoms) {
  FiniteMeasure m;
  m.kind_ = Kind::Atomic;
  for (const Atom& a : atoms) {
    if (!(a.location >= 0.0 && a.location <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "atom location outside [0,1]: " + std::to_string(a.location));
    }
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
      throw Error(ErrorCode::InvalidArgument, "atom weight must be finite and > 0");
    }
  }
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& l, const Atom& r) { return l.location < r.location; });
  // Merge coincident atoms so that each location appears once.
  std::vector<Atom> merged;
  for (const Atom& a : atoms) {
    if (!merged.empty() && merged.back().location == a.location) {
      merged.back().weight += a.weight;
    } else {
      merged.push_back(a);
    }
  }
  m.nodes_ = std::move(merged);
  for (const Atom& a : m.nodes_) m.total_mass_ += a.weight;
  return m;
}

FiniteMeasure FiniteMeasure::beta(double a, double b, double mass, int nodes) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorCode::InvalidArgument, "beta density needs a > 0 and b > 0");
  }
  if (!(mass >= 0.0) || !std::isfinite(mass)) {
    throw Error(ErrorCode::InvalidArgument, "density mass must be finite and >= 0");
  }
  if (nodes <= 0) throw Error(ErrorCode::InvalidArgument, "density node count must be positive");
  FiniteMeasure m;
  m.kind_ = Kind::Density;
  m.shape_ = (a == 1.0 && b == 1.0) ? Shape::Uniform : Shape::Beta;
  m.a_ = a;
  m.b_ = b;
  m.total_mass_ = mass;
  if (mass == 0.0) return m;
  const int panels = (nodes + 3) / 4;
  const double h = 1.0 / panels;
  const double log_norm = log_beta_fn(a, b);
  m.nodes_.reserve(static_cast<std::size_t>(panels) * 4);
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * h;
    for (std::size_t j = 0; j < kGlNodes.size(); ++j) {
      const double y = mid + 0.5 * h * kGlNodes[j];
      const double density = std::exp((a - 1.0) * std::log(y) + (b - 1.0) * std::log1p(-y) - log_norm);
      m.nodes_.push_back({y, mass * density * 0.5 * h * kGlWeights[j]});
    }
  }
  return m;
}

bool FiniteMeasure::has_atom_at(double y) const noexcept {
  if (kind_ != Kind::Atomic) return false;
  return std::any_of(nodes_.begin(), nodes_.end(), [y](const Atom& a) { return a.location == y; });
}

double FiniteMeasure::inverse_square_mass() const noexcept {
  if (empty()) return 0.0;
  if (kind_ == Kind::Density && a_ <= 2.0) return kInf;
  double s = 0.0;
  for (const Atom& a : nodes_) {
    if (a.location == 0.0) return kInf;
    s += a.weight / (a.location * a.location);
  }
  return s;
}

FiniteMeasure FiniteMeasure::scaled(double factor) const {
  if (!(factor >= 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::InvalidArgument, "scale factor must be finite and >= 0");
  }
  FiniteMeasure m = *this;
  if (factor == 0.0 && kind_ == Kind::Atomic) {
    m.nodes_.clear();
  } else {
    for (Atom& a : m.nodes_) a.weight *= factor;
  }
  m.total_mass_ *= factor;
  return m;
}

std::string FiniteMeasure::describe() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == Kind::Atomic) {
    os << "atoms{";
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (i) os << ",";
      os << "(" << nodes_[i].location << "," << nodes_[i].weight << ")";
    }
    os << "}";
  } else {
    os << (shape_ == Shape::Uniform ? "uniform" : "beta(" + std::to_string(a_) + "," + std::to_string(b_) + ")")
       << " mass=" << total_mass_ << " nodes=" << nodes_.size();
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// SelectionKernel

SelectionKernel SelectionKernel::geometric() {
  SelectionKernel k;
  k.kind_ = Kind::Geometric;
  return k;
}

SelectionKernel SelectionKernel::binary() {
  SelectionKernel k;
  k.kind_ = Kind::Binary;
  return k;
}

SelectionKernel SelectionKernel::table(std::vector<TableEntry> entries) {
  if (entries.empty()) throw Error(ErrorCode::InvalidArgument, "table kernel needs at least one entry");
  std::sort(entries.begin(), entries.end(), [](const TableEntry& l, const TableEntry& r) { return l.y < r.y; });
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const TableEntry& e = entries[i];
    require_unit(e.y, "table entry y");
    if (i > 0 && entries[i - 1].y == e.y) {
      throw Error(ErrorCode::InvalidArgument, "duplicate table entry at y=" + std::to_string(e.y));
    }
    double total = e.inf_mass;
    if (!(e.inf_mass >= 0.0)) throw Error(ErrorCode::InvalidArgument, "table inf_mass must be >= 0");
    for (double p : e.pmf) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "table pmf entries must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "table law at y=" + std::to_string(e.y) + " sums to " +
                                                  std::to_string(total) + ", expected 1");
    }
  }
  if (entries.front().y == 0.0) {
    const TableEntry& z = entries.front();
    const bool is_delta_one = z.inf_mass == 0.0 && !z.pmf.empty() && z.pmf[0] == 1.0;
    if (!is_delta_one) throw Error(ErrorCode::InvalidArgument, "table law at y=0 must be delta_1");
  } else {
    entries.insert(entries.begin(), TableEntry{0.0, {1.0}, 0.0});
  }
  SelectionKernel k;
  k.kind_ = Kind::Table;
  k.entries_ = std::move(entries);
  return k;
}

std::string_view SelectionKernel::name() const noexcept {
  switch (kind_) {
    case Kind::Geometric: return "geometric";
    case Kind::Binary: return "binary";
    case Kind::Table: return "table";
  }
  return "unknown";
}

SelectionKernel::Mix SelectionKernel::locate(double y) const {
  const auto it = std::upper_bound(entries_.begin(), entries_.end(), y,
                                   [](double v, const TableEntry& e) { return v < e.y; });
  if (it == entries_.end()) return {entries_.size() - 1, entries_.size() - 1, 0.0};
  const std::size_t hi = static_cast<std::size_t>(it - entries_.begin());
  const std::size_t lo = hi - 1;  // entries_ starts at y=0 <= y
  const double t = (y - entries_[lo].y) / (entries_[hi].y - entries_[lo].y);
  return {lo, hi, t};
}

namespace {

double entry_pgf(const SelectionKernel::TableEntry& e, double x) {
  double s = 0.0;
  double xp = x;
  for (double p : e.pmf) {
    s += p * xp;
    xp *= x;
  }
  if (x == 1.0) s += e.inf_mass;
  return s;
}

double entry_mean_excess(const SelectionKernel::TableEntry& e) {
  if (e.inf_mass > 0.0) return kInf;
  double s = 0.0;
  for (std::size_t k = 0; k < e.pmf.size(); ++k) s += static_cast<double>(k) * e.pmf[k];
  return s;
}

double entry_pmf(const SelectionKernel::TableEntry& e, std::int64_t k) {
  if (k < 1 || static_cast<std::size_t>(k) > e.pmf.size()) return 0.0;
  return e.pmf[static_cast<std::size_t>(k - 1)];
}

}  // namespace

double SelectionKernel::pgf(double y, double x) const {
  switch (kind_) {
    case Kind::Geometric:
      if (y >= 1.0) return x < 1.0 ? 0.0 : 1.0;
      return x * (1.0 - y) / (1.0 - x * y);
    case Kind::Binary:
      return (1.0 - y) * x + y * x * x;
    case Kind::Table: {
      const Mix m = locate(y);
      const double lo = entry_pgf(entries_[m.lo], x);
      if (m.t == 0.0) return lo;
      return (1.0 - m.t) * lo + m.t * entry_pgf(entries_[m.hi], x);
    }
  }
  return 0.0;
}

double SelectionKernel::mean_excess(double y) const {
  switch (kind_) {
    case Kind::Geometric:
      return y >= 1.0 ? kInf : y / (1.0 - y);
    case Kind::Binary:
      return y;
    case Kind::Table: {
      const Mix m = locate(y);
      const double lo = entry_mean_excess(entries_[m.lo]);
      if (m.t == 0.0) return lo;
      return (1.0 - m.t) * lo + m.t * entry_mean_excess(entries_[m.hi]);
    }
  }
  return 0.0;
}

double SelectionKernel::prob_one(double y) const { return pmf(y, 1); }

double SelectionKernel::prob_infinite(double y) const {
  switch (kind_) {
    case Kind::Geometric:
      return y >= 1.0 ? 1.0 : 0.0;
    case Kind::Binary:
      return 0.0;
    case Kind::Table: {
      const Mix m = locate(y);
      return (1.0 - m.t) * entries_[m.lo].inf_mass + m.t * entries_[m.hi].inf_mass;
    }
  }
  return 0.0;
}

double SelectionKernel::pmf(double y, std::int64_t k) const {
  if (k < 1) return 0.0;
  switch (kind_) {
    case Kind::Geometric:
      if (y >= 1.0) return 0.0;
      return (1.0 - y) * std::pow(y, static_cast<double>(k - 1));
    case Kind::Binary:
      return k == 1 ? 1.0 - y : (k == 2 ? y : 0.0);
    case Kind::Table: {
      const Mix m = locate(y);
      return (1.0 - m.t) * entry_pmf(entries_[m.lo], k) + m.t * entry_pmf(entries_[m.hi], k);
    }
  }
  return 0.0;
}

std::int64_t SelectionKernel::sample_entry(const TableEntry& e, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t k = 0; k < e.pmf.size(); ++k) {
    if (u < e.pmf[k]) return static_cast<std::int64_t>(k + 1);
    u -= e.pmf[k];
  }
  if (e.inf_mass > 0.0) return kInfiniteCount;
  // Rounding residue: return the largest supported value.
  for (std::size_t k = e.pmf.size(); k > 0; --k) {
    if (e.pmf[k - 1] > 0.0) return static_cast<std::int64_t>(k);
  }
  return 1;
}

namespace {

// Number of failures before the first success, success probability 1-y.
std::int64_t geometric_failures(double y, Rng& rng) {
  if (y <= 0.0) return 0;
  const double v = std::floor(std::log(rng.uniform_open()) / std::log(y));
  if (!(v < 9.0e18)) return kInfiniteCount;
  return static_cast<std::int64_t>(v);
}

}  // namespace

std::int64_t SelectionKernel::sample(double y, Rng& rng) const {
  switch (kind_) {
    case Kind::Geometric: {
      if (y >= 1.0) return kInfiniteCount;
      const std::int64_t f = geometric_failures(y, rng);
      return f == kInfiniteCount ? f : f + 1;
    }
    case Kind::Binary:
      return rng.bernoulli(y) ? 2 : 1;
    case Kind::Table: {
      const Mix m = locate(y);
      const bool hi = m.t > 0.0 && rng.bernoulli(m.t);
      return sample_entry(entries_[hi ? m.hi : m.lo], rng);
    }
  }
  return 1;
}

std::int64_t SelectionKernel::sample_at_least_two(double y, Rng& rng) const {
  switch (kind_) {
    case Kind::Geometric: {
      // Memoryless: K | K >= 2 has the law of 1 + K.
      const std::int64_t k = sample(y, rng);
      return k == kInfiniteCount ? k : k + 1;
    }
    case Kind::Binary:
      return 2;
    case Kind::Table: {
      const Mix m = locate(y);
      const TableEntry& lo = entries_[m.lo];
      const TableEntry& hi = entries_[m.hi];
      const double p_lo = (1.0 - m.t) * (1.0 - entry_pmf(lo, 1));
      const double p_hi = m.t * (1.0 - entry_pmf(hi, 1));
      const TableEntry& e = rng.uniform() * (p_lo + p_hi) < p_lo ? lo : hi;
      const double mass = 1.0 - entry_pmf(e, 1);
      double u = rng.uniform() * mass;
      for (std::size_t k = 1; k < e.pmf.size(); ++k) {
        if (u < e.pmf[k]) return static_cast<std::int64_t>(k + 1);
        u -= e.pmf[k];
      }
      if (e.inf_mass > 0.0) return kInfiniteCount;
      for (std::size_t k = e.pmf.size(); k > 1; --k) {
        if (e.pmf[k - 1] > 0.0) return static_cast<std::int64_t>(k);
      }
      throw Error(ErrorCode::InvalidArgument, "P(K>=2)=0 at y=" + std::to_string(y));
    }
  }
  return 2;
}

std::int64_t SelectionKernel::sample_sum(double y, std::int64_t count, Rng& rng) const {
  if (count <= 0) return 0;
  switch (kind_) {
    case Kind::Geometric: {
      if (y <= 0.0) return count;
      if (y >= 1.0) return kInfiniteCount;
      std::negative_binomial_distribution<std::int64_t> nb(count, 1.0 - y);
      return count + nb(rng);
    }
    case Kind::Binary: {
      if (y <= 0.0) return count;
      std::binomial_distribution<std::int64_t> bin(count, y);
      return count + bin(rng);
    }
    case Kind::Table: {
      const Mix m = locate(y);
      std::int64_t n_hi = 0;
      if (m.t > 0.0) {
        std::binomial_distribution<std::int64_t> split(count, m.t);
        n_hi = split(rng);
      }
      std::int64_t total = 0;
      auto add_entry = [&](const TableEntry& e, std::int64_t draws) {
        // Multinomial split of `draws` over the support by sequential binomials.
        double remaining_p = 1.0;
        std::int64_t remaining = draws;
        for (std::size_t k = 0; k < e.pmf.size() && remaining > 0; ++k) {
          if (e.pmf[k] <= 0.0) continue;
          const double p = std::min(1.0, e.pmf[k] / remaining_p);
          std::int64_t hits = remaining;
          if (p < 1.0) {
            std::binomial_distribution<std::int64_t> b(remaining, p);
            hits = b(rng);
          }
          total += hits * static_cast<std::int64_t>(k + 1);
          remaining -= hits;
          remaining_p -= e.pmf[k];
        }
        if (remaining > 0 && e.inf_mass > 0.0) return false;
        return true;
      };
      if (!add_entry(entries_[m.lo], count - n_hi)) return kInfiniteCount;
      if (n_hi > 0 && !add_entry(entries_[m.hi], n_hi)) return kInfiniteCount;
      return total;
    }
  }
  return count;
}

// ---------------------------------------------------------------------------
// Sum distributions

std::vector<double> binomial_pmf(std::int64_t N, double p) {
  std::vector<double> out(static_cast<std::size_t>(N) + 1, 0.0);
  if (p <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (p >= 1.0) {
    out.back() = 1.0;
    return out;
  }
  const double q = 1.0 - p;
  if (N <= 60) {
    std::uint64_t binom = 1;
    for (std::int64_t k = 0; k <= N; ++k) {
      double term = static_cast<double>(binom);
      for (std::int64_t i = 0; i < k; ++i) term *= p;
      for (std::int64_t i = k; i < N; ++i) term *= q;
      out[static_cast<std::size_t>(k)] = term;
      binom = binom * static_cast<std::uint64_t>(N - k) / static_cast<std::uint64_t>(k + 1);
    }
    return out;
  }
  const double nd = static_cast<double>(N);
  for (std::int64_t k = 0; k <= N; ++k) {
    const double kd = static_cast<double>(k);
    out[static_cast<std::size_t>(k)] = std::exp(std::lgamma(nd + 1) - std::lgamma(kd + 1) - std::lgamma(nd - kd + 1) +
                                                kd * std::log(p) + (nd - kd) * std::log1p(-p));
  }
  return out;
}

SumDistribution sum_distribution_by_convolution(const SelectionKernel& kernel, double y, std::int64_t n,
                                                std::int64_t k_max) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sum_distribution needs n >= 1");
  if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "sum_distribution needs k_max >= 0");
  require_unit(y, "y");
  const auto width = static_cast<std::size_t>(k_max) + 1;
  std::vector<double> base(width);
  for (std::size_t j = 0; j < width; ++j) base[j] = kernel.pmf(y, static_cast<std::int64_t>(j) + 1);
  std::vector<double> acc(width, 0.0);
  acc[0] = 1.0;
  std::vector<double> next(width);
  for (std::int64_t i = 0; i < n; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t a = 0; a < width; ++a) {
      if (acc[a] == 0.0) continue;
      for (std::size_t b = 0; a + b < width; ++b) next[a + b] += acc[a] * base[b];
    }
    acc.swap(next);
  }
  SumDistribution out;
  out.n = n;
  out.pmf = std::move(acc);
  double s = 0.0;
  for (double p : out.pmf) s += p;
  out.tail = std::max(0.0, 1.0 - s);
  return out;
}

SumDistribution sum_distribution(const SelectionKernel& kernel, double y, std::int64_t n, std::int64_t k_max) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sum_distribution needs n >= 1");
  if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "sum_distribution needs k_max >= 0");
  require_unit(y, "y");
  SumDistribution out;
  out.n = n;
  out.pmf.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  const double nd = static_cast<double>(n);
  switch (kernel.kind()) {
    case SelectionKernel::Kind::Geometric: {
      if (y >= 1.0) {
        out.tail = 1.0;
        return out;
      }
      if (y <= 0.0) {
        out.pmf[0] = 1.0;
        return out;
      }
      // P(sum = n+k) = C(n+k-1, k) (1-y)^n y^k.
      const double log_q = std::log1p(-y);
      const double log_y = std::log(y);
      for (std::int64_t k = 0; k <= k_max; ++k) {
        const double kd = static_cast<double>(k);
        const double lp = std::lgamma(nd + kd) - std::lgamma(kd + 1.0) - std::lgamma(nd) + nd * log_q + kd * log_y;
        out.pmf[static_cast<std::size_t>(k)] = std::exp(lp);
      }
      break;
    }
    case SelectionKernel::Kind::Binary: {
      // n + Binomial(n, y).
      if (y <= 0.0 || y >= 1.0) {
        const std::int64_t k = y <= 0.0 ? 0 : n;
        if (k <= k_max) out.pmf[static_cast<std::size_t>(k)] = 1.0;
        break;
      }
      const auto bin = binomial_pmf(n, y);
      for (std::int64_t k = 0; k <= std::min(k_max, n); ++k) out.pmf[static_cast<std::size_t>(k)] = bin[static_cast<std::size_t>(k)];
      break;
    }
    case SelectionKernel::Kind::Table:
      return sum_distribution_by_convolution(kernel, y, n, k_max);
  }
  double s = 0.0;
  for (double p : out.pmf) s += p;
  out.tail = std::max(0.0, 1.0 - s);
  return out;
}

double check_master_condition(const SelectionKernel& kernel, const FiniteMeasure& lambda_s) {
  for (const Atom& a : lambda_s.nodes()) {
    if (a.location == 0.0) {
      throw Error(ErrorCode::DegenerateKernelAtAtom, "Lambda_s has an atom at 0");
    }
    const double m = kernel.mean_excess(a.location);
    if (!(m > 0.0)) {
      throw Error(ErrorCode::DegenerateKernelAtAtom,
                  "mean excess E[K_y-1] vanishes at y=" + std::to_string(a.location) + " in the support of Lambda_s");
    }
  }
  return lambda_s.total_mass();
}

// ---------------------------------------------------------------------------
// LimitParams

LimitParams::LimitParams(SelectionKernel kernel, FiniteMeasure lambda_s, double w, FiniteMeasure lambda_c, double c,
                         double sigma)
    : kernel_(std::move(kernel)),
      lambda_s_(std::move(lambda_s)),
      w_(w),
      lambda_c_(std::move(lambda_c)),
      c_(c),
      sigma_(sigma) {
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::ModelError, std::string(name) + " must be finite and >= 0");
    }
  };
  nonneg(w_, "w");
  nonneg(c_, "c");
  nonneg(sigma_, "sigma");
  if (lambda_c_.has_atom_at(0.0)) throw Error(ErrorCode::ModelError, "Lambda_c has an atom at 0");
  check_master_condition(kernel_, lambda_s_);
  if (!(mu_mass() + w_ + c_ + sigma_ > 0.0)) {
    throw Error(ErrorCode::ModelError, "degenerate parameters: mu(]0,1]) + w + c + sigma must be > 0");
  }
}

std::vector<Atom> LimitParams::mu_atoms() const {
  std::vector<Atom> out;
  out.reserve(lambda_s_.nodes().size());
  for (const Atom& a : lambda_s_.nodes()) {
    const double m = kernel_.mean_excess(a.location);
    if (std::isinf(m)) continue;
    out.push_back({a.location, a.weight / m});
  }
  return out;
}

double LimitParams::mu_mass() const {
  double s = 0.0;
  for (const Atom& a : mu_atoms()) s += a.weight;
  return s;
}

double LimitParams::coalescence_intensity() const noexcept {
  if (c_ == 0.0 || lambda_c_.empty()) return 0.0;
  return c_ * lambda_c_.inverse_square_mass();
}

}  // namespace wfd
