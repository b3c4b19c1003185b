#include "wfduality/parallel.hpp"

#include <cmath>
#include <limits>

namespace wfd {

double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kLeaf = 32;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Estimate estimate_from(std::span<const double> values) {
  Estimate e;
  e.count = values.size();
  if (values.empty()) return e;
  e.mean = pairwise_sum(values) / static_cast<double>(values.size());
  if (values.size() < 2) return e;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - e.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
  e.se = std::sqrt(var / static_cast<double>(values.size()));
  return e;
}

Estimate proportion(std::size_t successes, std::size_t trials) noexcept {
  Estimate e;
  e.count = trials;
  if (trials == 0) return e;
  const double p = static_cast<double>(successes) / static_cast<double>(trials);
  e.mean = p;
  e.se = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return e;
}

double z_score(const Estimate& a, const Estimate& b) noexcept {
  const double diff = a.mean - b.mean;
  const double se = std::sqrt(a.se * a.se + b.se * b.se);
  if (se > 0.0) return diff / se;
  if (diff == 0.0) return 0.0;
  return diff > 0 ? std::numeric_limits<double>::infinity()
                  : -std::numeric_limits<double>::infinity();
}

unsigned resolve_workers(unsigned requested) noexcept {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace wfd
