#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace wfd {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// A stream is addressed by (seed, domain, index). The seed is the Philox key;
// domain and index occupy the two high counter words, and the two low words
// count 128-bit blocks within the stream. Streams therefore never overlap and
// any replicate's draws depend only on its address, not on scheduling.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += kW0;
      key[1] += kW1;
      ctr = round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;

  static constexpr Counter round(const Counter& c, const Key& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// Named stream domains keep the two sides of a duality check (and the
// environment draws) on disjoint streams even when they share a seed.
enum class StreamDomain : std::uint32_t {
  Generic = 0,
  Forward = 1,
  Backward = 2,
  Environment = 3,
  Stationary = 4,
  Absorption = 5,
  Limit = 6,
  Finite = 7,
  Oracle = 8,
};

// UniformRandomBitGenerator over one Philox stream; usable with <random>
// distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  Rng(std::uint64_t seed, StreamDomain domain, std::uint64_t index) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        index_lo_(static_cast<std::uint32_t>(index)),
        tag_(static_cast<std::uint32_t>(domain) << 16 ^ static_cast<std::uint32_t>(index >> 32)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (pos_ == 2) refill();
    return buffer_[pos_++];
  }

  // Uniform on [0,1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0,1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential(double rate) noexcept { return -std::log(uniform_open()) / rate; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  std::uint64_t blocks_used() const noexcept { return block_; }

 private:
  void refill() noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32), index_lo_, tag_};
    const auto out = Philox4x32::block(ctr, key_);
    buffer_[0] = std::uint64_t{out[0]} << 32 | out[1];
    buffer_[1] = std::uint64_t{out[2]} << 32 | out[3];
    ++block_;
    pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t index_lo_;
  std::uint32_t tag_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int pos_ = 2;
};

}  // namespace wfd
