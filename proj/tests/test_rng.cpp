#include <doctest.h>

#include <random>
#include <set>

#include "wfduality/rng.hpp"

using namespace wfd;

TEST_SUITE("rng") {
  // Known-answer vectors published with the reference Philox implementation.
  TEST_CASE("philox4x32-10 known answers") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }

  TEST_CASE("streams are reproducible and addressed by (seed, domain, index)") {
    Rng a(42, StreamDomain::Forward, 7);
    Rng b(42, StreamDomain::Forward, 7);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());

    std::set<std::uint64_t> firsts;
    for (std::uint64_t idx = 0; idx < 50; ++idx) firsts.insert(Rng(42, StreamDomain::Forward, idx)());
    firsts.insert(Rng(42, StreamDomain::Backward, 0)());
    firsts.insert(Rng(43, StreamDomain::Forward, 0)());
    firsts.insert(Rng(42, StreamDomain::Forward, std::uint64_t{1} << 32)());
    CHECK(firsts.size() == 53);
  }

  TEST_CASE("uniform draws lie in range and have the right mean") {
    Rng r(1, StreamDomain::Generic, 0);
    double s = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      const double v = r.uniform_open();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      REQUIRE(v > 0.0);
      REQUIRE(v < 1.0);
      s += u;
    }
    // SE of the mean is sqrt(1/12/n).
    CHECK(std::abs(s / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  }

  TEST_CASE("usable with standard distributions") {
    Rng r(9, StreamDomain::Generic, 3);
    std::binomial_distribution<int> b(10, 0.3);
    double s = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) s += b(r);
    CHECK(std::abs(s / n - 3.0) < 5.0 * std::sqrt(2.1 / n));
    CHECK(r.blocks_used() > 0);
  }
}
