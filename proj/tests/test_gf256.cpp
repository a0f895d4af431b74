#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "gf_oracle.hpp"
#include "simdfs/gf256.hpp"

using namespace simdfs;

TEST_CASE("oracle sanity: frozen values") {
  // 0x80 * 0x02 = x^8, reduced by x^8+x^4+x^3+x^2+1 leaves 0x1D.
  CHECK(gf_oracle::mul(0x80, 0x02, 0x11D) == 0x1D);
  CHECK(gf_oracle::mul(0x01, 0x7B, 0x11D) == 0x7B);
  CHECK(gf_oracle::mul(0x00, 0xFF, 0x11D) == 0x00);
}

TEST_CASE("table annihilator and identity rows") {
  const auto t = gf256::Tables::build();
  for (int a = 0; a < 256; ++a) {
    CHECK(t.mul(static_cast<std::uint8_t>(a), 0) == 0);
    CHECK(t.mul(static_cast<std::uint8_t>(a), 1) == a);
  }
}

TEST_CASE("table matches the shift-and-reduce oracle on all pairs") {
  const auto t = gf256::Tables::build();
  for (int a = 0; a < 256; ++a) {
    for (int b = 0; b < 256; ++b) {
      REQUIRE(t.mul(static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b)) ==
              gf_oracle::mul(static_cast<std::uint8_t>(a),
                             static_cast<std::uint8_t>(b), 0x11D));
    }
  }
}

TEST_CASE("every nonzero element has an inverse") {
  const auto t = gf256::Tables::build();
  for (int a = 1; a < 256; ++a) {
    const auto inv = t.inv(static_cast<std::uint8_t>(a));
    CHECK(t.mul(static_cast<std::uint8_t>(a), inv) == 1);
  }
  CHECK_THROWS_AS(t.inv(0), std::domain_error);
}

TEST_CASE("add is xor") {
  CHECK(gf256::add(0x1D, 0x11) == 0x0C);
  CHECK(gf256::add(0xAB, 0xAB) == 0);
  CHECK(gf256::add(0xAB, 0) == 0xAB);
}

TEST_CASE("field axioms on random triples") {
  const auto t = gf256::Tables::build();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 10000; ++i) {
    const auto a = static_cast<std::uint8_t>(rng());
    const auto b = static_cast<std::uint8_t>(rng());
    const auto c = static_cast<std::uint8_t>(rng());
    CHECK(t.mul(a, b) == t.mul(b, a));
    CHECK(t.mul(t.mul(a, b), c) == t.mul(a, t.mul(b, c)));
    CHECK(t.mul(a, gf256::add(b, c)) ==
          gf256::add(t.mul(a, b), t.mul(a, c)));
  }
}

TEST_CASE("reducible polynomial is rejected") {
  // x^8 + x^4 + x^3 + x^2 = x^2 (x^6 + x^2 + x + 1) has zero divisors.
  CHECK_THROWS_AS(gf256::Tables::build(0x11C), gf256::ReduciblePolynomial);
  CHECK_THROWS_AS(gf256::Tables::build(0x100), gf256::ReduciblePolynomial);
  CHECK_THROWS_AS(gf256::Tables::build(0x42), std::invalid_argument);
}

TEST_CASE("alternative irreducible polynomial works") {
  // x^8+x^4+x^3+x+1 (0x11B): x is not primitive there, but the field is fine.
  const auto t = gf256::Tables::build(0x11B);
  for (int a = 1; a < 256; ++a) {
    CHECK(t.mul(static_cast<std::uint8_t>(a), t.inv(static_cast<std::uint8_t>(a))) == 1);
  }
  CHECK(t.mul(0x80, 0x02) == gf_oracle::mul(0x80, 0x02, 0x11B));
}
