#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>

namespace simdfs::gf256 {

// x^8 + x^4 + x^3 + x^2 + 1, the polynomial conventionally used by
// Reed-Solomon codecs. Any degree-8 irreducible polynomial works.
constexpr std::uint16_t kDefaultPoly = 0x11D;

struct ReduciblePolynomial : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline std::uint8_t add(std::uint8_t a, std::uint8_t b) {
  return static_cast<std::uint8_t>(a ^ b);
}

// Full 256x256 multiplication table plus the inverse table. 64 KiB resident,
// immutable after construction, safe to share across threads.
class Tables {
 public:
  static Tables build(std::uint16_t poly = kDefaultPoly);

  std::uint8_t mul(std::uint8_t a, std::uint8_t b) const {
    return (*mul_)[a][b];
  }

  // Undefined for a == 0; throws to catch misuse.
  std::uint8_t inv(std::uint8_t a) const {
    if (a == 0) throw std::domain_error("gf256: zero has no inverse");
    return inv_[a];
  }

  std::uint16_t poly() const { return poly_; }

 private:
  Tables() = default;

  using MulTable = std::array<std::array<std::uint8_t, 256>, 256>;
  std::shared_ptr<const MulTable> mul_;
  std::array<std::uint8_t, 256> inv_{};
  std::uint16_t poly_ = 0;
};

}  // namespace simdfs::gf256
