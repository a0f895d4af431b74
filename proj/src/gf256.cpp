#include "simdfs/gf256.hpp"

namespace simdfs::gf256 {

namespace {

// Carry-less multiply of two field elements, reduced modulo poly as the
// partial products are accumulated (peasant multiplication).
std::uint8_t mul_reduce(std::uint8_t a, std::uint8_t b, std::uint16_t poly) {
  std::uint16_t acc = 0;
  std::uint16_t aa = a;
  std::uint8_t bb = b;
  while (bb != 0) {
    if (bb & 1) acc ^= aa;
    bb >>= 1;
    aa <<= 1;
    if (aa & 0x100) aa ^= poly;
  }
  return static_cast<std::uint8_t>(acc);
}

}  // namespace

Tables Tables::build(std::uint16_t poly) {
  if ((poly & 0x100) == 0 || poly > 0x1FF) {
    throw std::invalid_argument("gf256: polynomial must have degree 8");
  }

  auto mul = std::make_shared<MulTable>();
  for (int a = 0; a < 256; ++a) {
    for (int b = a; b < 256; ++b) {
      const std::uint8_t p = mul_reduce(static_cast<std::uint8_t>(a),
                                        static_cast<std::uint8_t>(b), poly);
      (*mul)[a][b] = p;
      (*mul)[b][a] = p;
    }
  }

  Tables t;
  t.poly_ = poly;
  t.inv_[0] = 0;
  for (int a = 1; a < 256; ++a) {
    int found = -1;
    for (int b = 1; b < 256; ++b) {
      if ((*mul)[a][b] == 1) {
        found = b;
        break;
      }
    }
    if (found < 0) {
      throw ReduciblePolynomial("gf256: polynomial is reducible, element "
                                "without inverse found");
    }
    t.inv_[a] = static_cast<std::uint8_t>(found);
  }
  t.mul_ = std::move(mul);
  return t;
}

}  // namespace simdfs::gf256
