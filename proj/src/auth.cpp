#include "simdfs/auth.hpp"

#include <cstring>
#include <stdexcept>

namespace simdfs::auth {

namespace {

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

std::uint64_t rotl(std::uint64_t x, int b) { return (x << b) | (x >> (64 - b)); }

void sipround(std::uint64_t& v0, std::uint64_t& v1, std::uint64_t& v2,
              std::uint64_t& v3) {
  v0 += v1;
  v1 = rotl(v1, 13);
  v1 ^= v0;
  v0 = rotl(v0, 32);
  v2 += v3;
  v3 = rotl(v3, 16);
  v3 ^= v2;
  v0 += v3;
  v3 = rotl(v3, 21);
  v3 ^= v0;
  v2 += v1;
  v1 = rotl(v1, 17);
  v1 ^= v2;
  v2 = rotl(v2, 32);
}

std::uint64_t siphash64(std::uint64_t k0, std::uint64_t k1, std::uint8_t extra,
                        std::span<const std::uint8_t> msg) {
  std::uint64_t v0 = 0x736f6d6570736575ULL ^ k0;
  std::uint64_t v1 = 0x646f72616e646f6dULL ^ k1;
  std::uint64_t v2 = 0x6c7967656e657261ULL ^ k0;
  std::uint64_t v3 = 0x7465646279746573ULL ^ k1;
  v1 ^= extra;  // 128-bit output domain separation as in SipHash-128

  const std::size_t n = msg.size();
  const std::size_t blocks = n / 8;
  for (std::size_t i = 0; i < blocks; ++i) {
    const std::uint64_t mi = get_u64(msg.data() + 8 * i);
    v3 ^= mi;
    sipround(v0, v1, v2, v3);
    sipround(v0, v1, v2, v3);
    v0 ^= mi;
  }
  std::uint64_t last = static_cast<std::uint64_t>(n & 0xFF) << 56;
  for (std::size_t i = 8 * blocks; i < n; ++i) {
    last |= static_cast<std::uint64_t>(msg[i]) << (8 * (i - 8 * blocks));
  }
  v3 ^= last;
  sipround(v0, v1, v2, v3);
  sipround(v0, v1, v2, v3);
  v0 ^= last;
  v2 ^= 0xFF ^ extra;
  for (int i = 0; i < 4; ++i) sipround(v0, v1, v2, v3);
  return v0 ^ v1 ^ v2 ^ v3;
}

}  // namespace

std::array<std::uint8_t, 16> siphash128(const Key& key,
                                        std::span<const std::uint8_t> msg) {
  // Fold the 32-byte shared key into the 128-bit SipHash key.
  const std::uint64_t k0 = get_u64(key.data()) ^ get_u64(key.data() + 16);
  const std::uint64_t k1 = get_u64(key.data() + 8) ^ get_u64(key.data() + 24);
  std::array<std::uint8_t, 16> out{};
  put_u64(out.data(), siphash64(k0, k1, 0xEE, msg));
  put_u64(out.data() + 8, siphash64(k0, k1, 0xDD, msg));
  return out;
}

void serialize(const Capability& cap, std::uint8_t* out) {
  put_u32(out, cap.client_id);
  put_u64(out + 4, cap.object_id);
  put_u64(out + 12, cap.offset);
  put_u64(out + 20, cap.length);
  out[28] = cap.rights;
  put_u64(out + 29, cap.expiry_ns);
  std::memcpy(out + 37, cap.mac.data(), 16);
}

Capability deserialize(std::span<const std::uint8_t> in) {
  if (in.size() != Capability::kWireSize) {
    throw std::invalid_argument("auth: capability must be 53 bytes");
  }
  Capability cap;
  cap.client_id = get_u32(in.data());
  cap.object_id = get_u64(in.data() + 4);
  cap.offset = get_u64(in.data() + 12);
  cap.length = get_u64(in.data() + 20);
  cap.rights = in[28];
  cap.expiry_ns = get_u64(in.data() + 29);
  std::memcpy(cap.mac.data(), in.data() + 37, 16);
  return cap;
}

std::string to_string(DenyReason r) {
  switch (r) {
    case DenyReason::kBadMac:
      return "bad_mac";
    case DenyReason::kRightsMismatch:
      return "rights_mismatch";
    case DenyReason::kWrongObject:
      return "wrong_object";
    case DenyReason::kRangeExceeded:
      return "range_exceeded";
    case DenyReason::kExpired:
      return "expired";
  }
  return "unknown";
}

std::array<std::uint8_t, 16> KeyStore::sign(const Capability& cap) const {
  std::uint8_t buf[Capability::kWireSize];
  Capability unsigned_cap = cap;
  unsigned_cap.mac.fill(0);
  serialize(unsigned_cap, buf);
  return mac_(key_, std::span<const std::uint8_t>(buf, Capability::kSignedSize));
}

Capability KeyStore::issue(std::uint32_t client_id, std::uint64_t object_id,
                           std::uint64_t offset, std::uint64_t length,
                           std::uint8_t rights, std::uint64_t expiry_ns) const {
  Capability cap;
  cap.client_id = client_id;
  cap.object_id = object_id;
  cap.offset = offset;
  cap.length = length;
  cap.rights = rights;
  cap.expiry_ns = expiry_ns;
  cap.mac = sign(cap);
  return cap;
}

Verdict KeyStore::validate(const Capability& cap, std::uint8_t requested_op,
                           std::uint64_t target_object,
                           std::uint64_t target_offset,
                           std::uint64_t target_len,
                           std::uint64_t now_ns) const {
  if (sign(cap) != cap.mac) return Verdict::deny(DenyReason::kBadMac);
  if ((requested_op & cap.rights) != requested_op) {
    return Verdict::deny(DenyReason::kRightsMismatch);
  }
  if (target_object != cap.object_id) {
    return Verdict::deny(DenyReason::kWrongObject);
  }
  const std::uint64_t cap_end = cap.offset + cap.length;
  if (target_offset < cap.offset || target_len > cap_end - target_offset ||
      target_offset > cap_end) {
    return Verdict::deny(DenyReason::kRangeExceeded);
  }
  if (now_ns >= cap.expiry_ns) return Verdict::deny(DenyReason::kExpired);
  return Verdict::accept();
}

}  // namespace simdfs::auth
