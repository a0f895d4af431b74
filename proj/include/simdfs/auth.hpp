#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>

namespace simdfs::auth {

enum Rights : std::uint8_t {
  kRead = 1,
  kWrite = 2,
};

// Signed ticket issued by the metadata service. The mac covers the canonical
// little-endian encoding of all preceding fields. 53 bytes on the wire.
struct Capability {
  std::uint32_t client_id = 0;
  std::uint64_t object_id = 0;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  std::uint8_t rights = 0;
  std::uint64_t expiry_ns = 0;
  std::array<std::uint8_t, 16> mac{};

  static constexpr std::size_t kWireSize = 53;
  static constexpr std::size_t kSignedSize = kWireSize - 16;

  bool operator==(const Capability&) const = default;
};

void serialize(const Capability& cap, std::uint8_t* out);  // kWireSize bytes
Capability deserialize(std::span<const std::uint8_t> in);  // exactly kWireSize

enum class DenyReason {
  kBadMac,
  kRightsMismatch,
  kWrongObject,
  kRangeExceeded,
  kExpired,
};

std::string to_string(DenyReason r);

struct Verdict {
  bool accepted = false;
  DenyReason reason = DenyReason::kBadMac;

  static Verdict accept() { return {true, DenyReason::kBadMac}; }
  static Verdict deny(DenyReason r) { return {false, r}; }
};

using Key = std::array<std::uint8_t, 32>;
using MacFn = std::function<std::array<std::uint8_t, 16>(
    const Key&, std::span<const std::uint8_t>)>;

// Default keyed MAC primitive: SipHash-2-4 with 128-bit output. Deterministic,
// so golden vectors stay stable across platforms.
std::array<std::uint8_t, 16> siphash128(const Key& key,
                                        std::span<const std::uint8_t> msg);

// Shared-key capability issuer/validator. The same keystore instance (or one
// built from the same key) must be used by the metadata issuer and the
// storage-node validators.
class KeyStore {
 public:
  explicit KeyStore(const Key& key, MacFn mac = siphash128)
      : key_(key), mac_(std::move(mac)) {}

  Capability issue(std::uint32_t client_id, std::uint64_t object_id,
                   std::uint64_t offset, std::uint64_t length,
                   std::uint8_t rights, std::uint64_t expiry_ns) const;

  Verdict validate(const Capability& cap, std::uint8_t requested_op,
                   std::uint64_t target_object, std::uint64_t target_offset,
                   std::uint64_t target_len, std::uint64_t now_ns) const;

 private:
  std::array<std::uint8_t, 16> sign(const Capability& cap) const;

  Key key_;
  MacFn mac_;
};

}  // namespace simdfs::auth
