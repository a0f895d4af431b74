#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "simdfs/auth.hpp"

namespace simdfs::wire {

constexpr std::uint32_t kDefaultMtu = 2048;

struct WireError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OversizedPacket : WireError {
  using WireError::WireError;
};
struct Truncated : WireError {
  using WireError::WireError;
};
struct UnknownOpcode : WireError {
  using WireError::WireError;
};
struct InvalidDescriptor : WireError {
  using WireError::WireError;
};
struct HeaderTooLarge : WireError {
  using WireError::WireError;
};

enum class Opcode : std::uint8_t {
  kWrite = 1,
  kRead = 2,
  kAck = 3,
  kNack = 4,
  kWqeConfig = 5,
};

namespace flags {
constexpr std::uint8_t kFirst = 1 << 0;
constexpr std::uint8_t kLast = 1 << 1;
}  // namespace flags

// Fixed 32-byte transport header present on every packet. Little-endian on
// the wire, four reserved bytes zeroed on encode and ignored on decode.
struct RdmaHeader {
  std::uint32_t context_id = 0;
  std::uint64_t message_id = 0;
  std::uint32_t packet_seq = 0;
  std::uint8_t opcode = static_cast<std::uint8_t>(Opcode::kWrite);
  std::uint8_t flags = 0;
  std::uint16_t payload_len = 0;
  std::uint32_t src_node = 0;
  std::uint32_t dst_node = 0;

  static constexpr std::size_t kWireSize = 32;

  bool operator==(const RdmaHeader&) const = default;
};

enum class DfsOp : std::uint8_t {
  kWrite = 1,
  kRead = 2,
};

// Carried only by the first packet of a DFS request.
struct DfsHeader {
  std::uint8_t op_type = static_cast<std::uint8_t>(DfsOp::kWrite);
  std::uint64_t greq_id = 0;
  auth::Capability capability;

  static constexpr std::size_t kWireSize = 1 + 8 + auth::Capability::kWireSize;

  bool operator==(const DfsHeader&) const = default;
};

struct ReplicaCoordinate {
  std::uint32_t node = 0;
  std::uint64_t storage_addr = 0;

  static constexpr std::size_t kWireSize = 12;

  bool operator==(const ReplicaCoordinate&) const = default;
};

enum class ResiliencyTag : std::uint8_t {
  kNone = 0,
  kReplication = 1,
  kEc = 2,
};

enum class ReplicationStrategy : std::uint8_t {
  kRing = 0,
  kPbt = 1,
};

enum class EcRole : std::uint8_t {
  kData = 0,
  kParity = 1,
};

// Resiliency parameters of a write. Replication and erasure coding are
// mutually exclusive. Caps keep the first-packet headers within a 1500 B MTU.
struct ResiliencyDescriptor {
  static constexpr std::size_t kMaxReplicas = 16;
  static constexpr std::size_t kMaxParity = 8;

  ResiliencyTag tag = ResiliencyTag::kNone;

  // tag == kReplication: downstream replica list indexed by virtual rank - 1.
  ReplicationStrategy strategy = ReplicationStrategy::kRing;
  std::uint8_t virtual_rank = 0;
  std::vector<ReplicaCoordinate> replicas;

  // tag == kEc
  std::uint8_t k = 0;
  std::uint8_t m = 0;
  EcRole role = EcRole::kData;
  std::uint8_t data_node_index = 0;
  std::vector<ReplicaCoordinate> parity_coords;

  std::size_t wire_size() const;
  bool operator==(const ResiliencyDescriptor&) const = default;

  static ResiliencyDescriptor none();
  static ResiliencyDescriptor replication(ReplicationStrategy s,
                                          std::uint8_t virtual_rank,
                                          std::vector<ReplicaCoordinate> replicas);
  static ResiliencyDescriptor ec(std::uint8_t k, std::uint8_t m, EcRole role,
                                 std::uint8_t data_node_index,
                                 std::vector<ReplicaCoordinate> parity_coords);
};

struct WriteRequestHeader {
  std::uint64_t target_storage_addr = 0;
  std::uint64_t write_len = 0;
  ResiliencyDescriptor resiliency;

  std::size_t wire_size() const { return 16 + resiliency.wire_size(); }
  bool operator==(const WriteRequestHeader&) const = default;
};

struct ReadRequestHeader {
  std::uint64_t source_storage_addr = 0;
  std::uint64_t read_len = 0;

  static constexpr std::size_t kWireSize = 16;
  bool operator==(const ReadRequestHeader&) const = default;
};

struct Packet {
  RdmaHeader rdma;
  std::optional<DfsHeader> dfs;
  std::optional<WriteRequestHeader> wrh;
  std::optional<ReadRequestHeader> rrh;
  std::vector<std::uint8_t> payload;

  std::size_t wire_size() const;
  bool has_flag(std::uint8_t f) const { return (rdma.flags & f) != 0; }
  bool operator==(const Packet&) const = default;
};

std::vector<std::uint8_t> encode_packet(const Packet& pkt,
                                        std::uint32_t mtu = kDefaultMtu);
Packet decode_packet(std::span<const std::uint8_t> bytes);

// Packetization plan for a write request: the first descriptor carries the
// DFS headers, payload lengths sum to data_len, every packet fits the MTU.
struct PacketDescriptor {
  std::uint32_t seq = 0;
  std::uint8_t flags = 0;
  std::uint32_t payload_len = 0;
  bool carries_dfs_headers = false;

  bool operator==(const PacketDescriptor&) const = default;
};

std::vector<PacketDescriptor> packetize(const DfsHeader& dfs,
                                        const WriteRequestHeader& wrh,
                                        std::uint64_t data_len,
                                        std::uint32_t mtu);

}  // namespace simdfs::wire
