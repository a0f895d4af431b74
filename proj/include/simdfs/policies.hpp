#pragma once

#include <map>
#include <random>
#include <span>

#include "simdfs/auth.hpp"
#include "simdfs/gf256.hpp"
#include "simdfs/netsim.hpp"
#include "simdfs/pspin.hpp"
#include "simdfs/rscodec.hpp"
#include "simdfs/wire.hpp"

namespace simdfs::policies {

using netsim::TimePs;

constexpr std::uint32_t kDfsContextId = 0xDF5;

struct InvalidRank : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Forwarding targets of one node in the broadcast schedule: at most the tree
// arity (1 for ring, 2 for pbt).
struct CoordArray {
  std::vector<wire::ReplicaCoordinate> coords;
  std::vector<std::uint8_t> ranks;

  std::size_t size() const { return coords.size(); }
};

// replicas holds the k-1 downstream coordinates indexed by virtual rank - 1.
CoordArray compute_children(wire::ReplicationStrategy strategy,
                            int virtual_rank,
                            std::span<const wire::ReplicaCoordinate> replicas,
                            int k);

enum class AckMode {
  kPrimary,    // client completes on the primary's acknowledgment
  kFullChain,  // primary acknowledges only after the whole chain flushed
};

// Request/message id conventions. A global request id carries the issuing
// client node in its upper bits; message ids derive from the greq id plus a
// stream code so every hop can recover the request a control packet refers
// to.
inline std::uint64_t make_greq(std::uint32_t client_node, std::uint32_t seq) {
  return (static_cast<std::uint64_t>(client_node) << 32) | seq;
}
inline std::uint32_t greq_client(std::uint64_t greq) {
  return static_cast<std::uint32_t>(greq >> 32);
}
inline std::uint64_t make_message_id(std::uint64_t greq, std::uint32_t stream) {
  return (greq << 10) | stream;
}
inline std::uint64_t message_greq(std::uint64_t message_id) {
  return message_id >> 10;
}
// Stream codes: 0..k-1 client chunk messages, 64+rank replication forwards,
// 128 + j*m + p intermediate parity streams, 1023 the parity-side ACK.
constexpr std::uint32_t kStreamForwardBase = 64;
constexpr std::uint32_t kStreamParityBase = 128;
constexpr std::uint32_t kStreamParityAck = 1023;

// Storage addresses pack an object id in the upper 32 bits.
inline std::uint64_t object_of(std::uint64_t storage_addr) {
  return storage_addr >> 32;
}
inline std::uint64_t offset_of(std::uint64_t storage_addr) {
  return storage_addr & 0xFFFFFFFFull;
}

struct PolicyConfig {
  pspin::PspinConfig pspin;
  pspin::PipelineCosts pipeline;
  pspin::HandlerCostTable costs = pspin::HandlerCostTable::defaults();
  AckMode ack_mode = AckMode::kFullChain;
  std::uint32_t context_id = kDfsContextId;
};

// The offloaded DFS data-plane policy of one storage node: request
// authentication, replication forwarding, and streaming erasure coding,
// executed as header/payload/completion handlers on the node's NIC.
class StorageNodePolicy : public pspin::DfsHandlers {
 public:
  StorageNodePolicy(netsim::Engine& engine, std::uint32_t node,
                    const PolicyConfig& cfg, const auth::KeyStore& keystore,
                    const gf256::Tables& gf);

  pspin::Nic& nic() { return nic_; }
  std::uint32_t node() const { return node_; }

  pspin::HandlerResult on_header(const wire::Packet& pkt, TimePs now) override;
  pspin::HandlerResult on_payload(const wire::Packet& pkt, TimePs now) override;
  pspin::HandlerResult on_completion(const wire::Packet& pkt,
                                     TimePs now) override;
  void on_completion_done(const wire::Packet& pkt, TimePs end) override;
  void on_control(const wire::Packet& pkt, TimePs arrival) override;

  // ingest accounting for goodput measurements
  std::uint64_t payload_bytes_stored() const { return stored_bytes_; }
  TimePs first_rx() const { return first_rx_; }
  TimePs last_store() const { return last_store_; }
  std::uint64_t unknown_drops() const { return unknown_drops_; }
  std::uint64_t nacks_sent() const { return nacks_sent_; }
  std::uint64_t fallback_aggregations() const { return fallback_packets_; }

 private:
  const rs::EncodingMatrix& matrix(std::uint8_t k, std::uint8_t m);
  pspin::PolicyClass class_for(const pspin::RequestEntry& entry) const;
  std::uint64_t offset_for_seq(const pspin::RequestEntry& entry,
                               std::uint32_t seq) const;
  wire::Packet make_control(wire::Opcode op, std::uint32_t dst,
                            std::uint64_t message_id) const;
  void maybe_complete(pspin::RequestEntry& entry, TimePs now);
  void record_store(TimePs completion, std::uint64_t bytes);
  std::uint64_t packet_count_for(const pspin::RequestEntry& entry) const;

  netsim::Engine& engine_;
  std::uint32_t node_;
  PolicyConfig cfg_;
  const auth::KeyStore& keystore_;
  const gf256::Tables& gf_;
  pspin::Nic nic_;

  std::map<std::pair<std::uint8_t, std::uint8_t>, rs::EncodingMatrix> matrices_;
  // message (src, id) -> greq binding established by the header handler
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::uint64_t> msg_greq_;
  // host-side aggregation buffers used when the accumulator pool is dry
  std::map<std::pair<std::uint64_t, std::uint64_t>,
           std::pair<std::vector<std::uint8_t>, std::uint32_t>>
      fallback_accs_;

  std::uint64_t stored_bytes_ = 0;
  TimePs first_rx_ = 0;
  bool saw_rx_ = false;
  TimePs last_store_ = 0;
  std::uint64_t unknown_drops_ = 0;
  std::uint64_t nacks_sent_ = 0;
  std::uint64_t fallback_packets_ = 0;
};

// Client endpoint: issues writes, paces packet emission through its own host
// channel and egress port, and tracks ACK/NACK completion.
class Client {
 public:
  Client(netsim::Engine& engine, std::uint32_t node,
         const auth::KeyStore& keystore, std::uint64_t seed);

  struct WriteOptions {
    std::uint64_t size = 0;
    bool interleave = true;
    // Emit only the first N packets of each message (client-failure tests).
    std::uint32_t stop_after_packets = 0xFFFFFFFF;
    std::uint64_t cap_expiry_ns = ~0ull;
    std::uint8_t cap_rights = auth::kWrite;
    bool tamper_mac = false;
  };

  std::uint64_t write_plain(const wire::ReplicaCoordinate& target,
                            const WriteOptions& opt);
  std::uint64_t write_replicated(wire::ReplicationStrategy strategy,
                                 const std::vector<wire::ReplicaCoordinate>& coords,
                                 const WriteOptions& opt);
  std::uint64_t write_ec(std::uint8_t k, std::uint8_t m,
                         const std::vector<wire::ReplicaCoordinate>& data_coords,
                         const std::vector<wire::ReplicaCoordinate>& parity_coords,
                         const WriteOptions& opt);

  void on_packet(const wire::Packet& pkt, TimePs arrival);

  struct WriteState {
    TimePs issued = 0;
    TimePs completed = 0;
    bool done = false;
    bool denied = false;
    std::vector<std::uint8_t> data;
    std::uint64_t target_addr = 0;
    std::uint64_t chunk_len = 0;  // EC only
  };

  const WriteState& result(std::uint64_t greq) const {
    return writes_.at(greq);
  }
  std::uint64_t denials() const { return denials_; }
  bool all_done() const;
  std::uint32_t node() const { return node_; }

 private:
  struct Pending {
    std::uint64_t greq = 0;
    std::uint32_t remaining = 1;
  };
  struct MessagePlan {
    std::uint32_t dst = 0;
    std::vector<wire::Packet> packets;
  };

  std::uint64_t next_greq();
  std::vector<std::uint8_t> make_payload(std::uint64_t size);
  auth::Capability make_cap(std::uint64_t addr, std::uint64_t len,
                            const WriteOptions& opt);
  void emit(std::vector<MessagePlan> msgs, bool interleave,
            std::uint32_t stop_after);
  void register_ack(std::uint64_t message_id, std::uint64_t greq,
                    std::uint32_t count);
  void complete_if_done(std::uint64_t greq, TimePs when, bool denied);

  netsim::Engine& engine_;
  std::uint32_t node_;
  const auth::KeyStore& keystore_;
  std::mt19937_64 rng_;
  std::uint32_t seq_ = 0;
  std::map<std::uint64_t, WriteState> writes_;
  std::map<std::uint64_t, Pending> pending_acks_;
  std::map<std::uint64_t, std::uint32_t> outstanding_;  // greq -> acks left
  std::uint64_t denials_ = 0;
};

}  // namespace simdfs::policies
