#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "simdfs/netsim.hpp"
#include "simdfs/wire.hpp"

namespace simdfs::pspin {

using netsim::TimePs;

struct PspinConfig {
  std::uint32_t clusters = 4;
  std::uint32_t hpus_per_cluster = 8;
  double clock_hz = 1e9;
  std::uint64_t l1_bytes_per_cluster = 1ull << 20;
  std::uint64_t l2_bytes = 4ull << 20;
  std::uint64_t dfs_state_reserved_bytes = 2ull << 20;
  std::uint32_t descriptor_bytes = 77;
  std::uint32_t accumulator_pool_entries = 256;
  std::uint64_t cleanup_timeout_ns = 10'000'000;

  std::uint32_t total_hpus() const { return clusters * hpus_per_cluster; }
  // L1 + L2 minus the DFS-wide state reservation, available for descriptors.
  std::uint64_t state_budget_bytes() const {
    const std::uint64_t total =
        static_cast<std::uint64_t>(clusters) * l1_bytes_per_cluster + l2_bytes;
    return total > dfs_state_reserved_bytes ? total - dfs_state_reserved_bytes
                                            : 0;
  }
};

// Capacity and budget arithmetic.
std::uint64_t capacity(const PspinConfig& cfg);
std::uint64_t required_memory(const PspinConfig& cfg,
                              std::uint64_t n_concurrent_writes);
double handler_budget_ns(std::uint32_t mtu_bytes, double line_rate_bps,
                         std::uint32_t n_hpus);
std::uint64_t hpus_needed(double avg_handler_ns, std::uint32_t mtu_bytes,
                          double line_rate_bps);

// Per-packet ingestion pipeline: packet buffer copy and L1 copy scale
// linearly with the packet size from their reference-size cost.
struct PipelineCosts {
  double pkt_buffer_copy_cycles = 32;
  double cluster_schedule_cycles = 2;
  double l1_copy_cycles = 43;
  double hpu_dispatch_ns = 1;
  std::uint32_t reference_bytes = 2048;

  TimePs ingress_delay(std::uint64_t wire_bytes, double clock_hz) const;
};

enum class HandlerKind : std::uint8_t {
  kHeader = 0,
  kPayload = 1,
  kCompletion = 2,
};

enum class PolicyClass : std::uint8_t {
  kPlainWrite = 0,
  kRingForward = 1,
  kPbtForward = 2,
  kEcData = 3,
  kEcParity = 4,
};

// duration cycles = instructions / ipc, instructions = fixed + per_byte *
// payload bytes; rounded to whole nanoseconds at the configured clock.
struct HandlerCost {
  double fixed_instructions = 0;
  double per_byte_instructions = 0;
  double ipc = 1.0;

  TimePs compute_time(std::uint64_t payload_bytes, double clock_hz) const;
};

class HandlerCostTable {
 public:
  static HandlerCostTable defaults();

  HandlerCost cost(PolicyClass policy, HandlerKind kind, std::uint8_t ec_m) const;
  void set(PolicyClass policy, HandlerKind kind, std::uint8_t ec_m,
           HandlerCost cost);

 private:
  // keyed by (policy, kind, m); m is 0 except for EC payload/completion
  // handlers whose calibration depends on the parity count.
  std::map<std::tuple<std::uint8_t, std::uint8_t, std::uint8_t>, HandlerCost> entries_;
};

struct RequestEntry {
  std::uint64_t greq_id = 0;
  bool accept = false;
  wire::ResiliencyDescriptor resiliency;
  // coord_array: forwarding targets resolved by the header handler (at most
  // the broadcast tree arity) plus the matching child virtual ranks.
  std::vector<wire::ReplicaCoordinate> coord_array;
  std::vector<std::uint8_t> child_ranks;
  std::uint64_t storage_addr = 0;
  std::uint64_t write_len = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t first_payload_cap = 0;
  std::uint64_t cont_payload_cap = 0;
  bool host_fallback = false;
  TimePs last_activity = 0;

  // completion bookkeeping
  std::uint32_t reply_node = 0;
  std::uint64_t reply_message_id = 0;
  std::uint32_t pending_child_acks = 0;
  bool ch_done = false;
  bool completed = false;
  TimePs flush_ready = 0;
  // EC parity aggregation
  std::uint32_t expected_streams = 0;
  std::uint32_t streams_done = 0;
  std::uint64_t pending_indices = 0;

  bool cleanup_armed = false;
};

// greq_id -> descriptor map with byte accounting against the NIC state
// budget. Allocation is denied when one more descriptor would not fit.
class RequestTable {
 public:
  RequestTable(std::uint64_t budget_bytes, std::uint32_t descriptor_bytes);

  RequestEntry* alloc(std::uint64_t greq_id);  // nullptr when denied or dup
  RequestEntry* find(std::uint64_t greq_id);
  bool free(std::uint64_t greq_id);

  std::uint64_t charged_bytes() const { return charged_; }
  std::uint64_t capacity_entries() const {
    return budget_ / descriptor_bytes_;
  }
  std::size_t occupied() const { return entries_.size(); }

  std::map<std::uint64_t, RequestEntry>& entries() { return entries_; }

 private:
  std::uint64_t budget_;
  std::uint32_t descriptor_bytes_;
  std::uint64_t charged_ = 0;
  std::map<std::uint64_t, RequestEntry> entries_;
};

// Fixed pool of payload-sized accumulators hashed by (aggregation family,
// packet index). An accumulator serves exactly one aggregation sequence and
// returns to the free list once the k-th contribution arrived.
class AccumulatorPool {
 public:
  AccumulatorPool(std::uint32_t entries, std::uint32_t buffer_bytes);

  struct Accumulator {
    std::vector<std::uint8_t> buf;
    std::uint32_t arrivals = 0;
    std::uint64_t family = 0;
    std::uint64_t index = 0;
    bool in_use = false;
  };

  Accumulator* find(std::uint64_t family, std::uint64_t index);
  Accumulator* alloc(std::uint64_t family, std::uint64_t index);
  void release(Accumulator* acc);
  void release_family(std::uint64_t family);

  std::uint32_t free_entries() const {
    return static_cast<std::uint32_t>(free_.size());
  }
  std::uint32_t in_use() const {
    return static_cast<std::uint32_t>(pool_.size() - free_.size());
  }
  std::uint64_t charged_bytes() const {
    return static_cast<std::uint64_t>(in_use()) * buffer_bytes_;
  }

 private:
  std::uint32_t buffer_bytes_;
  std::vector<Accumulator> pool_;
  std::vector<std::uint32_t> free_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::uint32_t> map_;
};

// Effects of one handler invocation, reported back by the DFS policy.
// Forwards occupy the HPU until their serialization completes; control sends
// (ACK/NACK) leave at handler end without blocking.
struct HandlerResult {
  PolicyClass policy = PolicyClass::kPlainWrite;
  std::uint8_t ec_m = 0;
  std::vector<std::pair<std::uint32_t, wire::Packet>> forwards;
  std::vector<std::pair<std::uint32_t, wire::Packet>> control_sends;
};

class DfsHandlers {
 public:
  virtual ~DfsHandlers() = default;
  virtual HandlerResult on_header(const wire::Packet& pkt, TimePs now) = 0;
  virtual HandlerResult on_payload(const wire::Packet& pkt, TimePs now) = 0;
  virtual HandlerResult on_completion(const wire::Packet& pkt, TimePs now) = 0;
  virtual void on_completion_done(const wire::Packet&, TimePs) {}
  virtual void on_control(const wire::Packet&, TimePs) {}
  virtual void on_cleanup_expired(std::uint64_t, TimePs) {}
};

struct HandlerStats {
  std::uint64_t count = 0;
  double sum_ns = 0;
  double max_ns = 0;

  double mean_ns() const { return count == 0 ? 0 : sum_ns / count; }
  void record(double ns) {
    ++count;
    sum_ns += ns;
    if (ns > max_ns) max_ns = ns;
  }
};

// The on-NIC accelerator: ingestion pipeline, per-cluster FIFO dispatch onto
// HPUs, per-message handler ordering (header before payloads, completion
// last), request-table lifecycle and cleanup timers.
class Nic {
 public:
  Nic(netsim::Engine& engine, std::uint32_t node, PspinConfig cfg,
      PipelineCosts pipeline, HandlerCostTable costs,
      std::uint32_t context_id);

  void attach(DfsHandlers* handlers) { handlers_ = handlers; }

  // Receiver entry point; wired as the node's packet sink.
  void on_packet(wire::Packet pkt, TimePs arrival);

  RequestTable& request_table() { return table_; }
  AccumulatorPool& accumulators() { return pool_; }
  const PspinConfig& config() const { return cfg_; }
  netsim::Engine& engine() { return engine_; }
  std::uint32_t node() const { return node_; }

  HandlerStats stats(HandlerKind kind) const {
    return stats_[static_cast<int>(kind)];
  }
  HandlerStats stats_for(PolicyClass policy, HandlerKind kind) const;
  void reset_stats();

  std::uint32_t busy_hpus() const { return busy_hpus_; }
  std::uint64_t steered_to_host() const { return steered_; }

  // Marks request activity and arms the expiry timer.
  void note_activity(std::uint64_t greq_id, TimePs now);
  // Frees entries inactive for longer than the cleanup timeout. Returns the
  // expired ids; each expiry emits one host event.
  std::vector<std::uint64_t> cleanup_scan(TimePs now);

 private:
  struct MessageKey {
    std::uint32_t src;
    std::uint64_t message_id;
    bool operator<(const MessageKey& o) const {
      return src != o.src ? src < o.src : message_id < o.message_id;
    }
  };
  struct MessageState {
    bool hh_done = false;
    std::uint64_t arrived = 0;
    std::uint64_t phs_done = 0;
    std::uint64_t total = 0;  // known once the LAST-flagged packet is seen
    bool last_arrived = false;
    bool ch_issued = false;
    wire::Packet last_pkt;
  };
  struct WorkItem {
    HandlerKind kind;
    wire::Packet pkt;
    MessageKey msg;
  };
  struct Cluster {
    std::deque<WorkItem> queue;
    std::vector<bool> hpu_busy;
  };

  void enqueue(std::uint32_t cluster, WorkItem item);
  void dispatch_all();
  void dispatch(std::uint32_t cluster_idx);
  bool eligible(const WorkItem& item) const;
  void start_handler(std::uint32_t cluster_idx, std::uint32_t hpu,
                     WorkItem item);
  void finish_handler(std::uint32_t cluster_idx, std::uint32_t hpu,
                      const WorkItem& item, PolicyClass policy, TimePs start,
                      TimePs end);
  void expire_check(std::uint64_t greq_id);
  bool expire_entry(std::uint64_t greq_id, TimePs now);

  netsim::Engine& engine_;
  std::uint32_t node_;
  PspinConfig cfg_;
  PipelineCosts pipeline_;
  HandlerCostTable costs_;
  std::uint32_t context_id_;
  DfsHandlers* handlers_ = nullptr;

  RequestTable table_;
  AccumulatorPool pool_;
  std::vector<Cluster> clusters_;
  std::map<MessageKey, MessageState> messages_;
  std::uint32_t rr_cluster_ = 0;
  std::uint32_t busy_hpus_ = 0;
  std::uint64_t steered_ = 0;
  HandlerStats stats_[3];
  std::map<std::pair<std::uint8_t, std::uint8_t>, HandlerStats> policy_stats_;
};

}  // namespace simdfs::pspin
