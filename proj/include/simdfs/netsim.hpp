#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "simdfs/wire.hpp"

namespace simdfs::netsim {

// Simulation time in integer picoseconds. Link serialization at the supported
// line rates and the cycle-derived handler costs are all exact in ps, which
// keeps traces bit-reproducible.
using TimePs = std::uint64_t;
constexpr TimePs kPsPerNs = 1000;

inline constexpr TimePs from_ns(double ns) {
  return static_cast<TimePs>(ns * static_cast<double>(kPsPerNs) + 0.5);
}
inline constexpr double to_ns(TimePs t) {
  return static_cast<double>(t) / static_cast<double>(kPsPerNs);
}

struct TimeTravel : std::logic_error {
  using std::logic_error::logic_error;
};
struct LivelockGuard : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinkConfig {
  double bandwidth_bps = 400e9;
  TimePs latency = 20 * kPsPerNs;
  std::uint32_t mtu_bytes = 2048;
};

// Host-side cost model. The node's host interface (DMA engine plus memory
// path) is a serial byte channel at memcpy_bandwidth_bps; dma_setup and the
// PCIe round trip are latency added on top, they do not occupy the channel.
struct HostModel {
  TimePs pcie_rtt = 400 * kPsPerNs;
  double memcpy_bandwidth_bps = 400e9;
  TimePs rpc_sw_overhead = 500 * kPsPerNs;
  TimePs dma_setup = 100 * kPsPerNs;
};

struct EngineConfig {
  LinkConfig link;
  HostModel host;
  std::uint64_t max_events = 200'000'000;
  bool record_trace = false;
};

enum class TraceKind : std::uint8_t {
  kPacketSend,
  kPacketArrive,
  kHandlerStart,
  kHandlerEnd,
  kHostWrite,
  kHostEvent,
  kCleanup,
};

std::string to_string(TraceKind k);

struct TraceRecord {
  TimePs time = 0;
  TraceKind kind = TraceKind::kPacketSend;
  std::uint32_t node = 0;
  std::uint64_t id = 0;     // message or request id
  std::int64_t aux = 0;     // kind-specific (HPU, packet seq, ...)
  double value = 0;         // kind-specific (duration ns, bytes, ...)
};

struct HostEvent {
  TimePs time = 0;
  std::string kind;
  std::uint64_t detail = 0;
};

// Sparse per-node byte store for integrity checks. Overlapping writes
// overwrite; reads of unwritten ranges return zeroes.
class SegmentStore {
 public:
  void write(std::uint64_t addr, std::span<const std::uint8_t> bytes);
  std::vector<std::uint8_t> read(std::uint64_t addr, std::size_t len) const;
  std::uint64_t bytes_written() const { return bytes_written_; }

 private:
  std::map<std::uint64_t, std::vector<std::uint8_t>> segments_;
  std::uint64_t bytes_written_ = 0;
};

// Deterministic single-threaded event engine. Events run in (time, seq)
// order with seq assigned at schedule time. Each node owns one egress port
// (serial wire resource) and one host channel (serial PCIe/memory resource).
class Engine {
 public:
  explicit Engine(EngineConfig cfg = {});

  const EngineConfig& config() const { return cfg_; }

  std::uint32_t add_node();
  std::size_t node_count() const { return nodes_.size(); }

  TimePs now() const { return now_; }
  void schedule(TimePs t, std::function<void()> fn);
  void schedule_in(TimePs dt, std::function<void()> fn) {
    schedule(now_ + dt, std::move(fn));
  }
  TimePs run_until_idle();

  using PacketSink =
      std::function<void(wire::Packet, TimePs /*arrival*/)>;
  void set_receiver(std::uint32_t node, PacketSink sink);

  TimePs ser_time(std::uint64_t wire_bytes) const;
  TimePs channel_time(std::uint32_t node, std::uint64_t bytes) const;

  // Enqueue a packet on src's egress port at the current time. Returns the
  // serialization-done time; the packet arrives at dst one link latency
  // later, in FIFO order per link.
  TimePs send_packet(std::uint32_t src, std::uint32_t dst, wire::Packet pkt);
  void send_message(std::uint32_t src, std::uint32_t dst,
                    std::vector<wire::Packet> packets);

  // Write bytes towards the node's storage target. Returns the completion
  // time (flush semantics include the PCIe round trip). Bytes are recorded in
  // the node's segment store.
  TimePs host_write(std::uint32_t node, std::uint64_t addr,
                    std::span<const std::uint8_t> bytes, bool flush);
  // Same cost model without touching storage (staging copies, fallbacks).
  TimePs host_write_delay(std::uint32_t node, std::uint64_t nbytes, bool flush);
  // Streaming landing into a host buffer: occupies the channel only.
  TimePs host_land(std::uint32_t node, std::uint64_t nbytes);
  // NIC-initiated read from host memory; completion is when the data is on
  // the NIC (one full round trip of latency plus the byte time).
  TimePs host_read(std::uint32_t node, std::uint64_t nbytes);

  SegmentStore& storage(std::uint32_t node);
  const SegmentStore& storage(std::uint32_t node) const;

  void emit_host_event(std::uint32_t node, std::string kind,
                       std::uint64_t detail);
  const std::vector<HostEvent>& host_events(std::uint32_t node) const;

  std::uint64_t packets_sent() const { return packets_sent_; }
  std::uint64_t bytes_injected(std::uint32_t src, std::uint32_t dst) const;
  std::uint64_t bytes_delivered(std::uint32_t src, std::uint32_t dst) const;

  void trace(TraceKind kind, std::uint32_t node, std::uint64_t id,
             std::int64_t aux, double value);
  const std::vector<TraceRecord>& trace_log() const { return trace_; }
  std::uint64_t trace_hash() const;

 private:
  struct Node {
    TimePs egress_free = 0;
    TimePs channel_free = 0;
    PacketSink sink;
    SegmentStore store;
    std::vector<HostEvent> events;
  };
  struct Event {
    TimePs t;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };
  struct LinkStats {
    std::uint64_t injected_bytes = 0;
    std::uint64_t delivered_bytes = 0;
    TimePs last_arrival = 0;
  };

  TimePs channel_grant(std::uint32_t node, std::uint64_t bytes);

  EngineConfig cfg_;
  TimePs now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t processed_ = 0;
  std::uint64_t packets_sent_ = 0;
  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::vector<Node> nodes_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, LinkStats> links_;
  std::vector<TraceRecord> trace_;
};

}  // namespace simdfs::netsim
