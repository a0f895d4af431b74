#include "simdfs/netsim.hpp"

#include <cmath>
#include <cstring>

namespace simdfs::netsim {

std::string to_string(TraceKind k) {
  switch (k) {
    case TraceKind::kPacketSend:
      return "packet_send";
    case TraceKind::kPacketArrive:
      return "packet_arrive";
    case TraceKind::kHandlerStart:
      return "handler_start";
    case TraceKind::kHandlerEnd:
      return "handler_end";
    case TraceKind::kHostWrite:
      return "host_write";
    case TraceKind::kHostEvent:
      return "host_event";
    case TraceKind::kCleanup:
      return "cleanup";
  }
  return "unknown";
}

void SegmentStore::write(std::uint64_t addr, std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return;
  bytes_written_ += bytes.size();
  const std::uint64_t end = addr + bytes.size();

  // Trim or split existing segments that overlap [addr, end).
  auto it = segments_.lower_bound(addr);
  if (it != segments_.begin()) {
    auto prev = std::prev(it);
    const std::uint64_t pend = prev->first + prev->second.size();
    if (pend > addr) {
      if (pend > end) {
        std::vector<std::uint8_t> tail(prev->second.begin() + (end - prev->first),
                                       prev->second.end());
        segments_[end] = std::move(tail);
      }
      prev->second.resize(addr - prev->first);
      if (prev->second.empty()) segments_.erase(prev);
    }
  }
  it = segments_.lower_bound(addr);
  while (it != segments_.end() && it->first < end) {
    const std::uint64_t send = it->first + it->second.size();
    if (send > end) {
      std::vector<std::uint8_t> tail(it->second.begin() + (end - it->first),
                                     it->second.end());
      it = segments_.erase(it);
      segments_[end] = std::move(tail);
      break;
    }
    it = segments_.erase(it);
  }
  segments_[addr] = std::vector<std::uint8_t>(bytes.begin(), bytes.end());
}

std::vector<std::uint8_t> SegmentStore::read(std::uint64_t addr,
                                             std::size_t len) const {
  std::vector<std::uint8_t> out(len, 0);
  if (len == 0) return out;
  const std::uint64_t end = addr + len;
  auto it = segments_.upper_bound(addr);
  if (it != segments_.begin()) --it;
  for (; it != segments_.end() && it->first < end; ++it) {
    const std::uint64_t sbeg = it->first;
    const std::uint64_t send = sbeg + it->second.size();
    const std::uint64_t cbeg = std::max(sbeg, addr);
    const std::uint64_t cend = std::min(send, end);
    if (cbeg >= cend) continue;
    std::memcpy(out.data() + (cbeg - addr), it->second.data() + (cbeg - sbeg),
                cend - cbeg);
  }
  return out;
}

Engine::Engine(EngineConfig cfg) : cfg_(cfg) {}

std::uint32_t Engine::add_node() {
  nodes_.emplace_back();
  return static_cast<std::uint32_t>(nodes_.size() - 1);
}

void Engine::schedule(TimePs t, std::function<void()> fn) {
  if (t < now_) throw TimeTravel("netsim: event scheduled in the past");
  queue_.push(Event{t, next_seq_++, std::move(fn)});
}

TimePs Engine::run_until_idle() {
  while (!queue_.empty()) {
    if (++processed_ > cfg_.max_events) {
      throw LivelockGuard("netsim: event cap exceeded");
    }
    Event ev = std::move(const_cast<Event&>(queue_.top()));
    queue_.pop();
    now_ = ev.t;
    ev.fn();
  }
  return now_;
}

void Engine::set_receiver(std::uint32_t node, PacketSink sink) {
  nodes_.at(node).sink = std::move(sink);
}

TimePs Engine::ser_time(std::uint64_t wire_bytes) const {
  const long double ps =
      static_cast<long double>(wire_bytes) * 8.0L * 1e12L / cfg_.link.bandwidth_bps;
  return static_cast<TimePs>(llroundl(ps));
}

TimePs Engine::channel_time(std::uint32_t, std::uint64_t bytes) const {
  const long double ps =
      static_cast<long double>(bytes) * 8.0L * 1e12L / cfg_.host.memcpy_bandwidth_bps;
  return static_cast<TimePs>(llroundl(ps));
}

TimePs Engine::send_packet(std::uint32_t src, std::uint32_t dst,
                           wire::Packet pkt) {
  const std::uint64_t bytes = pkt.wire_size();
  if (bytes > cfg_.link.mtu_bytes) {
    throw wire::OversizedPacket("netsim: packet exceeds link MTU");
  }
  Node& s = nodes_.at(src);
  const TimePs grant = std::max(now_, s.egress_free);
  const TimePs done = grant + ser_time(bytes);
  s.egress_free = done;
  const TimePs arrival = done + cfg_.link.latency;

  auto& link = links_[{src, dst}];
  link.injected_bytes += bytes;
  ++packets_sent_;
  if (cfg_.record_trace) {
    trace(TraceKind::kPacketSend, src, pkt.rdma.message_id,
          pkt.rdma.packet_seq, static_cast<double>(bytes));
  }

  schedule(arrival, [this, src, dst, arrival, bytes,
                     pkt = std::move(pkt)]() mutable {
    auto& l = links_[{src, dst}];
    l.delivered_bytes += bytes;
    l.last_arrival = arrival;
    if (cfg_.record_trace) {
      trace(TraceKind::kPacketArrive, dst, pkt.rdma.message_id,
            pkt.rdma.packet_seq, static_cast<double>(bytes));
    }
    Node& d = nodes_.at(dst);
    if (d.sink) d.sink(std::move(pkt), arrival);
  });
  return done;
}

void Engine::send_message(std::uint32_t src, std::uint32_t dst,
                          std::vector<wire::Packet> packets) {
  for (auto& p : packets) send_packet(src, dst, std::move(p));
}

TimePs Engine::channel_grant(std::uint32_t node, std::uint64_t bytes) {
  Node& n = nodes_.at(node);
  const TimePs grant = std::max(now_, n.channel_free);
  n.channel_free = grant + channel_time(node, bytes);
  return n.channel_free;
}

TimePs Engine::host_write(std::uint32_t node, std::uint64_t addr,
                          std::span<const std::uint8_t> bytes, bool flush) {
  nodes_.at(node).store.write(addr, bytes);
  const TimePs t = host_write_delay(node, bytes.size(), flush);
  if (cfg_.record_trace) {
    trace(TraceKind::kHostWrite, node, addr, flush ? 1 : 0,
          static_cast<double>(bytes.size()));
  }
  return t;
}

TimePs Engine::host_write_delay(std::uint32_t node, std::uint64_t nbytes,
                                bool flush) {
  const TimePs busy_end = channel_grant(node, nbytes);
  return busy_end + cfg_.host.dma_setup + (flush ? cfg_.host.pcie_rtt : 0);
}

TimePs Engine::host_land(std::uint32_t node, std::uint64_t nbytes) {
  return channel_grant(node, nbytes);
}

TimePs Engine::host_read(std::uint32_t node, std::uint64_t nbytes) {
  const TimePs busy_end = channel_grant(node, nbytes);
  return busy_end + cfg_.host.dma_setup + cfg_.host.pcie_rtt;
}

SegmentStore& Engine::storage(std::uint32_t node) {
  return nodes_.at(node).store;
}
const SegmentStore& Engine::storage(std::uint32_t node) const {
  return nodes_.at(node).store;
}

void Engine::emit_host_event(std::uint32_t node, std::string kind,
                             std::uint64_t detail) {
  if (cfg_.record_trace) {
    trace(TraceKind::kHostEvent, node, detail, 0, 0);
  }
  nodes_.at(node).events.push_back(HostEvent{now_, std::move(kind), detail});
}

const std::vector<HostEvent>& Engine::host_events(std::uint32_t node) const {
  return nodes_.at(node).events;
}

std::uint64_t Engine::bytes_injected(std::uint32_t src,
                                     std::uint32_t dst) const {
  auto it = links_.find({src, dst});
  return it == links_.end() ? 0 : it->second.injected_bytes;
}

std::uint64_t Engine::bytes_delivered(std::uint32_t src,
                                      std::uint32_t dst) const {
  auto it = links_.find({src, dst});
  return it == links_.end() ? 0 : it->second.delivered_bytes;
}

void Engine::trace(TraceKind kind, std::uint32_t node, std::uint64_t id,
                   std::int64_t aux, double value) {
  trace_.push_back(TraceRecord{now_, kind, node, id, aux, value});
}

std::uint64_t Engine::trace_hash() const {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 1099511628211ULL;
    }
  };
  for (const auto& r : trace_) {
    mix(r.time);
    mix(static_cast<std::uint64_t>(r.kind));
    mix(r.node);
    mix(r.id);
    mix(static_cast<std::uint64_t>(r.aux));
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(r.value));
    std::memcpy(&bits, &r.value, sizeof(bits));
    mix(bits);
  }
  return h;
}

}  // namespace simdfs::netsim
