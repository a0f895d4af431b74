#include "simdfs/wire.hpp"

#include <cstring>

namespace simdfs::wire {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return take(1)[0]; }
  std::uint16_t u16() {
    auto b = take(2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    if (in_.size() - pos_ < n) throw Truncated("wire: truncated input");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void encode_coord(Writer& w, const ReplicaCoordinate& c) {
  w.u32(c.node);
  w.u64(c.storage_addr);
}

ReplicaCoordinate decode_coord(Reader& r) {
  ReplicaCoordinate c;
  c.node = r.u32();
  c.storage_addr = r.u64();
  return c;
}

void check_descriptor(const ResiliencyDescriptor& d) {
  switch (d.tag) {
    case ResiliencyTag::kNone:
      return;
    case ResiliencyTag::kReplication:
      if (d.replicas.size() > ResiliencyDescriptor::kMaxReplicas) {
        throw InvalidDescriptor("wire: too many replica coordinates");
      }
      if (d.virtual_rank >= d.replicas.size() + 1) {
        throw InvalidDescriptor("wire: virtual rank out of range");
      }
      if (d.strategy != ReplicationStrategy::kRing &&
          d.strategy != ReplicationStrategy::kPbt) {
        throw InvalidDescriptor("wire: unknown replication strategy");
      }
      return;
    case ResiliencyTag::kEc:
      if (d.k < 1 || d.k > 32 || d.m > ResiliencyDescriptor::kMaxParity ||
          d.k + d.m > 255) {
        throw InvalidDescriptor("wire: EC dimensions out of range");
      }
      if (d.parity_coords.size() != d.m) {
        throw InvalidDescriptor("wire: parity coordinate count must equal m");
      }
      if (d.role != EcRole::kData && d.role != EcRole::kParity) {
        throw InvalidDescriptor("wire: unknown EC role");
      }
      if (d.data_node_index >= d.k) {
        throw InvalidDescriptor("wire: data node index out of range");
      }
      return;
  }
  throw InvalidDescriptor("wire: unknown resiliency tag");
}

void encode_descriptor(Writer& w, const ResiliencyDescriptor& d) {
  w.u8(static_cast<std::uint8_t>(d.tag));
  if (d.tag == ResiliencyTag::kReplication) {
    w.u8(static_cast<std::uint8_t>(d.strategy));
    w.u8(d.virtual_rank);
    w.u8(static_cast<std::uint8_t>(d.replicas.size()));
    for (const auto& c : d.replicas) encode_coord(w, c);
  } else if (d.tag == ResiliencyTag::kEc) {
    w.u8(d.k);
    w.u8(d.m);
    w.u8(static_cast<std::uint8_t>(d.role));
    w.u8(d.data_node_index);
    for (const auto& c : d.parity_coords) encode_coord(w, c);
  }
}

ResiliencyDescriptor decode_descriptor(Reader& r) {
  ResiliencyDescriptor d;
  const std::uint8_t tag = r.u8();
  if (tag > 2) throw InvalidDescriptor("wire: unknown resiliency tag");
  d.tag = static_cast<ResiliencyTag>(tag);
  if (d.tag == ResiliencyTag::kReplication) {
    d.strategy = static_cast<ReplicationStrategy>(r.u8());
    d.virtual_rank = r.u8();
    const std::uint8_t count = r.u8();
    d.replicas.reserve(count);
    for (int i = 0; i < count; ++i) d.replicas.push_back(decode_coord(r));
  } else if (d.tag == ResiliencyTag::kEc) {
    d.k = r.u8();
    d.m = r.u8();
    d.role = static_cast<EcRole>(r.u8());
    d.data_node_index = r.u8();
    d.parity_coords.reserve(d.m);
    for (int i = 0; i < d.m; ++i) d.parity_coords.push_back(decode_coord(r));
  }
  check_descriptor(d);
  return d;
}

}  // namespace

ResiliencyDescriptor ResiliencyDescriptor::none() { return {}; }

ResiliencyDescriptor ResiliencyDescriptor::replication(
    ReplicationStrategy s, std::uint8_t virtual_rank,
    std::vector<ReplicaCoordinate> replicas) {
  ResiliencyDescriptor d;
  d.tag = ResiliencyTag::kReplication;
  d.strategy = s;
  d.virtual_rank = virtual_rank;
  d.replicas = std::move(replicas);
  return d;
}

ResiliencyDescriptor ResiliencyDescriptor::ec(
    std::uint8_t k, std::uint8_t m, EcRole role, std::uint8_t data_node_index,
    std::vector<ReplicaCoordinate> parity_coords) {
  ResiliencyDescriptor d;
  d.tag = ResiliencyTag::kEc;
  d.k = k;
  d.m = m;
  d.role = role;
  d.data_node_index = data_node_index;
  d.parity_coords = std::move(parity_coords);
  return d;
}

std::size_t ResiliencyDescriptor::wire_size() const {
  switch (tag) {
    case ResiliencyTag::kNone:
      return 1;
    case ResiliencyTag::kReplication:
      return 1 + 3 + ReplicaCoordinate::kWireSize * replicas.size();
    case ResiliencyTag::kEc:
      return 1 + 4 + ReplicaCoordinate::kWireSize * parity_coords.size();
  }
  return 1;
}

std::size_t Packet::wire_size() const {
  std::size_t n = RdmaHeader::kWireSize;
  if (dfs) n += DfsHeader::kWireSize;
  if (wrh) n += wrh->wire_size();
  if (rrh) n += ReadRequestHeader::kWireSize;
  return n + payload.size();
}

std::vector<std::uint8_t> encode_packet(const Packet& pkt, std::uint32_t mtu) {
  const auto op = pkt.rdma.opcode;
  if (op < 1 || op > 5) throw UnknownOpcode("wire: unknown opcode on encode");

  const bool first = pkt.has_flag(flags::kFirst);
  const bool want_dfs =
      first && (op == static_cast<std::uint8_t>(Opcode::kWrite) ||
                op == static_cast<std::uint8_t>(Opcode::kRead));
  const bool want_wrh =
      want_dfs && op == static_cast<std::uint8_t>(Opcode::kWrite);
  const bool want_rrh =
      want_dfs && op == static_cast<std::uint8_t>(Opcode::kRead);
  if (pkt.dfs.has_value() != want_dfs || pkt.wrh.has_value() != want_wrh ||
      pkt.rrh.has_value() != want_rrh) {
    throw InvalidDescriptor("wire: DFS header presence must match FIRST flag "
                            "and opcode");
  }
  if (pkt.payload.size() > 0xFFFF ||
      pkt.rdma.payload_len != pkt.payload.size()) {
    throw InvalidDescriptor("wire: payload_len does not match payload");
  }
  if (pkt.wrh) check_descriptor(pkt.wrh->resiliency);
  if (pkt.wire_size() > mtu) {
    throw OversizedPacket("wire: encoded packet exceeds MTU");
  }

  std::vector<std::uint8_t> out;
  out.reserve(pkt.wire_size());
  Writer w(out);
  w.u32(pkt.rdma.context_id);
  w.u64(pkt.rdma.message_id);
  w.u32(pkt.rdma.packet_seq);
  w.u8(pkt.rdma.opcode);
  w.u8(pkt.rdma.flags);
  w.u16(pkt.rdma.payload_len);
  w.u32(pkt.rdma.src_node);
  w.u32(pkt.rdma.dst_node);
  w.u32(0);  // reserved

  if (pkt.dfs) {
    w.u8(pkt.dfs->op_type);
    w.u64(pkt.dfs->greq_id);
    std::uint8_t cap[auth::Capability::kWireSize];
    auth::serialize(pkt.dfs->capability, cap);
    w.bytes(cap);
  }
  if (pkt.wrh) {
    w.u64(pkt.wrh->target_storage_addr);
    w.u64(pkt.wrh->write_len);
    encode_descriptor(w, pkt.wrh->resiliency);
  }
  if (pkt.rrh) {
    w.u64(pkt.rrh->source_storage_addr);
    w.u64(pkt.rrh->read_len);
  }
  w.bytes(pkt.payload);
  return out;
}

Packet decode_packet(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  Packet pkt;
  pkt.rdma.context_id = r.u32();
  pkt.rdma.message_id = r.u64();
  pkt.rdma.packet_seq = r.u32();
  pkt.rdma.opcode = r.u8();
  pkt.rdma.flags = r.u8();
  pkt.rdma.payload_len = r.u16();
  pkt.rdma.src_node = r.u32();
  pkt.rdma.dst_node = r.u32();
  r.take(4);  // reserved, ignored

  if (pkt.rdma.opcode < 1 || pkt.rdma.opcode > 5) {
    throw UnknownOpcode("wire: unknown opcode");
  }
  const bool first = pkt.has_flag(flags::kFirst);
  const bool is_write =
      pkt.rdma.opcode == static_cast<std::uint8_t>(Opcode::kWrite);
  const bool is_read =
      pkt.rdma.opcode == static_cast<std::uint8_t>(Opcode::kRead);
  if (first && (is_write || is_read)) {
    DfsHeader dfs;
    dfs.op_type = r.u8();
    dfs.greq_id = r.u64();
    dfs.capability = auth::deserialize(r.take(auth::Capability::kWireSize));
    pkt.dfs = dfs;
    if (is_write) {
      WriteRequestHeader wrh;
      wrh.target_storage_addr = r.u64();
      wrh.write_len = r.u64();
      wrh.resiliency = decode_descriptor(r);
      pkt.wrh = wrh;
    } else {
      ReadRequestHeader rrh;
      rrh.source_storage_addr = r.u64();
      rrh.read_len = r.u64();
      pkt.rrh = rrh;
    }
  }
  if (r.remaining() != pkt.rdma.payload_len) {
    throw Truncated("wire: payload length mismatch");
  }
  auto body = r.take(pkt.rdma.payload_len);
  pkt.payload.assign(body.begin(), body.end());
  return pkt;
}

std::vector<PacketDescriptor> packetize(const DfsHeader&,
                                        const WriteRequestHeader& wrh,
                                        std::uint64_t data_len,
                                        std::uint32_t mtu) {
  const std::size_t first_hdr =
      RdmaHeader::kWireSize + DfsHeader::kWireSize + wrh.wire_size();
  if (first_hdr > mtu) {
    throw HeaderTooLarge("wire: request headers exceed MTU");
  }
  const std::uint64_t first_cap = mtu - first_hdr;
  const std::uint64_t cont_cap = mtu - RdmaHeader::kWireSize;

  std::vector<PacketDescriptor> out;
  std::uint64_t remaining = data_len;
  std::uint32_t seq = 0;

  const std::uint64_t first_payload = std::min<std::uint64_t>(first_cap, remaining);
  out.push_back({seq++, flags::kFirst,
                 static_cast<std::uint32_t>(first_payload), true});
  remaining -= first_payload;
  while (remaining > 0) {
    const std::uint64_t n = std::min<std::uint64_t>(cont_cap, remaining);
    out.push_back({seq++, 0, static_cast<std::uint32_t>(n), false});
    remaining -= n;
  }
  out.back().flags |= flags::kLast;
  return out;
}

}  // namespace simdfs::wire
