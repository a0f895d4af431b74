#include "simdfs/policies.hpp"

#include <algorithm>
#include <cassert>

namespace simdfs::policies {

using pspin::HandlerResult;
using pspin::PolicyClass;
using pspin::RequestEntry;

CoordArray compute_children(wire::ReplicationStrategy strategy,
                            int virtual_rank,
                            std::span<const wire::ReplicaCoordinate> replicas,
                            int k) {
  if (virtual_rank < 0 || virtual_rank >= k) {
    throw InvalidRank("policies: virtual rank must be < k");
  }
  CoordArray out;
  auto add = [&](int child) {
    if (child < k) {
      out.coords.push_back(replicas[child - 1]);
      out.ranks.push_back(static_cast<std::uint8_t>(child));
    }
  };
  if (strategy == wire::ReplicationStrategy::kRing) {
    add(virtual_rank + 1);
  } else {
    add(2 * virtual_rank + 1);
    add(2 * virtual_rank + 2);
  }
  return out;
}

StorageNodePolicy::StorageNodePolicy(netsim::Engine& engine, std::uint32_t node,
                                     const PolicyConfig& cfg,
                                     const auth::KeyStore& keystore,
                                     const gf256::Tables& gf)
    : engine_(engine),
      node_(node),
      cfg_(cfg),
      keystore_(keystore),
      gf_(gf),
      nic_(engine, node, cfg.pspin, cfg.pipeline, cfg.costs, cfg.context_id) {
  nic_.attach(this);
  engine_.set_receiver(node, [this](wire::Packet pkt, TimePs arrival) {
    nic_.on_packet(std::move(pkt), arrival);
  });
}

const rs::EncodingMatrix& StorageNodePolicy::matrix(std::uint8_t k,
                                                    std::uint8_t m) {
  auto it = matrices_.find({k, m});
  if (it == matrices_.end()) {
    it = matrices_.emplace(std::make_pair(k, m),
                           rs::EncodingMatrix::build(k, m, gf_))
             .first;
  }
  return it->second;
}

pspin::PolicyClass StorageNodePolicy::class_for(const RequestEntry& e) const {
  switch (e.resiliency.tag) {
    case wire::ResiliencyTag::kNone:
      return PolicyClass::kPlainWrite;
    case wire::ResiliencyTag::kReplication:
      return e.resiliency.strategy == wire::ReplicationStrategy::kRing
                 ? PolicyClass::kRingForward
                 : PolicyClass::kPbtForward;
    case wire::ResiliencyTag::kEc:
      return e.resiliency.role == wire::EcRole::kData ? PolicyClass::kEcData
                                                      : PolicyClass::kEcParity;
  }
  return PolicyClass::kPlainWrite;
}

std::uint64_t StorageNodePolicy::offset_for_seq(const RequestEntry& e,
                                                std::uint32_t seq) const {
  if (seq == 0) return 0;
  return e.first_payload_cap + static_cast<std::uint64_t>(seq - 1) * e.cont_payload_cap;
}

std::uint64_t StorageNodePolicy::packet_count_for(const RequestEntry& e) const {
  if (e.write_len <= e.first_payload_cap) return 1;
  const std::uint64_t rest = e.write_len - e.first_payload_cap;
  return 1 + (rest + e.cont_payload_cap - 1) / e.cont_payload_cap;
}

wire::Packet StorageNodePolicy::make_control(wire::Opcode op, std::uint32_t dst,
                                             std::uint64_t message_id) const {
  wire::Packet pkt;
  pkt.rdma.context_id = cfg_.context_id;
  pkt.rdma.message_id = message_id;
  pkt.rdma.opcode = static_cast<std::uint8_t>(op);
  pkt.rdma.flags = wire::flags::kFirst | wire::flags::kLast;
  pkt.rdma.src_node = node_;
  pkt.rdma.dst_node = dst;
  return pkt;
}

void StorageNodePolicy::record_store(TimePs completion, std::uint64_t bytes) {
  stored_bytes_ += bytes;
  last_store_ = std::max(last_store_, completion);
}

HandlerResult StorageNodePolicy::on_header(const wire::Packet& pkt,
                                           TimePs now) {
  HandlerResult result;
  if (!saw_rx_) {
    saw_rx_ = true;
    first_rx_ = now;
  }
  if (!pkt.dfs || !pkt.wrh) return result;  // read path not served

  const auto& dfs = *pkt.dfs;
  const auto& wrh = *pkt.wrh;
  const auto& res = wrh.resiliency;
  const std::uint64_t greq = dfs.greq_id;

  msg_greq_[{pkt.rdma.src_node, pkt.rdma.message_id}] = greq;

  const bool is_ec = res.tag == wire::ResiliencyTag::kEc;
  const bool is_parity = is_ec && res.role == wire::EcRole::kParity;
  result.ec_m = is_ec ? res.m : 0;
  switch (res.tag) {
    case wire::ResiliencyTag::kNone:
      result.policy = PolicyClass::kPlainWrite;
      break;
    case wire::ResiliencyTag::kReplication:
      result.policy = res.strategy == wire::ReplicationStrategy::kRing
                          ? PolicyClass::kRingForward
                          : PolicyClass::kPbtForward;
      break;
    case wire::ResiliencyTag::kEc:
      result.policy =
          is_parity ? PolicyClass::kEcParity : PolicyClass::kEcData;
      break;
  }

  auto& table = nic_.request_table();
  RequestEntry* entry = table.find(greq);
  if (entry != nullptr) {
    // Later intermediate-parity streams of an aggregation family attach to
    // the existing entry.
    nic_.note_activity(greq, now);
    return result;
  }

  entry = table.alloc(greq);
  if (entry == nullptr) {
    // Lack of descriptor space: deny, the client will retry later.
    ++nacks_sent_;
    result.control_sends.emplace_back(
        pkt.rdma.src_node,
        make_control(wire::Opcode::kNack, pkt.rdma.src_node,
                     pkt.rdma.message_id));
    return result;
  }

  entry->resiliency = res;
  entry->storage_addr = wrh.target_storage_addr;
  entry->write_len = wrh.write_len;
  entry->reply_node = pkt.rdma.src_node;
  entry->reply_message_id = pkt.rdma.message_id;
  const std::uint32_t mtu = engine_.config().link.mtu_bytes;
  entry->first_payload_cap = mtu - wire::RdmaHeader::kWireSize -
                             wire::DfsHeader::kWireSize - wrh.wire_size();
  entry->cont_payload_cap = mtu - wire::RdmaHeader::kWireSize;

  const auto verdict = keystore_.validate(
      dfs.capability, auth::kWrite, object_of(wrh.target_storage_addr),
      offset_of(wrh.target_storage_addr), wrh.write_len,
      static_cast<std::uint64_t>(netsim::to_ns(now)));
  if (!verdict.accepted) {
    entry->accept = false;
    ++nacks_sent_;
    result.control_sends.emplace_back(
        pkt.rdma.src_node,
        make_control(wire::Opcode::kNack, pkt.rdma.src_node,
                     pkt.rdma.message_id));
    nic_.note_activity(greq, now);
    return result;
  }
  entry->accept = true;

  if (res.tag == wire::ResiliencyTag::kReplication) {
    const int k = static_cast<int>(res.replicas.size()) + 1;
    CoordArray children =
        compute_children(res.strategy, res.virtual_rank, res.replicas, k);
    entry->coord_array = std::move(children.coords);
    entry->child_ranks = std::move(children.ranks);
    entry->pending_child_acks =
        static_cast<std::uint32_t>(entry->coord_array.size());
  } else if (is_parity) {
    entry->expected_streams = res.k;
    entry->pending_indices = packet_count_for(*entry);
    entry->reply_node = greq_client(greq);
    entry->reply_message_id = make_message_id(greq, kStreamParityAck);
    // Reserve the first accumulator; an empty pool falls the whole family
    // back to host-side aggregation.
    auto& pool = nic_.accumulators();
    if (pool.find(greq, 0) == nullptr && pool.alloc(greq, 0) == nullptr) {
      entry->host_fallback = true;
    }
  }
  nic_.note_activity(greq, now);
  return result;
}

HandlerResult StorageNodePolicy::on_payload(const wire::Packet& pkt,
                                            TimePs now) {
  HandlerResult result;
  if (!saw_rx_) {
    saw_rx_ = true;
    first_rx_ = now;
  }

  auto bind = msg_greq_.find({pkt.rdma.src_node, pkt.rdma.message_id});
  if (bind == msg_greq_.end()) {
    ++unknown_drops_;
    engine_.emit_host_event(node_, "unknown_request", pkt.rdma.message_id);
    return result;
  }
  const std::uint64_t greq = bind->second;
  RequestEntry* entry = nic_.request_table().find(greq);
  if (entry == nullptr) {
    ++unknown_drops_;
    engine_.emit_host_event(node_, "unknown_request", greq);
    return result;
  }
  nic_.note_activity(greq, now);
  if (!entry->accept) return result;  // packet dropped

  const auto& res = entry->resiliency;
  const std::uint32_t seq = pkt.rdma.packet_seq;
  const std::uint64_t len = pkt.payload.size();
  entry->bytes_received += len;

  const bool is_parity = res.tag == wire::ResiliencyTag::kEc &&
                         res.role == wire::EcRole::kParity;
  if (is_parity) {
    result.policy = PolicyClass::kEcParity;
    result.ec_m = res.m;
    auto& pool = nic_.accumulators();
    auto* acc = pool.find(greq, seq);
    // An aggregation sequence that started on the host stays there.
    const bool index_fallback = fallback_accs_.count({greq, seq}) > 0;
    if (acc == nullptr && !entry->host_fallback && !index_fallback) {
      acc = pool.alloc(greq, seq);
    }

    if (acc == nullptr) {
      // CPU-based aggregation fallback: the payload crosses to host memory
      // and is combined there (one landing pass plus one read-modify pass).
      ++fallback_packets_;
      engine_.host_write_delay(node_, 2 * len, false);
      auto& slot = fallback_accs_[{greq, seq}];
      if (slot.first.empty()) slot.first.assign(len, 0);
      rs::aggregate(std::span<std::uint8_t>(slot.first.data(), len),
                    std::span<const std::uint8_t>(pkt.payload));
      if (++slot.second == res.k) {
        const std::uint64_t off = offset_for_seq(*entry, seq);
        const TimePs done = engine_.host_write(
            node_, entry->storage_addr + off,
            std::span<const std::uint8_t>(slot.first), true);
        entry->flush_ready = std::max(entry->flush_ready, done);
        record_store(done, len);
        fallback_accs_.erase({greq, seq});
        if (entry->pending_indices > 0) --entry->pending_indices;
      }
      return result;
    }

    rs::aggregate(std::span<std::uint8_t>(acc->buf.data(), len),
                  std::span<const std::uint8_t>(pkt.payload));
    if (++acc->arrivals == res.k) {
      const std::uint64_t off = offset_for_seq(*entry, seq);
      const TimePs done = engine_.host_write(
          node_, entry->storage_addr + off,
          std::span<const std::uint8_t>(acc->buf.data(), len), true);
      entry->flush_ready = std::max(entry->flush_ready, done);
      record_store(done, len);
      pool.release(acc);
      if (entry->pending_indices > 0) --entry->pending_indices;
    }
    return result;
  }

  // Data-holding roles write the payload towards storage immediately; the
  // flush completes in the background while the handler keeps running.
  const std::uint64_t off = offset_for_seq(*entry, seq);
  const TimePs done =
      engine_.host_write(node_, entry->storage_addr + off,
                         std::span<const std::uint8_t>(pkt.payload), true);
  entry->flush_ready = std::max(entry->flush_ready, done);
  record_store(done, len);

  if (res.tag == wire::ResiliencyTag::kNone) {
    result.policy = PolicyClass::kPlainWrite;
    return result;
  }

  if (res.tag == wire::ResiliencyTag::kReplication) {
    if (entry->coord_array.empty()) {
      result.policy = PolicyClass::kPlainWrite;
      return result;
    }
    result.policy = res.strategy == wire::ReplicationStrategy::kRing
                        ? PolicyClass::kRingForward
                        : PolicyClass::kPbtForward;
    for (std::size_t c = 0; c < entry->coord_array.size(); ++c) {
      const auto& coord = entry->coord_array[c];
      wire::Packet fwd = pkt;
      fwd.rdma.src_node = node_;
      fwd.rdma.dst_node = coord.node;
      fwd.rdma.message_id =
          make_message_id(greq, kStreamForwardBase + entry->child_ranks[c]);
      if (fwd.wrh) {
        fwd.wrh->target_storage_addr = coord.storage_addr;
        fwd.wrh->resiliency.virtual_rank = entry->child_ranks[c];
      }
      result.forwards.emplace_back(coord.node, std::move(fwd));
    }
    return result;
  }

  // EC data role: emit one scaled intermediate-parity packet per parity node.
  result.policy = PolicyClass::kEcData;
  result.ec_m = res.m;
  const auto& mat = matrix(res.k, res.m);
  for (std::uint8_t p = 0; p < res.m; ++p) {
    const auto& coord = res.parity_coords[p];
    wire::Packet fwd;
    fwd.rdma = pkt.rdma;
    fwd.rdma.src_node = node_;
    fwd.rdma.dst_node = coord.node;
    fwd.rdma.message_id = make_message_id(
        greq, kStreamParityBase + res.data_node_index * res.m + p);
    fwd.payload =
        rs::intermediate_parity(mat, gf_, res.data_node_index, p, pkt.payload);
    fwd.rdma.payload_len = static_cast<std::uint16_t>(fwd.payload.size());
    if (pkt.has_flag(wire::flags::kFirst)) {
      wire::DfsHeader dfs = *pkt.dfs;
      fwd.dfs = dfs;
      wire::WriteRequestHeader wrh;
      wrh.target_storage_addr = coord.storage_addr;
      wrh.write_len = entry->write_len;
      wrh.resiliency = wire::ResiliencyDescriptor::ec(
          res.k, res.m, wire::EcRole::kParity, res.data_node_index,
          res.parity_coords);
      fwd.wrh = wrh;
    }
    result.forwards.emplace_back(coord.node, std::move(fwd));
  }
  return result;
}

HandlerResult StorageNodePolicy::on_completion(const wire::Packet& pkt,
                                               TimePs now) {
  HandlerResult result;
  auto bind = msg_greq_.find({pkt.rdma.src_node, pkt.rdma.message_id});
  if (bind == msg_greq_.end()) return result;
  const std::uint64_t greq = bind->second;
  RequestEntry* entry = nic_.request_table().find(greq);
  if (entry == nullptr) return result;

  if (!entry->accept) {
    // Rejected request: the earlier NACK was the only reply.
    nic_.request_table().free(greq);
    return result;
  }
  nic_.note_activity(greq, now);

  const auto& res = entry->resiliency;
  result.ec_m = res.tag == wire::ResiliencyTag::kEc ? res.m : 0;
  if (res.tag == wire::ResiliencyTag::kReplication &&
      !entry->coord_array.empty()) {
    result.policy = res.strategy == wire::ReplicationStrategy::kRing
                        ? PolicyClass::kRingForward
                        : PolicyClass::kPbtForward;
  } else if (res.tag == wire::ResiliencyTag::kEc) {
    result.policy = res.role == wire::EcRole::kData ? PolicyClass::kEcData
                                                    : PolicyClass::kEcParity;
  } else {
    result.policy = PolicyClass::kPlainWrite;
  }
  return result;
}

void StorageNodePolicy::on_completion_done(const wire::Packet& pkt,
                                           TimePs end) {
  auto bind = msg_greq_.find({pkt.rdma.src_node, pkt.rdma.message_id});
  if (bind == msg_greq_.end()) return;
  const std::uint64_t greq = bind->second;
  msg_greq_.erase(bind);

  RequestEntry* entry = nic_.request_table().find(greq);
  if (entry == nullptr || !entry->accept) return;

  const auto& res = entry->resiliency;
  if (res.tag == wire::ResiliencyTag::kEc &&
      res.role == wire::EcRole::kParity) {
    if (++entry->streams_done == entry->expected_streams) {
      entry->ch_done = true;
    }
  } else {
    entry->ch_done = true;
  }
  maybe_complete(*entry, end);
}

void StorageNodePolicy::maybe_complete(RequestEntry& entry, TimePs now) {
  if (!entry.ch_done || entry.completed) return;
  if (entry.resiliency.tag == wire::ResiliencyTag::kEc &&
      entry.resiliency.role == wire::EcRole::kParity &&
      entry.pending_indices > 0) {
    return;
  }
  if (entry.resiliency.tag == wire::ResiliencyTag::kReplication &&
      cfg_.ack_mode == AckMode::kFullChain && entry.pending_child_acks > 0) {
    return;
  }
  entry.completed = true;

  // The acknowledgment leaves only once every flush for this request
  // reported completion.
  const TimePs ack_at = std::max(now, entry.flush_ready);
  const std::uint64_t greq = entry.greq_id;
  const std::uint32_t dst = entry.reply_node;
  const std::uint64_t msgid = entry.reply_message_id;
  engine_.schedule(ack_at, [this, greq, dst, msgid]() {
    engine_.send_packet(node_, dst, make_control(wire::Opcode::kAck, dst, msgid));
    nic_.request_table().free(greq);
  });
}

void StorageNodePolicy::on_control(const wire::Packet& pkt, TimePs arrival) {
  const std::uint64_t greq = message_greq(pkt.rdma.message_id);
  RequestEntry* entry = nic_.request_table().find(greq);
  if (entry == nullptr) return;
  if (entry->pending_child_acks > 0) --entry->pending_child_acks;
  maybe_complete(*entry, arrival);
}

Client::Client(netsim::Engine& engine, std::uint32_t node,
               const auth::KeyStore& keystore, std::uint64_t seed)
    : engine_(engine), node_(node), keystore_(keystore), rng_(seed) {
  engine_.set_receiver(node, [this](wire::Packet pkt, TimePs arrival) {
    on_packet(pkt, arrival);
  });
}

std::uint64_t Client::next_greq() { return make_greq(node_, seq_++); }

std::vector<std::uint8_t> Client::make_payload(std::uint64_t size) {
  std::vector<std::uint8_t> data(size);
  for (auto& b : data) b = static_cast<std::uint8_t>(rng_());
  return data;
}

auth::Capability Client::make_cap(std::uint64_t addr, std::uint64_t len,
                                  const WriteOptions& opt) {
  auth::Capability cap = keystore_.issue(
      node_, object_of(addr), offset_of(addr), std::max<std::uint64_t>(len, 1),
      opt.cap_rights, opt.cap_expiry_ns);
  if (opt.tamper_mac) cap.mac[0] ^= 0x01;
  return cap;
}

void Client::register_ack(std::uint64_t message_id, std::uint64_t greq,
                          std::uint32_t count) {
  pending_acks_[message_id] = Pending{greq, count};
  outstanding_[greq] += count;
}

namespace {

std::vector<wire::Packet> build_message(std::uint32_t context_id,
                                        std::uint32_t src, std::uint32_t dst,
                                        std::uint64_t message_id,
                                        const wire::DfsHeader& dfs,
                                        const wire::WriteRequestHeader& wrh,
                                        std::span<const std::uint8_t> data,
                                        std::uint32_t mtu) {
  const auto descs = wire::packetize(dfs, wrh, data.size(), mtu);
  std::vector<wire::Packet> out;
  out.reserve(descs.size());
  std::uint64_t off = 0;
  for (const auto& d : descs) {
    wire::Packet pkt;
    pkt.rdma.context_id = context_id;
    pkt.rdma.message_id = message_id;
    pkt.rdma.packet_seq = d.seq;
    pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kWrite);
    pkt.rdma.flags = d.flags;
    pkt.rdma.src_node = src;
    pkt.rdma.dst_node = dst;
    pkt.rdma.payload_len = static_cast<std::uint16_t>(d.payload_len);
    if (d.carries_dfs_headers) {
      pkt.dfs = dfs;
      pkt.wrh = wrh;
    }
    pkt.payload.assign(data.begin() + off, data.begin() + off + d.payload_len);
    off += d.payload_len;
    out.push_back(std::move(pkt));
  }
  return out;
}

}  // namespace

void Client::emit(std::vector<MessagePlan> msgs, bool interleave,
                  std::uint32_t stop_after) {
  std::vector<std::pair<std::uint32_t, wire::Packet>> order;
  if (interleave) {
    std::size_t max_pkts = 0;
    for (const auto& m : msgs) max_pkts = std::max(max_pkts, m.packets.size());
    for (std::size_t i = 0; i < max_pkts; ++i) {
      for (auto& m : msgs) {
        if (i < m.packets.size() && i < stop_after) {
          order.emplace_back(m.dst, std::move(m.packets[i]));
        }
      }
    }
  } else {
    for (auto& m : msgs) {
      for (std::size_t i = 0; i < m.packets.size() && i < stop_after; ++i) {
        order.emplace_back(m.dst, std::move(m.packets[i]));
      }
    }
  }

  for (auto& [dst, pkt] : order) {
    const std::uint64_t len = pkt.payload.size();
    const TimePs avail =
        len == 0 ? engine_.now() : engine_.host_read(node_, len);
    engine_.schedule(avail, [this, dst, pkt = std::move(pkt)]() mutable {
      engine_.send_packet(node_, dst, std::move(pkt));
    });
  }
}

std::uint64_t Client::write_plain(const wire::ReplicaCoordinate& target,
                                  const WriteOptions& opt) {
  const std::uint64_t greq = next_greq();
  auto& st = writes_[greq];
  st.issued = engine_.now();
  st.data = make_payload(opt.size);
  st.target_addr = target.storage_addr;

  wire::DfsHeader dfs;
  dfs.greq_id = greq;
  dfs.capability = make_cap(target.storage_addr, opt.size, opt);
  wire::WriteRequestHeader wrh;
  wrh.target_storage_addr = target.storage_addr;
  wrh.write_len = opt.size;
  wrh.resiliency = wire::ResiliencyDescriptor::none();

  const std::uint64_t msgid = make_message_id(greq, 0);
  register_ack(msgid, greq, 1);
  std::vector<MessagePlan> msgs;
  msgs.push_back(
      {target.node,
       build_message(kDfsContextId, node_, target.node, msgid, dfs, wrh,
                     st.data, engine_.config().link.mtu_bytes)});
  emit(std::move(msgs), false, opt.stop_after_packets);
  return greq;
}

std::uint64_t Client::write_replicated(
    wire::ReplicationStrategy strategy,
    const std::vector<wire::ReplicaCoordinate>& coords,
    const WriteOptions& opt) {
  const std::uint64_t greq = next_greq();
  auto& st = writes_[greq];
  st.issued = engine_.now();
  st.data = make_payload(opt.size);
  st.target_addr = coords.at(0).storage_addr;

  wire::DfsHeader dfs;
  dfs.greq_id = greq;
  dfs.capability = make_cap(coords[0].storage_addr, opt.size, opt);
  wire::WriteRequestHeader wrh;
  wrh.target_storage_addr = coords[0].storage_addr;
  wrh.write_len = opt.size;
  wrh.resiliency = wire::ResiliencyDescriptor::replication(
      strategy, 0,
      std::vector<wire::ReplicaCoordinate>(coords.begin() + 1, coords.end()));

  const std::uint64_t msgid = make_message_id(greq, 0);
  register_ack(msgid, greq, 1);
  std::vector<MessagePlan> msgs;
  msgs.push_back(
      {coords[0].node,
       build_message(kDfsContextId, node_, coords[0].node, msgid, dfs, wrh,
                     st.data, engine_.config().link.mtu_bytes)});
  emit(std::move(msgs), false, opt.stop_after_packets);
  return greq;
}

std::uint64_t Client::write_ec(
    std::uint8_t k, std::uint8_t m,
    const std::vector<wire::ReplicaCoordinate>& data_coords,
    const std::vector<wire::ReplicaCoordinate>& parity_coords,
    const WriteOptions& opt) {
  const std::uint64_t greq = next_greq();
  auto& st = writes_[greq];
  st.issued = engine_.now();
  st.data = make_payload(opt.size);
  st.target_addr = data_coords.at(0).storage_addr;
  const std::uint64_t chunk = (opt.size + k - 1) / k;
  st.chunk_len = chunk;

  std::vector<MessagePlan> msgs;
  for (std::uint8_t j = 0; j < k; ++j) {
    // Equal-size zero-padded chunks so packet index i aligns across streams.
    std::vector<std::uint8_t> chunk_data(chunk, 0);
    const std::uint64_t begin = static_cast<std::uint64_t>(j) * chunk;
    if (begin < st.data.size()) {
      const std::uint64_t n = std::min<std::uint64_t>(chunk, st.data.size() - begin);
      std::copy_n(st.data.begin() + begin, n, chunk_data.begin());
    }
    wire::DfsHeader dfs;
    dfs.greq_id = greq;
    dfs.capability = make_cap(data_coords[j].storage_addr, opt.size, opt);
    wire::WriteRequestHeader wrh;
    wrh.target_storage_addr = data_coords[j].storage_addr;
    wrh.write_len = chunk;
    wrh.resiliency = wire::ResiliencyDescriptor::ec(k, m, wire::EcRole::kData,
                                                    j, parity_coords);
    const std::uint64_t msgid = make_message_id(greq, j);
    register_ack(msgid, greq, 1);
    msgs.push_back({data_coords[j].node,
                    build_message(kDfsContextId, node_, data_coords[j].node,
                                  msgid, dfs, wrh, chunk_data,
                                  engine_.config().link.mtu_bytes)});
  }
  if (m > 0) {
    register_ack(make_message_id(greq, kStreamParityAck), greq, m);
  }
  emit(std::move(msgs), opt.interleave, opt.stop_after_packets);
  return greq;
}

void Client::complete_if_done(std::uint64_t greq, TimePs when, bool denied) {
  auto it = writes_.find(greq);
  if (it == writes_.end() || it->second.done) return;
  if (denied) {
    it->second.done = true;
    it->second.denied = true;
    it->second.completed = when;
    ++denials_;
    return;
  }
  auto out = outstanding_.find(greq);
  if (out != outstanding_.end() && out->second == 0) {
    it->second.done = true;
    it->second.completed = when;
  }
}

void Client::on_packet(const wire::Packet& pkt, TimePs arrival) {
  const auto op = pkt.rdma.opcode;
  if (op != static_cast<std::uint8_t>(wire::Opcode::kAck) &&
      op != static_cast<std::uint8_t>(wire::Opcode::kNack)) {
    return;
  }
  auto it = pending_acks_.find(pkt.rdma.message_id);
  if (it == pending_acks_.end()) return;
  const std::uint64_t greq = it->second.greq;
  if (op == static_cast<std::uint8_t>(wire::Opcode::kNack)) {
    complete_if_done(greq, arrival, true);
    return;
  }
  if (it->second.remaining > 0) {
    --it->second.remaining;
    auto& left = outstanding_[greq];
    if (left > 0) --left;
    if (it->second.remaining == 0) pending_acks_.erase(it);
  }
  complete_if_done(greq, arrival, false);
}

bool Client::all_done() const {
  for (const auto& [greq, st] : writes_) {
    if (!st.done) return false;
  }
  return true;
}

}  // namespace simdfs::policies
