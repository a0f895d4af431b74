#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "simdfs/wire.hpp"

using namespace simdfs;

namespace {

auth::Capability some_cap() {
  auth::KeyStore ks(auth::Key{});
  return ks.issue(3, 9, 0, 4096, auth::kWrite, 123456);
}

wire::Packet write_packet(wire::ResiliencyDescriptor res,
                          std::size_t payload_len) {
  wire::Packet pkt;
  pkt.rdma.context_id = 0xDF5;
  pkt.rdma.message_id = 0x1234;
  pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kWrite);
  pkt.rdma.flags = wire::flags::kFirst | wire::flags::kLast;
  pkt.rdma.payload_len = static_cast<std::uint16_t>(payload_len);
  pkt.rdma.src_node = 1;
  pkt.rdma.dst_node = 2;
  wire::DfsHeader dfs;
  dfs.greq_id = 0x77;
  dfs.capability = some_cap();
  pkt.dfs = dfs;
  wire::WriteRequestHeader wrh;
  wrh.target_storage_addr = 0xAA000000BBull;
  wrh.write_len = payload_len;
  wrh.resiliency = std::move(res);
  pkt.wrh = wrh;
  pkt.payload.assign(payload_len, 0x5C);
  return pkt;
}

std::mt19937_64 g_rng(2024);

wire::Packet random_packet() {
  wire::Packet pkt;
  pkt.rdma.context_id = static_cast<std::uint32_t>(g_rng());
  pkt.rdma.message_id = g_rng();
  pkt.rdma.packet_seq = static_cast<std::uint32_t>(g_rng() % 1000);
  pkt.rdma.src_node = static_cast<std::uint32_t>(g_rng());
  pkt.rdma.dst_node = static_cast<std::uint32_t>(g_rng());

  const int kind = static_cast<int>(g_rng() % 5);
  const std::size_t payload_len = g_rng() % 1024;
  pkt.rdma.payload_len = static_cast<std::uint16_t>(payload_len);
  pkt.payload.resize(payload_len);
  for (auto& b : pkt.payload) b = static_cast<std::uint8_t>(g_rng());

  switch (kind) {
    case 0: {  // plain write, first packet
      pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kWrite);
      pkt.rdma.flags = wire::flags::kFirst;
      wire::DfsHeader dfs;
      dfs.greq_id = g_rng();
      dfs.capability = some_cap();
      pkt.dfs = dfs;
      wire::WriteRequestHeader wrh;
      wrh.target_storage_addr = g_rng();
      wrh.write_len = g_rng() % (1 << 20);
      switch (g_rng() % 3) {
        case 0:
          wrh.resiliency = wire::ResiliencyDescriptor::none();
          break;
        case 1: {
          std::vector<wire::ReplicaCoordinate> reps(g_rng() % 5);
          for (auto& r : reps) {
            r = {static_cast<std::uint32_t>(g_rng()), g_rng()};
          }
          wrh.resiliency = wire::ResiliencyDescriptor::replication(
              g_rng() % 2 == 0 ? wire::ReplicationStrategy::kRing
                               : wire::ReplicationStrategy::kPbt,
              static_cast<std::uint8_t>(g_rng() % (reps.size() + 1)),
              std::move(reps));
          break;
        }
        default: {
          const std::uint8_t k = static_cast<std::uint8_t>(1 + g_rng() % 8);
          const std::uint8_t m = static_cast<std::uint8_t>(g_rng() % 4);
          std::vector<wire::ReplicaCoordinate> pc(m);
          for (auto& r : pc) {
            r = {static_cast<std::uint32_t>(g_rng()), g_rng()};
          }
          wrh.resiliency = wire::ResiliencyDescriptor::ec(
              k, m,
              g_rng() % 2 == 0 ? wire::EcRole::kData : wire::EcRole::kParity,
              static_cast<std::uint8_t>(g_rng() % k), std::move(pc));
        }
      }
      pkt.wrh = wrh;
      break;
    }
    case 1: {  // read request
      pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kRead);
      pkt.rdma.flags = wire::flags::kFirst | wire::flags::kLast;
      wire::DfsHeader dfs;
      dfs.op_type = static_cast<std::uint8_t>(wire::DfsOp::kRead);
      dfs.greq_id = g_rng();
      dfs.capability = some_cap();
      pkt.dfs = dfs;
      wire::ReadRequestHeader rrh;
      rrh.source_storage_addr = g_rng();
      rrh.read_len = g_rng();
      pkt.rrh = rrh;
      break;
    }
    case 2:  // continuation
      pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kWrite);
      pkt.rdma.flags = (g_rng() % 2) ? wire::flags::kLast : 0;
      break;
    case 3:  // ack/nack, header only
      pkt.rdma.opcode = static_cast<std::uint8_t>(
          g_rng() % 2 ? wire::Opcode::kAck : wire::Opcode::kNack);
      pkt.rdma.flags = wire::flags::kFirst | wire::flags::kLast;
      pkt.payload.clear();
      pkt.rdma.payload_len = 0;
      break;
    default:  // wqe config
      pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kWqeConfig);
      pkt.rdma.flags = wire::flags::kFirst | wire::flags::kLast;
      break;
  }
  return pkt;
}

}  // namespace

TEST_CASE("declared sizes") {
  CHECK(wire::RdmaHeader::kWireSize == 32);
  CHECK(wire::DfsHeader::kWireSize == 62);
  CHECK(auth::Capability::kWireSize == 53);
  CHECK(wire::ReplicaCoordinate::kWireSize == 12);
}

TEST_CASE("raw write with no resiliency encodes to 111 bytes") {
  const auto pkt = write_packet(wire::ResiliencyDescriptor::none(), 0);
  const auto bytes = wire::encode_packet(pkt);
  CHECK(bytes.size() == 32 + 62 + 17);
  CHECK(bytes.size() == 111);
}

TEST_CASE("replication WRH with 3 coordinates is 56 bytes") {
  std::vector<wire::ReplicaCoordinate> reps(3);
  const auto desc = wire::ResiliencyDescriptor::replication(
      wire::ReplicationStrategy::kRing, 0, reps);
  wire::WriteRequestHeader wrh;
  wrh.resiliency = desc;
  CHECK(wrh.wire_size() == 56);
  const auto pkt = write_packet(desc, 0);
  CHECK(wire::encode_packet(pkt).size() == 32 + 62 + 56);
}

TEST_CASE("oversized packet rejected at the MTU boundary") {
  auto pkt = write_packet(wire::ResiliencyDescriptor::none(), 2048 - 111);
  CHECK(wire::encode_packet(pkt).size() == 2048);
  auto big = write_packet(wire::ResiliencyDescriptor::none(), 2048 - 111 + 1);
  CHECK_THROWS_AS(wire::encode_packet(big), wire::OversizedPacket);
}

TEST_CASE("decode errors") {
  std::vector<std::uint8_t> short_input(31, 0);
  CHECK_THROWS_AS(wire::decode_packet(short_input), wire::Truncated);

  auto bytes = wire::encode_packet(write_packet(wire::ResiliencyDescriptor::none(), 4));
  bytes[16] = 99;  // opcode field
  CHECK_THROWS_AS(wire::decode_packet(bytes), wire::UnknownOpcode);

  auto bytes2 = wire::encode_packet(write_packet(wire::ResiliencyDescriptor::none(), 4));
  bytes2[32 + 62 + 16] = 7;  // resiliency tag
  CHECK_THROWS_AS(wire::decode_packet(bytes2), wire::InvalidDescriptor);

  auto bytes3 = wire::encode_packet(write_packet(wire::ResiliencyDescriptor::none(), 4));
  bytes3.pop_back();
  CHECK_THROWS_AS(wire::decode_packet(bytes3), wire::Truncated);
}

TEST_CASE("descriptor invariants enforced on encode") {
  std::vector<wire::ReplicaCoordinate> too_many(17);
  auto d = wire::ResiliencyDescriptor::replication(
      wire::ReplicationStrategy::kRing, 0, too_many);
  CHECK_THROWS_AS(wire::encode_packet(write_packet(d, 0)),
                  wire::InvalidDescriptor);

  auto bad_rank = wire::ResiliencyDescriptor::replication(
      wire::ReplicationStrategy::kPbt, 4,
      std::vector<wire::ReplicaCoordinate>(3));
  CHECK_THROWS_AS(wire::encode_packet(write_packet(bad_rank, 0)),
                  wire::InvalidDescriptor);

  auto bad_parity = wire::ResiliencyDescriptor::ec(
      3, 2, wire::EcRole::kData, 0, std::vector<wire::ReplicaCoordinate>(1));
  CHECK_THROWS_AS(wire::encode_packet(write_packet(bad_parity, 0)),
                  wire::InvalidDescriptor);
}

TEST_CASE("roundtrip property over randomized packets") {
  for (int i = 0; i < 2000; ++i) {
    const auto pkt = random_packet();
    const auto bytes = wire::encode_packet(pkt, 4096);
    const auto back = wire::decode_packet(bytes);
    REQUIRE(back == pkt);
  }
}

TEST_CASE("header bound: every legal descriptor fits 2048 with margin for 1500") {
  // Exhaustive over the replica-count and parity caps.
  for (std::size_t n = 0; n <= 16; ++n) {
    std::vector<wire::ReplicaCoordinate> reps(n);
    wire::WriteRequestHeader wrh;
    wrh.resiliency = wire::ResiliencyDescriptor::replication(
        wire::ReplicationStrategy::kRing, 0, reps);
    const auto total = 32 + 62 + wrh.wire_size();
    CHECK(total <= 1500);
    CHECK(total <= 2048);
  }
  for (std::size_t m = 0; m <= 8; ++m) {
    std::vector<wire::ReplicaCoordinate> pc(m);
    wire::WriteRequestHeader wrh;
    wrh.resiliency = wire::ResiliencyDescriptor::ec(
        32, static_cast<std::uint8_t>(m), wire::EcRole::kData, 0, pc);
    const auto total = 32 + 62 + wrh.wire_size();
    CHECK(total <= 1500);
    CHECK(total <= 2048);
  }
}

TEST_CASE("packetize: single packet cases") {
  wire::DfsHeader dfs;
  wire::WriteRequestHeader wrh;  // tag NONE, 17 bytes

  const auto one = wire::packetize(dfs, wrh, 1024, 2048);
  REQUIRE(one.size() == 1);
  CHECK(one[0].flags == (wire::flags::kFirst | wire::flags::kLast));
  CHECK(one[0].payload_len == 1024);
  CHECK(one[0].carries_dfs_headers);

  const auto zero = wire::packetize(dfs, wrh, 0, 2048);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].flags == (wire::flags::kFirst | wire::flags::kLast));
  CHECK(zero[0].payload_len == 0);
}

TEST_CASE("packetize: multi-packet layout from the header arithmetic") {
  wire::DfsHeader dfs;
  wire::WriteRequestHeader wrh;
  const auto descs = wire::packetize(dfs, wrh, 8192, 2048);
  REQUIRE(descs.size() == 5);
  CHECK(descs[0].payload_len == 1937);  // 2048 - 32 - 62 - 17
  CHECK(descs[1].payload_len == 2016);
  CHECK(descs[2].payload_len == 2016);
  CHECK(descs[3].payload_len == 2016);
  CHECK(descs[4].payload_len == 207);
  CHECK(descs[0].flags == wire::flags::kFirst);
  CHECK(descs[4].flags == wire::flags::kLast);
}

TEST_CASE("packetize conservation property") {
  std::mt19937_64 rng(31337);
  wire::DfsHeader dfs;
  for (int i = 0; i < 500; ++i) {
    wire::WriteRequestHeader wrh;
    if (rng() % 2) {
      std::vector<wire::ReplicaCoordinate> reps(rng() % 17);
      wrh.resiliency = wire::ResiliencyDescriptor::replication(
          wire::ReplicationStrategy::kRing, 0, reps);
    }
    const std::uint64_t data_len = rng() % 100000;
    const std::uint32_t mtu = 1500 + static_cast<std::uint32_t>(rng() % 8000);
    const auto descs = wire::packetize(dfs, wrh, data_len, mtu);

    std::uint64_t sum = 0;
    int firsts = 0, lasts = 0;
    for (std::size_t d = 0; d < descs.size(); ++d) {
      sum += descs[d].payload_len;
      if (descs[d].flags & wire::flags::kFirst) ++firsts;
      if (descs[d].flags & wire::flags::kLast) ++lasts;
      CHECK(descs[d].carries_dfs_headers == (d == 0));
      CHECK(descs[d].seq == d);
      const std::uint64_t header =
          d == 0 ? 32 + 62 + wrh.wire_size() : 32;
      CHECK(header + descs[d].payload_len <= mtu);
    }
    CHECK(sum == data_len);
    CHECK(firsts == 1);
    CHECK(lasts == 1);
  }
}

TEST_CASE("packetize: headers larger than the MTU are rejected") {
  wire::DfsHeader dfs;
  wire::WriteRequestHeader wrh;
  CHECK_THROWS_AS(wire::packetize(dfs, wrh, 10, 100), wire::HeaderTooLarge);
}

TEST_CASE("golden byte vector stays frozen") {
  wire::Packet pkt;
  pkt.rdma.context_id = 0x11223344;
  pkt.rdma.message_id = 0x0102030405060708ull;
  pkt.rdma.packet_seq = 0x0A0B0C0D;
  pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kAck);
  pkt.rdma.flags = wire::flags::kFirst | wire::flags::kLast;
  pkt.rdma.payload_len = 0;
  pkt.rdma.src_node = 0x21;
  pkt.rdma.dst_node = 0x42;
  const auto bytes = wire::encode_packet(pkt);
  const std::vector<std::uint8_t> expect = {
      0x44, 0x33, 0x22, 0x11,                          // context_id
      0x08, 0x07, 0x06, 0x05, 0x04, 0x03, 0x02, 0x01,  // message_id
      0x0D, 0x0C, 0x0B, 0x0A,                          // packet_seq
      0x03,                                            // opcode ACK
      0x03,                                            // FIRST|LAST
      0x00, 0x00,                                      // payload_len
      0x21, 0x00, 0x00, 0x00,                          // src
      0x42, 0x00, 0x00, 0x00,                          // dst
      0x00, 0x00, 0x00, 0x00,                          // reserved
  };
  CHECK(bytes == expect);
}
