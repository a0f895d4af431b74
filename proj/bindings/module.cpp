#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "simdfs/auth.hpp"
#include "simdfs/bench.hpp"
#include "simdfs/gf256.hpp"
#include "simdfs/policies.hpp"
#include "simdfs/pspin.hpp"
#include "simdfs/rscodec.hpp"
#include "simdfs/wire.hpp"

namespace py = pybind11;
using namespace simdfs;

namespace {

std::vector<std::uint8_t> to_bytes(const py::bytes& b) {
  const std::string s = b;
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

py::bytes from_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

py::dict row_to_dict(const bench::ResultRow& r) {
  py::dict d;
  d["strategy"] = r.strategy;
  d["mode"] = r.mode;
  d["size_bytes"] = r.size;
  d["k"] = r.k;
  d["m"] = r.m;
  d["mtu"] = r.mtu;
  d["line_rate_bps"] = r.line_rate_bps;
  d["latency_ns"] = r.latency_ns;
  d["goodput_bps"] = r.goodput_bps;
  d["packets"] = r.packets;
  d["hh_count"] = r.hh.count;
  d["hh_mean_ns"] = r.hh.mean_ns;
  d["ph_count"] = r.ph.count;
  d["ph_mean_ns"] = r.ph.mean_ns;
  d["ch_count"] = r.ch.count;
  d["ch_mean_ns"] = r.ch.mean_ns;
  d["denials"] = r.denials;
  return d;
}

}  // namespace

PYBIND11_MODULE(_simdfs, mod) {
  mod.doc() = "SmartNIC-offloaded DFS data-plane simulator and codecs";

  // --- gf256 ---
  auto gf = mod.def_submodule("gf256", "GF(2^8) arithmetic");
  py::class_<gf256::Tables>(gf, "Tables")
      .def_static("build", &gf256::Tables::build,
                  py::arg("poly") = gf256::kDefaultPoly)
      .def("mul", &gf256::Tables::mul)
      .def("inv", &gf256::Tables::inv)
      .def_property_readonly("poly", &gf256::Tables::poly);
  gf.def("add", &gf256::add);

  // --- reed-solomon ---
  auto rsm = mod.def_submodule("rs", "Systematic Reed-Solomon codec");
  py::class_<rs::EncodingMatrix>(rsm, "EncodingMatrix")
      .def_static(
          "build",
          [](int k, int m) {
            return rs::EncodingMatrix::build(k, m, gf256::Tables::build());
          },
          py::arg("k"), py::arg("m"))
      .def_property_readonly("k", &rs::EncodingMatrix::k)
      .def_property_readonly("m", &rs::EncodingMatrix::m)
      .def("coeff", &rs::EncodingMatrix::coeff);
  rsm.def("encode_block",
          [](const rs::EncodingMatrix& mat, const std::vector<py::bytes>& data) {
            std::vector<std::vector<std::uint8_t>> chunks;
            for (const auto& d : data) chunks.push_back(to_bytes(d));
            const auto parity =
                rs::encode_block(mat, gf256::Tables::build(), chunks);
            std::vector<py::bytes> out;
            for (const auto& p : parity) out.push_back(from_bytes(p));
            return out;
          });
  rsm.def("intermediate_parity",
          [](const rs::EncodingMatrix& mat, int j, int p, const py::bytes& payload) {
            const auto v = to_bytes(payload);
            return from_bytes(rs::intermediate_parity(
                mat, gf256::Tables::build(), j, p, v));
          });
  rsm.def("aggregate", [](const py::bytes& acc, const py::bytes& incoming) {
    auto a = to_bytes(acc);
    const auto b = to_bytes(incoming);
    rs::aggregate(a, b);
    return from_bytes(a);
  });
  rsm.def("recover",
          [](const rs::EncodingMatrix& mat,
             const std::vector<std::pair<int, py::bytes>>& available) {
            std::vector<std::pair<int, std::vector<std::uint8_t>>> chunks;
            for (const auto& [row, b] : available) {
              chunks.emplace_back(row, to_bytes(b));
            }
            const auto data =
                rs::recover(mat, gf256::Tables::build(), chunks);
            std::vector<py::bytes> out;
            for (const auto& d : data) out.push_back(from_bytes(d));
            return out;
          });

  // --- auth ---
  auto au = mod.def_submodule("auth", "Capability tickets");
  py::class_<auth::Capability>(au, "Capability")
      .def_readwrite("client_id", &auth::Capability::client_id)
      .def_readwrite("object_id", &auth::Capability::object_id)
      .def_readwrite("offset", &auth::Capability::offset)
      .def_readwrite("length", &auth::Capability::length)
      .def_readwrite("rights", &auth::Capability::rights)
      .def_readwrite("expiry_ns", &auth::Capability::expiry_ns);
  py::class_<auth::KeyStore>(au, "KeyStore")
      .def(py::init([](const py::bytes& key) {
        const auto k = to_bytes(key);
        if (k.size() != 32) {
          throw std::invalid_argument("key must be 32 bytes");
        }
        auth::Key arr{};
        std::copy(k.begin(), k.end(), arr.begin());
        return auth::KeyStore(arr);
      }))
      .def("issue", &auth::KeyStore::issue, py::arg("client_id"),
           py::arg("object_id"), py::arg("offset"), py::arg("length"),
           py::arg("rights"), py::arg("expiry_ns"))
      .def("validate",
           [](const auth::KeyStore& ks, const auth::Capability& cap,
              std::uint8_t op, std::uint64_t object, std::uint64_t offset,
              std::uint64_t len, std::uint64_t now_ns) {
             const auto v = ks.validate(cap, op, object, offset, len, now_ns);
             return py::make_tuple(v.accepted,
                                   v.accepted ? "" : auth::to_string(v.reason));
           });
  au.attr("READ") = static_cast<int>(auth::kRead);
  au.attr("WRITE") = static_cast<int>(auth::kWrite);

  // --- pspin capacity/budget math ---
  auto ps = mod.def_submodule("pspin", "NIC capacity and budget math");
  ps.def(
      "capacity",
      [](std::uint32_t descriptor_bytes) {
        pspin::PspinConfig cfg;
        cfg.descriptor_bytes = descriptor_bytes;
        return pspin::capacity(cfg);
      },
      py::arg("descriptor_bytes") = 77);
  ps.def(
      "required_memory",
      [](std::uint64_t n, std::uint32_t descriptor_bytes) {
        pspin::PspinConfig cfg;
        cfg.descriptor_bytes = descriptor_bytes;
        return pspin::required_memory(cfg, n);
      },
      py::arg("n_concurrent_writes"), py::arg("descriptor_bytes") = 77);
  ps.def("handler_budget_ns", &pspin::handler_budget_ns, py::arg("mtu_bytes"),
         py::arg("line_rate_bps"), py::arg("n_hpus"));
  ps.def("hpus_needed", &pspin::hpus_needed, py::arg("avg_handler_ns"),
         py::arg("mtu_bytes"), py::arg("line_rate_bps"));

  // --- wire ---
  auto wi = mod.def_submodule("wire", "Request packet codec");
  wi.def("packetize_write",
         [](std::uint64_t data_len, std::uint32_t mtu, std::size_t wrh_extra) {
           wire::DfsHeader dfs;
           wire::WriteRequestHeader wrh;
           std::vector<wire::ReplicaCoordinate> reps(wrh_extra);
           if (wrh_extra > 0) {
             wrh.resiliency = wire::ResiliencyDescriptor::replication(
                 wire::ReplicationStrategy::kRing, 0, reps);
           }
           const auto descs = wire::packetize(dfs, wrh, data_len, mtu);
           std::vector<py::dict> out;
           for (const auto& d : descs) {
             py::dict e;
             e["seq"] = d.seq;
             e["flags"] = d.flags;
             e["payload_len"] = d.payload_len;
             e["carries_dfs_headers"] = d.carries_dfs_headers;
             out.push_back(e);
           }
           return out;
         },
         py::arg("data_len"), py::arg("mtu") = wire::kDefaultMtu,
         py::arg("replica_count") = 0);
  wi.def("roundtrip",
         [](const py::bytes& encoded) {
           const auto v = to_bytes(encoded);
           const auto pkt = wire::decode_packet(v);
           return from_bytes(wire::encode_packet(pkt));
         });
  wi.def("example_write_packet", [](std::uint64_t greq, std::uint16_t payload_len) {
    wire::Packet pkt;
    pkt.rdma.opcode = static_cast<std::uint8_t>(wire::Opcode::kWrite);
    pkt.rdma.flags = wire::flags::kFirst | wire::flags::kLast;
    pkt.rdma.message_id = greq << 10;
    pkt.rdma.payload_len = payload_len;
    wire::DfsHeader dfs;
    dfs.greq_id = greq;
    pkt.dfs = dfs;
    wire::WriteRequestHeader wrh;
    wrh.write_len = payload_len;
    pkt.wrh = wrh;
    pkt.payload.assign(payload_len, 0xAB);
    return from_bytes(wire::encode_packet(pkt));
  });

  // --- bench ---
  auto be = mod.def_submodule("bench", "Scenario runner");
  be.def("run_preset",
         [](const std::string& name, std::uint64_t seed) {
           const auto rows = bench::run_preset(name, seed);
           std::vector<py::dict> out;
           for (const auto& r : rows) out.push_back(row_to_dict(r));
           return out;
         },
         py::arg("name"), py::arg("seed") = 1);
  be.def("run_preset_csv",
         [](const std::string& name, std::uint64_t seed) {
           return bench::to_csv(bench::run_preset(name, seed));
         },
         py::arg("name"), py::arg("seed") = 1);
  be.def("run_config", [](const std::string& text) {
    const auto row = bench::run_scenario(bench::parse_scenario_config(text));
    return row_to_dict(row);
  });
  be.def("check_preset", [](const std::string& name, std::uint64_t seed) {
    const auto rows = bench::run_preset(name, seed);
    const auto checks = bench::check_preset(name, rows);
    std::vector<py::dict> out;
    for (const auto& c : checks) {
      py::dict d;
      d["name"] = c.name;
      d["pass"] = c.pass;
      d["detail"] = c.detail;
      out.push_back(d);
    }
    return out;
  });
}
