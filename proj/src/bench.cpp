#include "simdfs/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>

#include "simdfs/rscodec.hpp"

namespace simdfs::bench {

namespace {

const gf256::Tables& shared_gf() {
  static const gf256::Tables t = gf256::Tables::build();
  return t;
}

const auth::Key kSharedKey = {0x53, 0x69, 0x6d, 0x44, 0x46, 0x53, 0x2d, 0x6b,
                              0x65, 0x79, 0x2d, 0x30, 0x31, 0x02, 0x03, 0x04,
                              0x05, 0x06, 0x07, 0x08, 0x09, 0x0a, 0x0b, 0x0c,
                              0x0d, 0x0e, 0x1f, 0x2e, 0x3d, 0x4c, 0x5b, 0x6a};

bool is_spin(Strategy s) {
  return s == Strategy::kSpinWrite || s == Strategy::kSpinRing ||
         s == Strategy::kSpinPbt || s == Strategy::kSpinTriec;
}

std::uint32_t storage_node_count(const Scenario& s) {
  switch (s.strategy) {
    case Strategy::kSpinWrite:
      return 1;
    case Strategy::kSpinRing:
    case Strategy::kSpinPbt:
      return static_cast<std::uint32_t>(s.k);
    case Strategy::kSpinTriec:
      return static_cast<std::uint32_t>(s.k + s.m);
    default:
      return 0;
  }
}

std::uint64_t auto_window(const Scenario& s) {
  if (s.window_writes > 0) return s.window_writes;
  const std::uint64_t budget =
      s.strategy == Strategy::kSpinTriec ? (2ull << 20) : (8ull << 20);
  const std::uint64_t w = budget / std::max<std::uint64_t>(1, s.write_size);
  return std::clamp<std::uint64_t>(w, 4, 8192);
}

struct SpinRun {
  double latency_ns = 0;
  double goodput_bps = 0;
  std::uint64_t packets = 0;
  std::uint64_t denials = 0;
  std::uint64_t host_events = 0;
  pspin::HandlerStats hh, ph, ch;
  bool integrity_ok = true;
  std::uint64_t completed = 0;
};

SpinRun run_spin_once(const Scenario& s, std::uint64_t seed) {
  const netsim::EngineConfig ecfg = s.engine_config();
  netsim::Engine eng(ecfg);

  // Bandwidth windows need enough injectors to saturate the nodes under
  // test; latency runs use a single client.
  const std::uint32_t n_clients =
      (s.strategy == Strategy::kSpinTriec && s.mode == Mode::kGoodput)
          ? std::max<std::uint32_t>(2, (static_cast<std::uint32_t>(s.k) + 1) / 2)
          : 1;
  std::vector<std::uint32_t> client_nodes;
  for (std::uint32_t c = 0; c < n_clients; ++c) {
    client_nodes.push_back(eng.add_node());
  }
  const std::uint32_t n_storage = storage_node_count(s);
  std::vector<std::uint32_t> storage_nodes;
  for (std::uint32_t i = 0; i < n_storage; ++i) {
    storage_nodes.push_back(eng.add_node());
  }

  auth::KeyStore ks(kSharedKey);
  policies::PolicyConfig pcfg;
  pcfg.pspin.accumulator_pool_entries = s.accumulator_pool_entries;
  pcfg.pspin.cleanup_timeout_ns = s.cleanup_timeout_ns;
  pcfg.pspin.hpus_per_cluster =
      std::max<std::uint32_t>(1, s.hpus / pcfg.pspin.clusters);
  pcfg.ack_mode = s.ack_mode;

  std::vector<std::unique_ptr<policies::StorageNodePolicy>> sns;
  for (const auto node : storage_nodes) {
    sns.push_back(std::make_unique<policies::StorageNodePolicy>(
        eng, node, pcfg, ks, shared_gf()));
  }
  for (std::uint64_t i = 0; i < s.prefill_entries; ++i) {
    sns.at(0)->nic().request_table().alloc(
        policies::make_greq(0xFFFFFFFFu, static_cast<std::uint32_t>(i)));
  }

  std::vector<std::unique_ptr<policies::Client>> clients;
  for (std::uint32_t c = 0; c < n_clients; ++c) {
    clients.push_back(std::make_unique<policies::Client>(
        eng, client_nodes[c], ks, seed + c));
  }

  const std::uint64_t writes =
      s.mode == Mode::kGoodput ? auto_window(s) : 1;

  struct Issued {
    std::uint32_t client;
    std::uint64_t greq;
    std::uint64_t addr;
  };
  std::vector<Issued> issued;

  for (std::uint64_t w = 0; w < writes; ++w) {
    const std::uint32_t c = static_cast<std::uint32_t>(w % n_clients);
    const std::uint64_t object =
        (static_cast<std::uint64_t>(c + 1) << 20) + w + 1;
    const std::uint64_t addr = object << 32;
    policies::Client::WriteOptions opt;
    opt.size = s.write_size;
    opt.interleave = s.interleave;
    opt.stop_after_packets = s.stop_after_packets;

    std::uint64_t greq = 0;
    if (s.strategy == Strategy::kSpinWrite) {
      greq = clients[c]->write_plain({storage_nodes[0], addr}, opt);
    } else if (s.strategy == Strategy::kSpinRing ||
               s.strategy == Strategy::kSpinPbt) {
      std::vector<wire::ReplicaCoordinate> coords;
      for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(s.k); ++i) {
        coords.push_back({storage_nodes[i], addr});
      }
      greq = clients[c]->write_replicated(
          s.strategy == Strategy::kSpinRing ? wire::ReplicationStrategy::kRing
                                            : wire::ReplicationStrategy::kPbt,
          coords, opt);
    } else {
      std::vector<wire::ReplicaCoordinate> data_coords, parity_coords;
      for (int j = 0; j < s.k; ++j) {
        data_coords.push_back({storage_nodes[j], addr});
      }
      for (int p = 0; p < s.m; ++p) {
        parity_coords.push_back({storage_nodes[s.k + p], addr});
      }
      greq = clients[c]->write_ec(static_cast<std::uint8_t>(s.k),
                                  static_cast<std::uint8_t>(s.m), data_coords,
                                  parity_coords, opt);
    }
    issued.push_back({c, greq, addr});
  }

  eng.run_until_idle();

  SpinRun out;
  out.packets = eng.packets_sent();
  out.hh = sns[0]->nic().stats(pspin::HandlerKind::kHeader);
  out.ph = sns[0]->nic().stats(pspin::HandlerKind::kPayload);
  out.ch = sns[0]->nic().stats(pspin::HandlerKind::kCompletion);

  double latency_sum = 0;
  for (const auto& iss : issued) {
    const auto& st = clients[iss.client]->result(iss.greq);
    if (!st.done || st.denied) continue;
    ++out.completed;
    latency_sum += netsim::to_ns(st.completed - st.issued);
  }
  if (out.completed > 0) out.latency_ns = latency_sum / out.completed;
  for (const auto& c : clients) out.denials += c->denials();
  for (const auto node : storage_nodes) {
    out.host_events += eng.host_events(node).size();
  }

  // Goodput: ingest rate at the primary; for EC, system encode bandwidth over
  // all generated (data + parity) bytes.
  if (s.strategy == Strategy::kSpinTriec) {
    std::uint64_t total = 0;
    netsim::TimePs first = ~0ull, last = 0;
    for (const auto& sn : sns) {
      total += sn->payload_bytes_stored();
      if (sn->payload_bytes_stored() > 0) {
        first = std::min(first, sn->first_rx());
        last = std::max(last, sn->last_store());
      }
    }
    if (last > first) {
      out.goodput_bps = static_cast<double>(total) * 8e12 /
                        static_cast<double>(last - first);
    }
  } else {
    const auto& p = *sns[0];
    if (p.last_store() > p.first_rx()) {
      out.goodput_bps = static_cast<double>(p.payload_bytes_stored()) * 8e12 /
                        static_cast<double>(p.last_store() - p.first_rx());
    }
  }

  // Integrity: stored bytes at every involved node match the sent data.
  for (const auto& iss : issued) {
    const auto& st = clients[iss.client]->result(iss.greq);
    if (!st.done || st.denied) continue;
    if (s.strategy == Strategy::kSpinWrite) {
      const auto got = eng.storage(storage_nodes[0]).read(iss.addr, st.data.size());
      if (got != st.data) out.integrity_ok = false;
    } else if (s.strategy == Strategy::kSpinRing ||
               s.strategy == Strategy::kSpinPbt) {
      for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(s.k); ++i) {
        const auto got =
            eng.storage(storage_nodes[i]).read(iss.addr, st.data.size());
        if (got != st.data) out.integrity_ok = false;
      }
    } else {
      const std::uint64_t chunk = st.chunk_len;
      std::vector<std::vector<std::uint8_t>> chunks(
          s.k, std::vector<std::uint8_t>(chunk, 0));
      for (int j = 0; j < s.k; ++j) {
        const std::uint64_t begin = static_cast<std::uint64_t>(j) * chunk;
        if (begin < st.data.size()) {
          const std::uint64_t n =
              std::min<std::uint64_t>(chunk, st.data.size() - begin);
          std::copy_n(st.data.begin() + begin, n, chunks[j].begin());
        }
        const auto got = eng.storage(storage_nodes[j]).read(iss.addr, chunk);
        if (got != chunks[j]) out.integrity_ok = false;
      }
      const auto mat = rs::EncodingMatrix::build(s.k, s.m, shared_gf());
      const auto parity = rs::encode_block(mat, shared_gf(), chunks);
      for (int p = 0; p < s.m; ++p) {
        const auto got =
            eng.storage(storage_nodes[s.k + p]).read(iss.addr, chunk);
        if (got != parity[p]) out.integrity_ok = false;
      }
    }
  }
  return out;
}

baselines::Kind baseline_kind(Strategy s) {
  switch (s) {
    case Strategy::kRaw:
      return baselines::Kind::kRaw;
    case Strategy::kRpc:
      return baselines::Kind::kRpc;
    case Strategy::kRpcRdma:
      return baselines::Kind::kRpcRdma;
    case Strategy::kRdmaFlat:
      return baselines::Kind::kRdmaFlat;
    case Strategy::kHyperloop:
      return baselines::Kind::kHyperloop;
    case Strategy::kCpuRing:
      return baselines::Kind::kCpuRing;
    case Strategy::kCpuPbt:
      return baselines::Kind::kCpuPbt;
    default:
      return baselines::Kind::kInecTriec;
  }
}

}  // namespace

netsim::EngineConfig Scenario::engine_config() const {
  netsim::EngineConfig cfg;
  cfg.link.bandwidth_bps = line_rate_bps;
  cfg.link.latency = netsim::from_ns(link_latency_ns);
  cfg.link.mtu_bytes = mtu;
  cfg.host.memcpy_bandwidth_bps = memcpy_bps.value_or(line_rate_bps);
  cfg.host.pcie_rtt = netsim::from_ns(pcie_rtt_ns);
  cfg.host.rpc_sw_overhead = netsim::from_ns(rpc_sw_overhead_ns);
  cfg.host.dma_setup = netsim::from_ns(dma_setup_ns);
  return cfg;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kRaw:
      return "raw";
    case Strategy::kRpc:
      return "rpc";
    case Strategy::kRpcRdma:
      return "rpc_rdma";
    case Strategy::kRdmaFlat:
      return "rdma_flat";
    case Strategy::kHyperloop:
      return "hyperloop";
    case Strategy::kCpuRing:
      return "cpu_ring";
    case Strategy::kCpuPbt:
      return "cpu_pbt";
    case Strategy::kSpinWrite:
      return "spin_write";
    case Strategy::kSpinRing:
      return "spin_ring";
    case Strategy::kSpinPbt:
      return "spin_pbt";
    case Strategy::kSpinTriec:
      return "spin_triec";
    case Strategy::kInecTriec:
      return "inec_triec";
  }
  return "unknown";
}

std::string to_string(Mode m) {
  return m == Mode::kLatency ? "latency" : "goodput";
}

std::optional<Strategy> strategy_from_string(const std::string& s) {
  static const std::map<std::string, Strategy> table = {
      {"raw", Strategy::kRaw},
      {"rpc", Strategy::kRpc},
      {"rpc_rdma", Strategy::kRpcRdma},
      {"rdma_flat", Strategy::kRdmaFlat},
      {"hyperloop", Strategy::kHyperloop},
      {"cpu_ring", Strategy::kCpuRing},
      {"cpu_pbt", Strategy::kCpuPbt},
      {"spin_write", Strategy::kSpinWrite},
      {"spin_ring", Strategy::kSpinRing},
      {"spin_pbt", Strategy::kSpinPbt},
      {"spin_triec", Strategy::kSpinTriec},
      {"inec_triec", Strategy::kInecTriec},
  };
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::optional<Mode> mode_from_string(const std::string& s) {
  if (s == "latency") return Mode::kLatency;
  if (s == "goodput") return Mode::kGoodput;
  return std::nullopt;
}

std::optional<Dimension> dimension_from_string(const std::string& s) {
  if (s == "write_size") return Dimension::kWriteSize;
  if (s == "k") return Dimension::kK;
  if (s == "m") return Dimension::kM;
  if (s == "chunk_bytes") return Dimension::kChunkBytes;
  if (s == "hpus") return Dimension::kHpus;
  return std::nullopt;
}

ScenarioOutcome run_scenario_full(const Scenario& scenario) {
  ScenarioOutcome out;
  ResultRow& row = out.row;
  row.strategy = to_string(scenario.strategy);
  row.mode = to_string(scenario.mode);
  row.size = scenario.write_size;
  row.k = scenario.k;
  row.m = scenario.m;
  row.mtu = scenario.mtu;
  row.line_rate_bps = scenario.line_rate_bps;

  const int reps = std::max(1, scenario.repetitions);
  double latency_sum = 0;
  double goodput_sum = 0;
  for (int r = 0; r < reps; ++r) {
    const std::uint64_t seed = scenario.seed + static_cast<std::uint64_t>(r);
    if (is_spin(scenario.strategy)) {
      const SpinRun run = run_spin_once(scenario, seed);
      latency_sum += run.latency_ns;
      goodput_sum += run.goodput_bps;
      row.packets = run.packets;
      row.denials = run.denials;
      row.hh = {run.hh.count, run.hh.mean_ns(), run.hh.max_ns};
      row.ph = {run.ph.count, run.ph.mean_ns(), run.ph.max_ns};
      row.ch = {run.ch.count, run.ch.mean_ns(), run.ch.max_ns};
      out.integrity_ok = out.integrity_ok && run.integrity_ok;
      out.host_events += run.host_events;
    } else {
      baselines::StrategyConfig bc;
      bc.kind = baseline_kind(scenario.strategy);
      bc.k = scenario.k;
      bc.m = scenario.m;
      bc.chunk_bytes = scenario.chunk_bytes;
      const auto run = baselines::run_baseline(bc, scenario.engine_config(),
                                               scenario.write_size, seed);
      latency_sum += run.latency_ns;
      row.packets = run.packets;
      out.integrity_ok = out.integrity_ok && run.integrity_ok;
      if (scenario.strategy == Strategy::kInecTriec && run.latency_ns > 0) {
        const std::uint64_t chunk =
            (scenario.write_size + scenario.k - 1) / scenario.k;
        const double generated =
            static_cast<double>(chunk) * (scenario.k + scenario.m);
        goodput_sum += generated * 8e9 / run.latency_ns;
      }
    }
  }
  row.latency_ns = latency_sum / reps;
  row.goodput_bps = goodput_sum / reps;
  return out;
}

ResultRow run_scenario(const Scenario& scenario) {
  return run_scenario_full(scenario).row;
}

std::vector<ResultRow> sweep(const Scenario& base, Dimension dim,
                             const std::vector<double>& values) {
  std::vector<ResultRow> rows;
  for (const double v : values) {
    Scenario s = base;
    switch (dim) {
      case Dimension::kWriteSize:
        s.write_size = static_cast<std::uint64_t>(v);
        break;
      case Dimension::kK:
        s.k = static_cast<int>(v);
        break;
      case Dimension::kM:
        s.m = static_cast<int>(v);
        break;
      case Dimension::kChunkBytes:
        s.chunk_bytes = static_cast<std::uint32_t>(v);
        break;
      case Dimension::kHpus:
        s.hpus = static_cast<std::uint32_t>(v);
        break;
    }
    rows.push_back(run_scenario(s));
  }
  return rows;
}

namespace {

const std::vector<std::uint64_t> kFigSizes = {1024,   4096,   16384, 65536,
                                              262144, 524288, 1048576};
const std::vector<std::uint64_t> kRepSizes = {1024,  4096,   16384,
                                              65536, 262144, 524288};
const std::vector<std::uint64_t> kGoodputSizes = {1024,  4096,  8192, 16384,
                                                  65536, 262144, 524288};

std::vector<ResultRow> preset_fig6(std::uint64_t seed) {
  std::vector<ResultRow> rows;
  for (const auto strat : {Strategy::kRaw, Strategy::kRpc, Strategy::kRpcRdma,
                           Strategy::kSpinWrite}) {
    for (const auto size : kFigSizes) {
      Scenario s;
      s.strategy = strat;
      s.write_size = size;
      s.seed = seed;
      rows.push_back(run_scenario(s));
    }
  }
  return rows;
}

std::vector<ResultRow> preset_fig10(std::uint64_t seed) {
  std::vector<ResultRow> rows;
  for (const int k : {2, 4}) {
    for (const auto strat :
         {Strategy::kCpuRing, Strategy::kCpuPbt, Strategy::kRdmaFlat,
          Strategy::kHyperloop, Strategy::kSpinRing, Strategy::kSpinPbt}) {
      for (const auto size : kRepSizes) {
        Scenario s;
        s.strategy = strat;
        s.write_size = size;
        s.k = k;
        s.seed = seed;
        rows.push_back(run_scenario(s));
      }
    }
  }
  for (const auto strat : {Strategy::kSpinRing, Strategy::kSpinPbt}) {
    for (const auto size : kGoodputSizes) {
      Scenario s;
      s.strategy = strat;
      s.mode = Mode::kGoodput;
      s.write_size = size;
      s.k = 4;
      s.seed = seed;
      rows.push_back(run_scenario(s));
    }
  }
  return rows;
}

std::vector<ResultRow> preset_fig11(std::uint64_t seed) {
  std::vector<ResultRow> rows;
  for (const auto size : {std::uint64_t{4096}, std::uint64_t{524288}}) {
    for (const auto strat :
         {Strategy::kCpuRing, Strategy::kCpuPbt, Strategy::kRdmaFlat,
          Strategy::kHyperloop, Strategy::kSpinRing, Strategy::kSpinPbt}) {
      for (int k = 2; k <= 8; ++k) {
        Scenario s;
        s.strategy = strat;
        s.write_size = size;
        s.k = k;
        s.seed = seed;
        rows.push_back(run_scenario(s));
      }
    }
  }
  return rows;
}

std::vector<ResultRow> preset_fig13(std::uint64_t seed) {
  std::vector<ResultRow> rows;
  const std::vector<std::pair<int, int>> schemes = {{3, 2}, {6, 3}};
  for (const auto& [k, m] : schemes) {
    for (const auto strat : {Strategy::kSpinTriec, Strategy::kInecTriec}) {
      for (const auto size : kRepSizes) {
        Scenario s;
        s.strategy = strat;
        s.write_size = size;
        s.k = k;
        s.m = m;
        s.line_rate_bps = 100e9;
        s.seed = seed;
        rows.push_back(run_scenario(s));
      }
    }
    for (const auto size : kRepSizes) {
      Scenario s;
      s.strategy = Strategy::kSpinTriec;
      s.mode = Mode::kGoodput;
      s.write_size = size;
      s.k = k;
      s.m = m;
      s.line_rate_bps = 100e9;
      s.seed = seed;
      rows.push_back(run_scenario(s));
    }
  }
  return rows;
}

std::vector<ResultRow> preset_fig14(std::uint64_t seed) {
  std::vector<ResultRow> rows;
  // Handler-duration rows at the default 400 Gbit/s configuration.
  {
    Scenario s;
    s.strategy = Strategy::kSpinWrite;
    s.write_size = 524288;
    s.seed = seed;
    rows.push_back(run_scenario(s));
  }
  {
    Scenario s;
    s.strategy = Strategy::kSpinRing;
    s.write_size = 524288;
    s.k = 4;
    s.seed = seed;
    rows.push_back(run_scenario(s));
  }
  for (const auto& [k, m] : std::vector<std::pair<int, int>>{{3, 2}, {6, 3}}) {
    Scenario s;
    s.strategy = Strategy::kSpinTriec;
    s.write_size = 524288;
    s.k = k;
    s.m = m;
    s.seed = seed;
    rows.push_back(run_scenario(s));
  }
  // HPU scaling curve: average handler duration vs processing units needed.
  for (const double rate : {200e9, 400e9}) {
    for (double avg_ns = 40; avg_ns <= 25600; avg_ns *= 2) {
      ResultRow row;
      row.strategy = "hpus_needed";
      row.mode = "math";
      row.mtu = 2048;
      row.line_rate_bps = rate;
      row.latency_ns = avg_ns;
      row.packets = pspin::hpus_needed(avg_ns, 2048, rate);
      row.goodput_bps = rate;
      rows.push_back(row);
    }
  }
  return rows;
}

const ResultRow* find_row(const std::vector<ResultRow>& rows,
                          const std::string& strategy, const std::string& mode,
                          std::uint64_t size, int k, int m) {
  for (const auto& r : rows) {
    if (r.strategy == strategy && r.mode == mode && r.size == size &&
        r.k == k && r.m == m) {
      return &r;
    }
  }
  return nullptr;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

// Wire bytes of one replicated write request, for framing-efficiency math.
std::uint64_t message_wire_bytes(std::uint64_t size, int k, std::uint32_t mtu) {
  wire::WriteRequestHeader wrh;
  std::vector<wire::ReplicaCoordinate> reps(k > 0 ? k - 1 : 0);
  wrh.resiliency = wire::ResiliencyDescriptor::replication(
      wire::ReplicationStrategy::kRing, 0, reps);
  const std::uint64_t first_hdr = wire::RdmaHeader::kWireSize +
                                  wire::DfsHeader::kWireSize + wrh.wire_size();
  const std::uint64_t first_cap = mtu - first_hdr;
  if (size <= first_cap) return first_hdr + size;
  std::uint64_t wire_total = mtu;
  std::uint64_t rest = size - first_cap;
  const std::uint64_t cont_cap = mtu - wire::RdmaHeader::kWireSize;
  while (rest > 0) {
    const std::uint64_t n = std::min(cont_cap, rest);
    wire_total += wire::RdmaHeader::kWireSize + n;
    rest -= n;
  }
  return wire_total;
}

}  // namespace

bool is_known_preset(const std::string& name) {
  return name == "fig6" || name == "fig10" || name == "fig11" ||
         name == "fig13" || name == "fig14";
}

std::vector<ResultRow> run_preset(const std::string& name,
                                  std::uint64_t seed) {
  if (name == "fig6") return preset_fig6(seed);
  if (name == "fig10") return preset_fig10(seed);
  if (name == "fig11") return preset_fig11(seed);
  if (name == "fig13") return preset_fig13(seed);
  if (name == "fig14") return preset_fig14(seed);
  throw std::invalid_argument("unknown preset: " + name);
}

std::vector<CheckResult> check_preset(const std::string& name,
                                      const std::vector<ResultRow>& rows) {
  std::vector<CheckResult> checks;
  auto add = [&checks](const std::string& n, bool pass,
                       const std::string& detail) {
    checks.push_back({n, pass, detail});
  };

  if (name == "fig6") {
    const auto* raw1 = find_row(rows, "raw", "latency", 1024, 1, 0);
    const auto* spin1 = find_row(rows, "spin_write", "latency", 1024, 1, 0);
    if (raw1 && spin1) {
      const double ratio = spin1->latency_ns / raw1->latency_ns;
      add("auth_overhead_small", ratio <= 1.30,
          "spin/raw at 1KiB = " + format_double(ratio) + " (<= 1.30)");
    }
    for (const std::uint64_t size : {524288ull, 1048576ull}) {
      const auto* raw = find_row(rows, "raw", "latency", size, 1, 0);
      const auto* spin = find_row(rows, "spin_write", "latency", size, 1, 0);
      if (raw && spin) {
        const double ratio = spin->latency_ns / raw->latency_ns;
        add("auth_overhead_large_" + std::to_string(size), ratio <= 1.05,
            "spin/raw = " + format_double(ratio) + " (<= 1.05)");
      }
    }
  } else if (name == "fig10") {
    // RDMA-Flat is the latency minimum for small writes at k=2.
    for (const std::uint64_t size : {1024ull, 4096ull, 16384ull}) {
      const auto* flat = find_row(rows, "rdma_flat", "latency", size, 2, 0);
      bool is_min = flat != nullptr;
      std::string detail = "flat=" + (flat ? format_double(flat->latency_ns) : "?");
      for (const auto& r : rows) {
        if (r.mode != "latency" || r.size != size || r.k != 2 ||
            r.strategy == "rdma_flat") {
          continue;
        }
        if (flat && r.latency_ns < flat->latency_ns) {
          is_min = false;
          detail += " beaten_by=" + r.strategy;
        }
      }
      add("flat_min_small_" + std::to_string(size), is_min, detail);
    }
    // Ring goodput at line rate from 8 KiB; PBT at about half of ring.
    for (const std::uint64_t size : {8192ull, 16384ull, 65536ull, 262144ull,
                                     524288ull}) {
      const auto* ring = find_row(rows, "spin_ring", "goodput", size, 4, 0);
      if (ring == nullptr) continue;
      const double achievable =
          ring->line_rate_bps * static_cast<double>(size) /
          static_cast<double>(message_wire_bytes(size, 4, ring->mtu));
      const double frac = ring->goodput_bps / achievable;
      add("ring_goodput_" + std::to_string(size), frac >= 0.95,
          "fraction of achievable = " + format_double(frac) + " (>= 0.95)");
    }
    {
      const auto* ring = find_row(rows, "spin_ring", "goodput", 524288, 4, 0);
      const auto* pbt = find_row(rows, "spin_pbt", "goodput", 524288, 4, 0);
      if (ring && pbt) {
        const double frac = pbt->goodput_bps / ring->goodput_bps;
        add("pbt_half_goodput", frac >= 0.40 && frac <= 0.60,
            "pbt/ring = " + format_double(frac) + " (0.50 +/- 0.10)");
      }
    }
  } else if (name == "fig11") {
    // sPIN-Ring beats every non-sPIN strategy at 512 KiB with margin.
    for (const int k : {2, 4}) {
      const auto* ring = find_row(rows, "spin_ring", "latency", 524288, k, 0);
      if (ring == nullptr) continue;
      double best_alt = 0;
      std::string best_name;
      for (const auto& r : rows) {
        if (r.size != 524288 || r.k != k) continue;
        if (r.strategy == "spin_ring" || r.strategy == "spin_pbt") continue;
        if (best_name.empty() || r.latency_ns < best_alt) {
          best_alt = r.latency_ns;
          best_name = r.strategy;
        }
      }
      const double ratio = best_alt / ring->latency_ns;
      add("ring_advantage_k" + std::to_string(k), ratio >= 1.5,
          "best alternative (" + best_name + ")/spin_ring = " +
              format_double(ratio) + " (>= 1.5)");
    }
    // RDMA-Flat grows linearly in k at 512 KiB.
    {
      std::vector<std::pair<double, double>> pts;
      for (int k = 2; k <= 8; ++k) {
        const auto* flat = find_row(rows, "rdma_flat", "latency", 524288, k, 0);
        if (flat) pts.push_back({static_cast<double>(k), flat->latency_ns});
      }
      bool pass = pts.size() >= 3;
      double worst = 0;
      if (pass) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (const auto& [x, y] : pts) {
          sx += x;
          sy += y;
          sxx += x * x;
          sxy += x * y;
        }
        const double n = static_cast<double>(pts.size());
        const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double a = (sy - b * sx) / n;
        for (const auto& [x, y] : pts) {
          const double fit = a + b * x;
          worst = std::max(worst, std::abs(y - fit) / y);
        }
        pass = worst <= 0.15;
      }
      add("flat_linear_k", pass,
          "max relative residual = " + format_double(worst) + " (<= 0.15)");
    }
  } else if (name == "fig13") {
    for (const auto& [k, m] : std::vector<std::pair<int, int>>{{3, 2}, {6, 3}}) {
      const auto* spin = find_row(rows, "spin_triec", "latency", 1024, k, m);
      const auto* inec = find_row(rows, "inec_triec", "latency", 1024, k, m);
      if (spin && inec) {
        const double ratio = spin->latency_ns / inec->latency_ns;
        add("ec_latency_small_rs" + std::to_string(k) + std::to_string(m),
            ratio <= 0.6,
            "spin/inec at 1KiB = " + format_double(ratio) + " (<= 0.6)");
      }
      const auto* bw1 = find_row(rows, "spin_triec", "goodput", 1024, k, m);
      const auto* bw512 = find_row(rows, "spin_triec", "goodput", 524288, k, m);
      if (bw1 && bw512) {
        const double hi = std::max(bw1->goodput_bps, bw512->goodput_bps);
        const double lo = std::min(bw1->goodput_bps, bw512->goodput_bps);
        const double var = hi / lo - 1.0;
        add("ec_bandwidth_flat_rs" + std::to_string(k) + std::to_string(m),
            var <= 0.15,
            "bandwidth variation 1KiB..512KiB = " + format_double(var) +
                " (<= 0.15)");
      }
    }
  }
  return checks;
}

std::string csv_header() {
  return "strategy,mode,size_bytes,k,m,mtu,line_rate_bps,latency_ns,"
         "goodput_bps,packets,hh_count,hh_mean_ns,hh_max_ns,ph_count,"
         "ph_mean_ns,ph_max_ns,ch_count,ch_mean_ns,ch_max_ns,denials";
}

std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << csv_header() << "\n";
  char buf[512];
  for (const auto& r : rows) {
    std::snprintf(
        buf, sizeof(buf),
        "%s,%s,%llu,%d,%d,%u,%.0f,%.3f,%.0f,%llu,%llu,%.3f,%.3f,%llu,%.3f,"
        "%.3f,%llu,%.3f,%.3f,%llu",
        r.strategy.c_str(), r.mode.c_str(),
        static_cast<unsigned long long>(r.size), r.k, r.m, r.mtu,
        r.line_rate_bps, r.latency_ns, r.goodput_bps,
        static_cast<unsigned long long>(r.packets),
        static_cast<unsigned long long>(r.hh.count), r.hh.mean_ns, r.hh.max_ns,
        static_cast<unsigned long long>(r.ph.count), r.ph.mean_ns, r.ph.max_ns,
        static_cast<unsigned long long>(r.ch.count), r.ch.mean_ns, r.ch.max_ns,
        static_cast<unsigned long long>(r.denials));
    os << buf << "\n";
  }
  return os.str();
}

std::string to_jsonl(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  char buf[768];
  for (const auto& r : rows) {
    std::snprintf(
        buf, sizeof(buf),
        "{\"strategy\":\"%s\",\"mode\":\"%s\",\"size_bytes\":%llu,\"k\":%d,"
        "\"m\":%d,\"mtu\":%u,\"line_rate_bps\":%.0f,\"latency_ns\":%.3f,"
        "\"goodput_bps\":%.0f,\"packets\":%llu,\"hh\":{\"count\":%llu,"
        "\"mean_ns\":%.3f,\"max_ns\":%.3f},\"ph\":{\"count\":%llu,"
        "\"mean_ns\":%.3f,\"max_ns\":%.3f},\"ch\":{\"count\":%llu,"
        "\"mean_ns\":%.3f,\"max_ns\":%.3f},\"denials\":%llu}",
        r.strategy.c_str(), r.mode.c_str(),
        static_cast<unsigned long long>(r.size), r.k, r.m, r.mtu,
        r.line_rate_bps, r.latency_ns, r.goodput_bps,
        static_cast<unsigned long long>(r.packets),
        static_cast<unsigned long long>(r.hh.count), r.hh.mean_ns, r.hh.max_ns,
        static_cast<unsigned long long>(r.ph.count), r.ph.mean_ns, r.ph.max_ns,
        static_cast<unsigned long long>(r.ch.count), r.ch.mean_ns, r.ch.max_ns,
        static_cast<unsigned long long>(r.denials));
    os << buf << "\n";
  }
  return os.str();
}

Scenario parse_scenario_config(const std::string& text) {
  Scenario s;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // trim
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected key=value", line_no);
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "strategy") {
        const auto v = strategy_from_string(value);
        if (!v) throw ConfigError("unknown strategy '" + value + "'", line_no);
        s.strategy = *v;
      } else if (key == "mode") {
        const auto v = mode_from_string(value);
        if (!v) throw ConfigError("unknown mode '" + value + "'", line_no);
        s.mode = *v;
      } else if (key == "size") {
        s.write_size = std::stoull(value);
      } else if (key == "k") {
        s.k = std::stoi(value);
      } else if (key == "m") {
        s.m = std::stoi(value);
      } else if (key == "mtu") {
        s.mtu = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "line_rate") {
        s.line_rate_bps = std::stod(value);
      } else if (key == "link_latency_ns") {
        s.link_latency_ns = std::stod(value);
      } else if (key == "memcpy_bps") {
        s.memcpy_bps = std::stod(value);
      } else if (key == "pcie_rtt_ns") {
        s.pcie_rtt_ns = std::stod(value);
      } else if (key == "rpc_sw_overhead_ns") {
        s.rpc_sw_overhead_ns = std::stod(value);
      } else if (key == "dma_setup_ns") {
        s.dma_setup_ns = std::stod(value);
      } else if (key == "seed") {
        s.seed = std::stoull(value);
      } else if (key == "repetitions") {
        s.repetitions = std::stoi(value);
      } else if (key == "interleave") {
        s.interleave = value == "true" || value == "1";
      } else if (key == "window_writes") {
        s.window_writes = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "prefill_entries") {
        s.prefill_entries = std::stoull(value);
      } else if (key == "accumulator_pool_entries") {
        s.accumulator_pool_entries =
            static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "chunk_bytes") {
        s.chunk_bytes = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "cleanup_timeout_ns") {
        s.cleanup_timeout_ns = std::stoull(value);
      } else if (key == "hpus") {
        s.hpus = static_cast<std::uint32_t>(std::stoul(value));
      } else if (key == "ack_mode") {
        if (value == "primary") {
          s.ack_mode = policies::AckMode::kPrimary;
        } else if (value == "full_chain") {
          s.ack_mode = policies::AckMode::kFullChain;
        } else {
          throw ConfigError("unknown ack_mode '" + value + "'", line_no);
        }
      } else {
        throw ConfigError("unknown key '" + key + "'", line_no);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("invalid value for '" + key + "'", line_no);
    }
  }
  return s;
}

}  // namespace simdfs::bench
