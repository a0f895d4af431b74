#pragma once

#include <optional>
#include <string>
#include <vector>

#include "simdfs/baselines.hpp"
#include "simdfs/netsim.hpp"
#include "simdfs/policies.hpp"

namespace simdfs::bench {

enum class Strategy {
  kRaw,
  kRpc,
  kRpcRdma,
  kRdmaFlat,
  kHyperloop,
  kCpuRing,
  kCpuPbt,
  kSpinWrite,
  kSpinRing,
  kSpinPbt,
  kSpinTriec,
  kInecTriec,
};

enum class Mode {
  kLatency,
  kGoodput,
};

std::string to_string(Strategy s);
std::string to_string(Mode m);
std::optional<Strategy> strategy_from_string(const std::string& s);
std::optional<Mode> mode_from_string(const std::string& s);

struct Scenario {
  Strategy strategy = Strategy::kSpinWrite;
  Mode mode = Mode::kLatency;
  std::uint64_t write_size = 1024;
  int k = 1;
  int m = 0;
  std::uint32_t mtu = 2048;
  double line_rate_bps = 400e9;
  double link_latency_ns = 20;
  // host model; memcpy bandwidth defaults to the line rate
  std::optional<double> memcpy_bps;
  double pcie_rtt_ns = 400;
  double rpc_sw_overhead_ns = 500;
  double dma_setup_ns = 100;
  policies::AckMode ack_mode = policies::AckMode::kFullChain;
  std::uint64_t seed = 1;
  int repetitions = 1;
  bool interleave = true;
  std::uint32_t window_writes = 0;  // 0 selects automatically in goodput mode
  std::uint64_t prefill_entries = 0;
  std::uint32_t accumulator_pool_entries = 256;
  std::uint32_t stop_after_packets = 0xFFFFFFFF;
  std::optional<std::uint32_t> chunk_bytes;
  std::uint64_t cleanup_timeout_ns = 10'000'000;
  std::uint32_t hpus = 32;

  netsim::EngineConfig engine_config() const;
};

struct HandlerStatRow {
  std::uint64_t count = 0;
  double mean_ns = 0;
  double max_ns = 0;
};

struct ResultRow {
  std::string strategy;
  std::string mode;
  std::uint64_t size = 0;
  int k = 1;
  int m = 0;
  std::uint32_t mtu = 2048;
  double line_rate_bps = 400e9;
  double latency_ns = 0;
  double goodput_bps = 0;
  std::uint64_t packets = 0;
  HandlerStatRow hh, ph, ch;
  std::uint64_t denials = 0;
};

struct ScenarioOutcome {
  ResultRow row;
  bool integrity_ok = true;
  std::uint64_t host_events = 0;
};

ScenarioOutcome run_scenario_full(const Scenario& scenario);
ResultRow run_scenario(const Scenario& scenario);

enum class Dimension {
  kWriteSize,
  kK,
  kM,
  kChunkBytes,
  kHpus,
};

std::optional<Dimension> dimension_from_string(const std::string& s);

std::vector<ResultRow> sweep(const Scenario& base, Dimension dim,
                             const std::vector<double>& values);

// Presets reproducing the study's figure data at desk scale:
// fig6 (authenticated write latency), fig10 (replication latency k=2/k=4 and
// storage-node goodput), fig11 (latency vs replication factor), fig13
// (erasure-coding latency and bandwidth at 100 Gbit/s), fig14 (handler
// durations and HPU scaling math).
std::vector<ResultRow> run_preset(const std::string& name, std::uint64_t seed);
bool is_known_preset(const std::string& name);

std::string csv_header();
std::string to_csv(const std::vector<ResultRow>& rows);
std::string to_jsonl(const std::vector<ResultRow>& rows);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Threshold checks tied to each preset; empty when a preset has none.
std::vector<CheckResult> check_preset(const std::string& name,
                                      const std::vector<ResultRow>& rows);

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& msg, int line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_number(line) {}
  int line_number;
};

// Flat key=value scenario configuration; '#' starts a comment.
Scenario parse_scenario_config(const std::string& text);

}  // namespace simdfs::bench
