#pragma once

#include <cstdint>
#include <optional>

#include "simdfs/gf256.hpp"
#include "simdfs/netsim.hpp"

namespace simdfs::baselines {

enum class Kind {
  kRaw,
  kRpc,
  kRpcRdma,
  kRdmaFlat,
  kHyperloop,
  kCpuRing,
  kCpuPbt,
  kInecTriec,
};

struct StrategyConfig {
  Kind kind = Kind::kRaw;
  int k = 1;
  int m = 0;
  // Pipelining granularity for store-and-forward strategies; unset selects
  // the latency-minimizing chunk by sweep.
  std::optional<std::uint32_t> chunk_bytes;
  // Triggered-operation model: WQE chains of this length are armed per node
  // and fire with one DMA setup per element plus a PCIe round trip.
  std::uint32_t wqe_chain_len = 3;
  // NIC EC accelerator rate; 0 means line rate.
  double accel_rate_bps = 0;
};

struct BaselineOutcome {
  double latency_ns = 0;
  std::uint64_t packets = 0;
  std::uint32_t chunk_bytes = 0;
  bool unimodal = true;
  bool integrity_ok = true;
};

// Runs one write of the given size under the strategy, on a fresh engine
// built from cfg. Stored bytes are verified against the sent data (and, for
// EC, against the reference encoder) before returning.
BaselineOutcome run_baseline(const StrategyConfig& strategy,
                             const netsim::EngineConfig& cfg,
                             std::uint64_t size, std::uint64_t seed);

// Latency-minimizing chunk size over candidates (powers of two between the
// MTU and min(size, 256 KiB)); ties break towards larger chunks and the
// sampled curve is checked for unimodality.
struct ChunkSweepResult {
  std::uint32_t best_chunk = 0;
  double best_latency_ns = 0;
  bool unimodal = true;
};

}  // namespace simdfs::baselines
