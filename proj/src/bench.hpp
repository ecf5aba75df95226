// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Forward-pass latency and peak tracked allocation versus sequence length.
//
// Each (variant, L) pair gets freshly initialized weights and a batch of
// random L x F windows. Latency is the wall time of one whole-batch forward
// pass; the memory figure is the transient peak of matrix-buffer bytes above
// the live total before the pass (retained batch outputs included).

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"

namespace patchdelta {

inline const std::vector<std::size_t> kDeskLadder = {1000, 4000, 16000, 64000};
inline const std::vector<std::size_t> kFullLadder = {8000, 32000, 64000, 128000, 256000, 512000};

struct BenchConfig {
  std::vector<Variant> variants = {Variant::patched_attention, Variant::pointwise, Variant::patched_deltanet};
  std::vector<std::size_t> lengths = kDeskLadder;
  std::size_t batch = 16;
  std::size_t repetitions = 20;
  std::size_t warmup = 3;
  std::size_t patch = 10;  // pointwise always uses 1
  std::size_t features = 38;
  std::size_t d_model = 128;
  std::size_t d_ff = 1024;
  std::uint64_t data_seed = 0;
  std::uint64_t model_seed = 0;
  std::size_t threads = 1;  // >1 times the batch with one window per worker
  bool track_allocations = true;
  // Pairs whose estimated attention weight matrix exceeds this are skipped.
  std::size_t memory_limit_bytes = std::size_t{3} << 30;

  void validate() const;
};

struct BenchRecord {
  Variant variant = Variant::patched_deltanet;
  std::size_t length = 0;  // L
  std::size_t tokens = 0;  // N = floor(L / P)
  std::size_t batch = 0;
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  std::size_t peak_bytes = 0;
  bool alloc_tracked = true;
  std::size_t steps = 0;  // recurrence steps per window (delta cores)
  bool skipped = false;
};

using BenchProgress = std::function<void(const BenchRecord&)>;

std::vector<BenchRecord> measure(const BenchConfig& config, const BenchProgress& progress = {});

// Least-squares slope of log(latency) on log(length). Needs >= 3 points.
double fit_scaling_exponent(std::span<const double> lengths, std::span<const double> latencies);
double fit_scaling_exponent(std::span<const BenchRecord> records, Variant variant);

// variant,L,N,batch,median_ms,iqr_ms,peak_bytes
std::string bench_csv(std::span<const BenchRecord> records);
std::vector<BenchRecord> parse_bench_csv(const std::string& text);

// Self-contained SVG with log-log latency and memory panels.
std::string render_svg(std::span<const BenchRecord> records);

}  // namespace patchdelta
