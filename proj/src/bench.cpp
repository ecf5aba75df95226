// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <thread>

#include "data_io.hpp"
#include "errors.hpp"
#include "scoring.hpp"

namespace patchdelta {

void BenchConfig::validate() const {
  if (variants.empty()) usage_error("bench: no variants");
  if (lengths.empty()) usage_error("bench: no sequence lengths");
  for (std::size_t i = 1; i < lengths.size(); ++i)
    if (lengths[i] <= lengths[i - 1]) usage_error("bench: lengths must be strictly increasing");
  if (batch < 1) usage_error("bench: batch must be at least 1");
  if (repetitions < 5) usage_error("bench: at least 5 repetitions are needed for a median");
  if (threads < 1) usage_error("bench: threads must be at least 1");
}

namespace {

using Clock = std::chrono::steady_clock;

ModelConfig bench_model(const BenchConfig& c, Variant v, std::size_t length) {
  ModelConfig m;
  m.variant = v;
  m.window = length;
  m.patch = v == Variant::pointwise ? 1 : c.patch;
  m.features = c.features;
  m.d_model = c.d_model;
  m.d_ff = c.d_ff;
  m.seed = c.model_seed;
  return m;
}

struct BatchRun {
  double ms = 0.0;
  std::size_t steps = 0;
};

BatchRun run_batch(const std::vector<Matrix>& batch, const ModelParams& params, const ModelConfig& config,
                   std::size_t threads) {
  std::vector<Matrix> outputs(batch.size());
  std::vector<std::size_t> steps(batch.size(), 0);
  auto one = [&](std::size_t i) {
    ModelForward f = model_forward(batch[i], params, config, false);
    outputs[i] = std::move(f.reconstruction.tokens);
    steps[i] = f.core_steps;
  };
  const auto t0 = Clock::now();
  if (threads <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) one(i);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < batch.size(); i += threads) one(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  const auto t1 = Clock::now();
  return {std::chrono::duration<double, std::milli>(t1 - t0).count(), steps.front()};
}

}  // namespace

std::vector<BenchRecord> measure(const BenchConfig& config, const BenchProgress& progress) {
  config.validate();
  std::vector<BenchRecord> records;
  const bool tracking_was_enabled = AllocTracker::enabled();
  for (Variant v : config.variants) {
    for (std::size_t length : config.lengths) {
      const ModelConfig mc = bench_model(config, v, length);
      mc.validate();
      BenchRecord rec;
      rec.variant = v;
      rec.length = length;
      rec.tokens = mc.tokens();
      rec.batch = config.batch;

      const std::size_t n = mc.tokens();
      if (v == Variant::patched_attention && n * n * sizeof(double) > config.memory_limit_bytes) {
        rec.skipped = true;
        records.push_back(rec);
        if (progress) progress(rec);
        continue;
      }

      const ModelParams params = init_params(mc);
      Rng rng(config.data_seed ^ (0x9e3779b97f4a7c15ULL * length));
      std::vector<Matrix> batch;
      for (std::size_t b = 0; b < config.batch; ++b) {
        Matrix w(length, config.features);
        for (double& x : w.values()) x = rng.normal();
        batch.push_back(std::move(w));
      }

      for (std::size_t i = 0; i < config.warmup; ++i) run_batch(batch, params, mc, config.threads);

      AllocTracker::set_enabled(config.track_allocations);
      std::vector<double> times;
      for (std::size_t i = 0; i < config.repetitions; ++i) {
        if (i == 0) {
          PeakScope scope;
          const BatchRun r = run_batch(batch, params, mc, config.threads);
          rec.peak_bytes = config.track_allocations ? scope.transient_peak() : 0;
          rec.steps = r.steps;
          times.push_back(r.ms);
        } else {
          times.push_back(run_batch(batch, params, mc, config.threads).ms);
        }
      }
      AllocTracker::set_enabled(tracking_was_enabled);
      rec.alloc_tracked = config.track_allocations;
      rec.median_ms = percentile(times, 50.0);
      rec.iqr_ms = percentile(times, 75.0) - percentile(times, 25.0);
      records.push_back(rec);
      if (progress) progress(rec);
    }
  }
  return records;
}

double fit_scaling_exponent(std::span<const double> lengths, std::span<const double> latencies) {
  if (lengths.size() != latencies.size()) usage_error("fit_scaling_exponent: length/latency count mismatch");
  if (lengths.size() < 3) usage_error("fit_scaling_exponent: need at least 3 points");
  const double n = static_cast<double>(lengths.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (!(lengths[i] > 0.0) || !(latencies[i] > 0.0)) usage_error("fit_scaling_exponent: values must be positive");
    const double x = std::log(lengths[i]);
    const double y = std::log(latencies[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) usage_error("fit_scaling_exponent: lengths must not all be equal");
  return (n * sxy - sx * sy) / denom;
}

double fit_scaling_exponent(std::span<const BenchRecord> records, Variant variant) {
  std::vector<double> x, y;
  for (const BenchRecord& r : records)
    if (r.variant == variant && !r.skipped) {
      x.push_back(static_cast<double>(r.length));
      y.push_back(r.median_ms);
    }
  return fit_scaling_exponent(x, y);
}

std::string bench_csv(std::span<const BenchRecord> records) {
  std::string out = "variant,L,N,batch,median_ms,iqr_ms,peak_bytes\n";
  for (const BenchRecord& r : records) {
    if (r.skipped) continue;
    out += std::string(variant_name(r.variant)) + "," + std::to_string(r.length) + "," + std::to_string(r.tokens) + "," +
           std::to_string(r.batch) + "," + format_double(r.median_ms) + "," + format_double(r.iqr_ms) + "," +
           (r.alloc_tracked ? std::to_string(r.peak_bytes) : std::string("NA")) + "\n";
  }
  return out;
}

std::vector<BenchRecord> parse_bench_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) data_error("bench csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "variant,L,N,batch,median_ms,iqr_ms,peak_bytes") data_error("bench csv: unexpected header '" + line + "'");
  std::vector<BenchRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string field; std::getline(ls, field, ',');) f.push_back(field);
    if (f.size() != 7) data_error("bench csv line " + std::to_string(line_no) + ": expected 7 fields");
    try {
      BenchRecord r;
      r.variant = parse_variant(f[0]);
      r.length = std::stoull(f[1]);
      r.tokens = std::stoull(f[2]);
      r.batch = std::stoull(f[3]);
      r.median_ms = std::stod(f[4]);
      r.iqr_ms = std::stod(f[5]);
      r.alloc_tracked = f[6] != "NA";
      r.peak_bytes = r.alloc_tracked ? std::stoull(f[6]) : 0;
      out.push_back(r);
    } catch (const std::logic_error&) {
      data_error("bench csv line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return out;
}

}  // namespace patchdelta
