// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// SMD-format text IO, train-statistics z-scoring, and a seeded synthetic
// benchmark generator.
//
// SMD text format: one time step per line, comma-separated decimals, LF or
// CRLF line endings. Label files hold one 0/1 integer per line.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "patching.hpp"

namespace patchdelta {

struct NormStats {
  static constexpr double kStdFloor = 1e-8;
  std::vector<double> mean;
  std::vector<double> stddev;  // floored at kStdFloor
};

enum class AnomalyKind { spike, level_shift, drift };
std::string_view anomaly_kind_name(AnomalyKind kind) noexcept;

struct Segment {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  AnomalyKind kind = AnomalyKind::spike;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct DatasetBundle {
  TimeSeries train;                // unlabeled
  TimeSeries test;                 // labeled (may be empty when only training data was loaded)
  std::optional<NormStats> stats;  // set once normalized
  std::vector<Segment> segments;   // ground truth for synthetic data

  std::size_t features() const noexcept { return train.features(); }
};

Matrix read_series(const std::filesystem::path& path);
std::vector<std::uint8_t> read_labels(const std::filesystem::path& path);
void write_series(const std::filesystem::path& path, const Matrix& series);
void write_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// Test and label paths may be empty to load a training split only.
DatasetBundle load_smd(const std::filesystem::path& train_path, const std::filesystem::path& test_path = {},
                       const std::filesystem::path& label_path = {});

NormStats compute_stats(const Matrix& train);
Matrix apply_norm(const Matrix& series, const NormStats& stats);
Matrix denormalize(const Matrix& series, const NormStats& stats);
// z-scores both splits with train statistics. Throws usage if already applied.
DatasetBundle normalize(DatasetBundle bundle);

struct AnomalySpec {
  std::size_t count = 0;
  std::size_t min_len = 1;
  std::size_t max_len = 1;
  double min_magnitude = 6.0;  // in units of noise_std
  double max_magnitude = 10.0;
};

struct SynthConfig {
  std::size_t train_length = 20000;
  std::size_t test_length = 20000;
  std::size_t features = 8;
  double period_min = 20.0;
  double period_max = 200.0;
  // Channels share periods round-robin across this many distinct values, so
  // the normal signal is correlated across channels. 0 gives every channel
  // its own period.
  std::size_t period_groups = 2;
  double amplitude_min = 0.5;
  double amplitude_max = 1.5;
  double noise_std = 0.1;
  AnomalySpec spikes{30, 1, 1, 6.0, 10.0};
  AnomalySpec level_shifts{8, 20, 100, 6.0, 10.0};
  AnomalySpec drifts{8, 40, 160, 6.0, 10.0};
  std::uint64_t seed = 0;

  void validate() const;
};

DatasetBundle synth_generate(const SynthConfig& config);

// {"segments":[{"start":..,"end":..,"kind":".."},...]}
std::string segments_json(std::span<const Segment> segments);

// Writes train.txt, test.txt, test_label.txt and segments.json into dir.
void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace patchdelta
