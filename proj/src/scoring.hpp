// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Per-point reconstruction scores, ROC-AUC and point-adjusted F1.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"

namespace patchdelta {

struct ScoreSeries {
  std::vector<double> scores;         // one per test point; 0 where not covered
  std::vector<std::uint8_t> covered;  // 0 for points dropped by patch truncation
};

// Mean over features of the squared error, one value per row.
std::vector<double> reconstruction_point_scores(const Matrix& x, const Matrix& x_hat);

// Scores every point of `test` (already normalized) with non-overlapping
// L-windows; when L does not divide the length, a final window is anchored at
// the series end and fills the points earlier windows did not cover.
ScoreSeries point_scores(const ModelParams& params, const ModelConfig& config, const Matrix& test);

// Mann-Whitney AUC with ties counted as 1/2. Throws data when labels hold a
// single class.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Marks every true anomaly segment fully detected when any of its points is
// predicted.
std::vector<std::uint8_t> point_adjust(std::span<const std::uint8_t> predictions, std::span<const std::uint8_t> labels);

struct ThresholdRow {
  double threshold = 0.0;  // predict anomaly when score >= threshold
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Counts and F1 for one threshold.
ThresholdRow score_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels, double threshold,
                             bool adjust);

struct F1Sweep {
  ThresholdRow best;
  std::vector<ThresholdRow> rows;  // +inf, distinct scores descending, -inf
};

// Sweeps every distinct score plus the +-inf sentinels; ties go to the higher
// threshold. O(T log T).
F1Sweep best_f1(std::span<const double> scores, std::span<const std::uint8_t> labels, bool adjust = true);

// Linear-interpolated percentile, q in [0, 100].
double percentile(std::span<const double> values, double q);

enum class ThresholdMode { best_f1, percentile };

struct EvalOptions {
  ThresholdMode mode = ThresholdMode::best_f1;
  double percentile = 99.0;
};

struct EvalReport {
  ThresholdMode mode = ThresholdMode::best_f1;
  double roc_auc = 0.0;  // on raw scores, no adjustment
  ThresholdRow chosen;   // point-adjusted counts at the chosen threshold
  std::size_t n_points = 0;
  std::size_t n_scored = 0;
  std::size_t n_anomalous = 0;
  std::size_t tn = 0;
  std::vector<ThresholdRow> sweep;
};

// Metrics on covered points only.
EvalReport evaluate(const ScoreSeries& scores, std::span<const std::uint8_t> labels, const EvalOptions& options = {});

std::string report_kv(const EvalReport& report);
std::string sweep_csv(const EvalReport& report);
std::string scores_csv(const ScoreSeries& scores, std::span<const std::uint8_t> labels);

}  // namespace patchdelta
