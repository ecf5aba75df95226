// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Sliding-window datasets and Adam on the MSE reconstruction objective.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "model.hpp"

namespace patchdelta {

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::size_t window_stride = 0;  // 0 means the window length L
  std::uint64_t seed = 0;         // window shuffling
  std::size_t threads = 1;        // per-batch window parallelism

  void validate() const;
};

// Starts 0, stride, 2*stride, ... of every full window; count is
// floor((length - window) / stride) + 1.
std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t stride);
std::vector<Matrix> sliding_windows(const Matrix& series, std::size_t window, std::size_t stride);

struct AdamState {
  std::vector<Matrix> first;   // first-moment accumulators, one per tensor
  std::vector<Matrix> second;  // second-moment accumulators
  std::uint64_t step = 0;

  static AdamState for_params(const ModelParams& params);
};

// One bias-corrected Adam update over raw buffers; `step` is the 1-based
// step index after increment.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first,
                 std::span<double> second, std::uint64_t step, const TrainConfig& config);

// Throws numeric (naming the tensor) on a non-finite gradient.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochLog> history;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Trains from init_params(model_config). The series must be unlabeled and
// already normalized.
TrainResult train(const TimeSeries& series, const ModelConfig& model_config, const TrainConfig& train_config,
                  const EpochCallback& on_epoch = {});
TrainResult train(ModelParams initial, const TimeSeries& series, const ModelConfig& model_config,
                  const TrainConfig& train_config, const EpochCallback& on_epoch = {});

}  // namespace patchdelta
