// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <thread>

#include "errors.hpp"

namespace patchdelta {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !(adam_eps > 0.0)) usage_error("train config: learning_rate and adam_eps must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    usage_error("train config: Adam betas must lie in [0, 1)");
  if (batch_size < 1) usage_error("train config: batch_size must be at least 1");
  if (threads < 1) usage_error("train config: threads must be at least 1");
}

std::vector<std::size_t> window_starts(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0) usage_error("sliding windows: window and stride must be positive");
  if (window > length)
    usage_error("sliding windows: window " + std::to_string(window) + " exceeds series length " + std::to_string(length));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + window <= length; s += stride) starts.push_back(s);
  return starts;
}

std::vector<Matrix> sliding_windows(const Matrix& series, std::size_t window, std::size_t stride) {
  std::vector<Matrix> out;
  for (std::size_t s : window_starts(series.rows(), window, stride)) {
    Matrix w(window, series.cols());
    std::copy_n(series.row(s).data(), window * series.cols(), w.data());
    out.push_back(std::move(w));
  }
  return out;
}

AdamState AdamState::for_params(const ModelParams& params) {
  AdamState s;
  params.for_each([&](const std::string&, const Matrix& m) {
    s.first.emplace_back(m.rows(), m.cols());
    s.second.emplace_back(m.rows(), m.cols());
  });
  return s;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first,
                 std::span<double> second, std::uint64_t step, const TrainConfig& c) {
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(c.adam_beta1, t);
  const double correction2 = 1.0 - std::pow(c.adam_beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first[i] = c.adam_beta1 * first[i] + (1.0 - c.adam_beta1) * g;
    second[i] = c.adam_beta2 * second[i] + (1.0 - c.adam_beta2) * g * g;
    const double m_hat = first[i] / correction1;
    const double v_hat = second[i] / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.adam_eps);
  }
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config) {
  std::vector<std::pair<std::string, const Matrix*>> g;
  grads.for_each([&](const std::string& name, const Matrix& m) { g.emplace_back(name, &m); });
  std::size_t i = 0;
  params.for_each([&](const std::string& name, Matrix&) {
    if (i >= g.size() || g[i].first != name) usage_error("adam_step: gradient layout does not match parameters");
    if (!all_finite(g[i].second->values())) numeric_error("non-finite gradient in tensor '" + name + "'");
    ++i;
  });
  if (i != g.size() || state.first.size() != g.size()) usage_error("adam_step: optimizer state does not match parameters");
  ++state.step;
  i = 0;
  params.for_each([&](const std::string&, Matrix& m) {
    if (!m.same_shape(*g[i].second) || !m.same_shape(state.first[i]))
      usage_error("adam_step: tensor shape mismatch");
    adam_update(m.values(), g[i].second->values(), state.first[i].values(), state.second[i].values(), state.step, config);
    ++i;
  });
}

namespace {

void accumulate(ModelParams& sum, const ModelParams& g) {
  std::vector<const Matrix*> src;
  g.for_each([&](const std::string&, const Matrix& m) { src.push_back(&m); });
  std::size_t i = 0;
  sum.for_each([&](const std::string&, Matrix& m) { axpy(1.0, *src[i++], m); });
}

void scale(ModelParams& p, double s) {
  p.for_each([&](const std::string&, Matrix& m) {
    for (double& v : m.values()) v *= s;
  });
}

}  // namespace

TrainResult train(const TimeSeries& series, const ModelConfig& model_config, const TrainConfig& train_config,
                  const EpochCallback& on_epoch) {
  return train(init_params(model_config), series, model_config, train_config, on_epoch);
}

TrainResult train(ModelParams initial, const TimeSeries& series, const ModelConfig& model_config,
                  const TrainConfig& train_config, const EpochCallback& on_epoch) {
  model_config.validate();
  train_config.validate();
  series.validate();
  if (series.labels) usage_error("train: training series must be unlabeled");
  if (series.features() != model_config.features)
    data_error("train: series has " + std::to_string(series.features()) + " features, model expects " +
               std::to_string(model_config.features));
  const std::size_t stride = train_config.window_stride == 0 ? model_config.window : train_config.window_stride;
  const std::vector<Matrix> windows = sliding_windows(series.values, model_config.window, stride);

  TrainResult result{std::move(initial), {}};
  AdamState adam = AdamState::for_params(result.params);
  Rng rng(train_config.seed);
  std::vector<std::size_t> order(windows.size());

  for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += train_config.batch_size) {
      const std::size_t bn = std::min(train_config.batch_size, order.size() - b0);
      std::vector<LossAndGrad> slots(bn);
      auto work = [&](std::size_t i) { slots[i] = loss_and_grad(windows[order[b0 + i]], result.params, model_config); };
      const std::size_t workers = std::min(train_config.threads, bn);
      if (workers <= 1) {
        for (std::size_t i = 0; i < bn; ++i) work(i);
      } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
          pool.emplace_back([&, w] {
            try {
              for (std::size_t i = w; i < bn; i += workers) work(i);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        for (auto& t : pool) t.join();
        for (auto& e : errors)
          if (e) std::rethrow_exception(e);
      }
      // Ordered reduction keeps threaded and serial runs bit-identical.
      ModelParams grad = std::move(slots[0].grads);
      loss_sum += slots[0].loss;
      for (std::size_t i = 1; i < bn; ++i) {
        accumulate(grad, slots[i].grads);
        loss_sum += slots[i].loss;
      }
      scale(grad, 1.0 / static_cast<double>(bn));
      adam_step(result.params, grad, adam, train_config);
    }

    EpochLog log{epoch, loss_sum / static_cast<double>(windows.size()),
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()};
    if (!std::isfinite(log.mean_loss)) numeric_error("epoch " + std::to_string(epoch) + ": non-finite mean loss");
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

}  // namespace patchdelta
