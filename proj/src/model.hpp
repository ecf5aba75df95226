// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Reconstruction models: patchify -> input projection -> core -> output
// projection, scored against the patched input with MSE.
//
// Variants:
//   patched-deltanet    gated delta core over P-step patches
//   no-gate             same with beta forced to 1 (no gate parameters)
//   pointwise           gated delta core with P = 1
//   patched-attention   softmax attention block over P-step patches

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>

#include "attention.hpp"
#include "deltanet.hpp"
#include "patching.hpp"

namespace patchdelta {

enum class Variant { patched_deltanet, no_gate, pointwise, patched_attention };

std::string_view variant_name(Variant v) noexcept;
// Throws usage for an unknown name.
Variant parse_variant(std::string_view name);
inline bool uses_delta_core(Variant v) noexcept { return v != Variant::patched_attention; }

struct ModelConfig {
  Variant variant = Variant::patched_deltanet;
  std::size_t window = 100;  // L
  std::size_t patch = 10;    // P
  std::size_t features = 38; // F
  std::size_t d_model = 128;
  std::size_t d_ff = 1024;   // attention variant only
  std::uint64_t seed = 0;

  // Reference defaults for a variant (pointwise gets P = 1).
  static ModelConfig defaults(Variant v);

  std::size_t tokens() const noexcept { return window / patch; }
  std::size_t token_width() const noexcept { return patch * features; }
  bool gated() const noexcept { return variant != Variant::no_gate; }
  void validate() const;
};

struct ModelParams {
  Matrix w_in, b_in;    // (P*F) x d, 1 x d
  std::variant<DeltaParams, AttnParams> core;
  Matrix w_out, b_out;  // d x (P*F), 1 x (P*F)

  // Visits every stored tensor in a fixed order with a qualified name.
  void for_each(const std::function<void(const std::string&, Matrix&)>& f);
  void for_each(const std::function<void(const std::string&, const Matrix&)>& f) const;
};

// Zero-filled tensors of the right shapes.
ModelParams allocate_params(const ModelConfig& config);
ModelParams init_params(const ModelConfig& config);
ModelParams zeros_like(const ModelParams& params);

// Closed-form parameter count for a configuration.
std::size_t param_count(const ModelConfig& config);
// Sum of the sizes of all stored tensors.
std::size_t stored_param_count(const ModelParams& params);

struct ModelForward {
  PatchTokens input;
  PatchTokens reconstruction;
  Matrix hidden;    // N x d after the input projection
  Matrix core_out;  // N x d
  std::variant<std::monostate, DeltaCache, AttnCache> core_cache;
  std::size_t core_steps = 0;  // recurrence steps (delta core only)
};

// window is L x F. keep_cache = false is inference-only.
ModelForward model_forward(const Matrix& window, const ModelParams& params, const ModelConfig& config,
                           bool keep_cache = true);

double reconstruction_loss(const Matrix& x, const Matrix& x_hat);
inline double reconstruction_loss(const PatchTokens& x, const PatchTokens& x_hat) {
  return reconstruction_loss(x.tokens, x_hat.tokens);
}

// Gradients of scale * reconstruction_loss for a cached forward pass.
ModelParams model_backward(const ModelForward& fwd, const ModelParams& params, double scale = 1.0);

struct LossAndGrad {
  double loss = 0.0;
  ModelParams grads;
};

LossAndGrad loss_and_grad(const Matrix& window, const ModelParams& params, const ModelConfig& config);

}  // namespace patchdelta
