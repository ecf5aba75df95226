// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "model.hpp"

#include <cmath>
#include <type_traits>

#include "errors.hpp"

namespace patchdelta {

std::string_view variant_name(Variant v) noexcept {
  switch (v) {
    case Variant::patched_deltanet: return "patched-deltanet";
    case Variant::no_gate: return "no-gate";
    case Variant::pointwise: return "pointwise";
    case Variant::patched_attention: return "patched-attention";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::patched_deltanet, Variant::no_gate, Variant::pointwise, Variant::patched_attention})
    if (name == variant_name(v)) return v;
  usage_error("unknown variant '" + std::string(name) +
              "' (expected patched-deltanet, no-gate, pointwise or patched-attention)");
}

ModelConfig ModelConfig::defaults(Variant v) {
  ModelConfig c;
  c.variant = v;
  if (v == Variant::pointwise) c.patch = 1;
  return c;
}

void ModelConfig::validate() const {
  if (window == 0 || features == 0 || d_model == 0) usage_error("model config: window, features and d_model must be positive");
  if (patch < 1 || patch > window)
    usage_error("model config: patch " + std::to_string(patch) + " outside [1, window=" + std::to_string(window) + "]");
  if (variant == Variant::pointwise && patch != 1)
    usage_error("model config: pointwise variant requires patch 1, got " + std::to_string(patch));
  if (variant == Variant::patched_attention && d_ff == 0) usage_error("model config: d_ff must be positive");
}

void ModelParams::for_each(const std::function<void(const std::string&, Matrix&)>& f) {
  f("in.w", w_in);
  f("in.b", b_in);
  std::visit([&](auto& core) { core.for_each([&](const char* name, Matrix& m) { f(std::string("core.") + name, m); }); },
             core);
  f("out.w", w_out);
  f("out.b", b_out);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Matrix&)>& f) const {
  const_cast<ModelParams*>(this)->for_each([&](const std::string& name, Matrix& m) { f(name, m); });
}

ModelParams allocate_params(const ModelConfig& config) {
  config.validate();
  const std::size_t width = config.token_width();
  const std::size_t d = config.d_model;
  ModelParams p;
  p.w_in = Matrix(width, d), p.b_in = Matrix(1, d);
  if (uses_delta_core(config.variant))
    p.core = DeltaParams::zeros(d, d, config.gated());
  else
    p.core = AttnParams::zeros(d, config.d_ff, config.tokens());
  p.w_out = Matrix(d, width), p.b_out = Matrix(1, width);
  return p;
}

ModelParams init_params(const ModelConfig& config) {
  ModelParams p = allocate_params(config);
  Rng rng(config.seed);
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(config.token_width()));
  init_uniform(p.w_in, in_bound, rng);
  init_uniform(p.b_in, in_bound, rng);
  std::visit(
      [&](auto& core) {
        if constexpr (std::is_same_v<std::decay_t<decltype(core)>, DeltaParams>)
          init_delta_params(core, rng);
        else
          init_attn_params(core, rng);
      },
      p.core);
  const double out_bound = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  init_uniform(p.w_out, out_bound, rng);
  init_uniform(p.b_out, out_bound, rng);
  return p;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams z = params;
  z.for_each([](const std::string&, Matrix& m) { m.fill(0.0); });
  return z;
}

std::size_t param_count(const ModelConfig& config) {
  config.validate();
  const std::size_t width = config.token_width();
  const std::size_t d = config.d_model;
  const std::size_t projections = (width * d + d) + (d * width + width);
  if (uses_delta_core(config.variant)) {
    const std::size_t per_projection = d * d + d;
    return projections + (config.gated() ? 4 : 3) * per_projection;
  }
  const std::size_t ff = config.d_ff;
  return projections + config.tokens() * d + 4 * (d * d + d) + (d * ff + ff) + (ff * d + d);
}

std::size_t stored_param_count(const ModelParams& params) {
  std::size_t n = 0;
  params.for_each([&](const std::string&, const Matrix& m) { n += m.size(); });
  return n;
}

ModelForward model_forward(const Matrix& window, const ModelParams& params, const ModelConfig& config,
                           bool keep_cache) {
  if (window.rows() != config.window || window.cols() != config.features)
    usage_error("model_forward: window " + std::to_string(window.rows()) + "x" + std::to_string(window.cols()) +
                " does not match config " + std::to_string(config.window) + "x" + std::to_string(config.features));
  ModelForward fwd;
  fwd.input = patchify(window, config.patch);
  fwd.hidden = matmul(fwd.input.tokens, params.w_in);
  add_row_inplace(fwd.hidden, params.b_in);

  if (const auto* delta = std::get_if<DeltaParams>(&params.core)) {
    DeltaForward core = delta_forward(fwd.hidden, *delta, keep_cache);
    fwd.core_out = std::move(core.outputs);
    fwd.core_steps = core.steps;
    if (keep_cache) fwd.core_cache = std::move(core.cache);
  } else {
    AttnForward core = attention_forward(fwd.hidden, std::get<AttnParams>(params.core), keep_cache);
    fwd.core_out = std::move(core.outputs);
    if (keep_cache) fwd.core_cache = std::move(core.cache);
  }

  fwd.reconstruction = PatchTokens{matmul(fwd.core_out, params.w_out), config.patch, config.features};
  add_row_inplace(fwd.reconstruction.tokens, params.b_out);
  if (!keep_cache) fwd.hidden = Matrix();
  return fwd;
}

double reconstruction_loss(const Matrix& x, const Matrix& x_hat) {
  if (!x.same_shape(x_hat)) usage_error("reconstruction_loss: shape mismatch");
  if (x.empty()) usage_error("reconstruction_loss: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = x_hat.data()[i] - x.data()[i];
    total += e * e;
  }
  return total / static_cast<double>(x.size());
}

ModelParams model_backward(const ModelForward& fwd, const ModelParams& params, double scale) {
  if (std::holds_alternative<std::monostate>(fwd.core_cache))
    usage_error("model_backward: forward pass was run without a cache");
  const Matrix& x = fwd.input.tokens;
  const Matrix& x_hat = fwd.reconstruction.tokens;
  Matrix d_out(x.rows(), x.cols());
  const double coeff = 2.0 * scale / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d_out.data()[i] = coeff * (x_hat.data()[i] - x.data()[i]);

  ModelParams g;
  g.w_out = matmul_tn(fwd.core_out, d_out);
  g.b_out = column_sums(d_out);
  const Matrix d_core = matmul_nt(d_out, params.w_out);

  Matrix d_hidden;
  if (const auto* cache = std::get_if<DeltaCache>(&fwd.core_cache)) {
    DeltaBackward b = delta_backward(*cache, d_core, std::get<DeltaParams>(params.core));
    g.core = std::move(b.grads);
    d_hidden = std::move(b.input_grads);
  } else {
    AttnBackward b = attention_backward(std::get<AttnCache>(fwd.core_cache), d_core, std::get<AttnParams>(params.core));
    g.core = std::move(b.grads);
    d_hidden = std::move(b.input_grads);
  }
  g.w_in = matmul_tn(x, d_hidden);
  g.b_in = column_sums(d_hidden);
  return g;
}

LossAndGrad loss_and_grad(const Matrix& window, const ModelParams& params, const ModelConfig& config) {
  const ModelForward fwd = model_forward(window, params, config, true);
  LossAndGrad out;
  out.loss = reconstruction_loss(fwd.input, fwd.reconstruction);
  if (!std::isfinite(out.loss)) numeric_error("reconstruction loss is not finite");
  out.grads = model_backward(fwd, params, 1.0);
  return out;
}

}  // namespace patchdelta
