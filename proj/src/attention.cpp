// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "attention.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "errors.hpp"

namespace patchdelta {

AttnParams AttnParams::zeros(std::size_t dim, std::size_t ff_dim, std::size_t max_tokens) {
  AttnParams p;
  p.pos = Matrix(max_tokens, dim);
  for (Matrix* w : {&p.w_q, &p.w_k, &p.w_v, &p.w_o}) *w = Matrix(dim, dim);
  for (Matrix* b : {&p.b_q, &p.b_k, &p.b_v, &p.b_o, &p.b_2}) *b = Matrix(1, dim);
  p.w_1 = Matrix(dim, ff_dim);
  p.b_1 = Matrix(1, ff_dim);
  p.w_2 = Matrix(ff_dim, dim);
  return p;
}

void init_attn_params(AttnParams& params, Rng& rng) {
  const double d_bound = 1.0 / std::sqrt(static_cast<double>(params.dim()));
  const double ff_bound = 1.0 / std::sqrt(static_cast<double>(params.ff_dim()));
  params.for_each([&](std::string_view name, Matrix& m) {
    init_uniform(m, name == "w_2" || name == "b_2" ? ff_bound : d_bound, rng);
  });
}

double gelu(double x) noexcept { return 0.5 * x * (1.0 + std::erf(x * (0.5 * std::numbers::sqrt2))); }

double gelu_grad(double x) noexcept {
  const double cdf = 0.5 * (1.0 + std::erf(x * (0.5 * std::numbers::sqrt2)));
  const double pdf = std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
  return cdf + x * pdf;
}

void softmax_rows(Matrix& logits) {
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto row = logits.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      total += v;
    }
    const double inv = 1.0 / total;
    for (double& v : row) v *= inv;
  }
}

Matrix softmax_rows_backward(const Matrix& weights, const Matrix& weight_grads) {
  if (!weights.same_shape(weight_grads)) usage_error("softmax_rows_backward: shape mismatch");
  Matrix out(weights.rows(), weights.cols());
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    const double inner = dot(weights.row(r), weight_grads.row(r));
    for (std::size_t c = 0; c < weights.cols(); ++c) out(r, c) = weights(r, c) * (weight_grads(r, c) - inner);
  }
  return out;
}

namespace {

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y = matmul(x, w);
  add_row_inplace(y, b);
  return y;
}

}  // namespace

AttnForward attention_forward(const Matrix& tokens, const AttnParams& params, bool keep_cache) {
  const std::size_t n = tokens.rows();
  const std::size_t d = params.dim();
  if (tokens.cols() != d)
    usage_error("attention_forward: token width " + std::to_string(tokens.cols()) + " != " + std::to_string(d));
  if (n > params.max_tokens())
    usage_error("attention_forward: " + std::to_string(n) + " tokens exceed positional table of " +
                std::to_string(params.max_tokens()));

  Matrix z = tokens;
  for (std::size_t t = 0; t < n; ++t) {
    auto zr = z.row(t);
    auto pr = params.pos.row(t);
    for (std::size_t j = 0; j < d; ++j) zr[j] += pr[j];
  }
  Matrix q = affine(z, params.w_q, params.b_q);
  Matrix k = affine(z, params.w_k, params.b_k);
  Matrix v = affine(z, params.w_v, params.b_v);

  Matrix weights = matmul_nt(q, k);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& s : weights.values()) s *= scale;
  softmax_rows(weights);
  Matrix context = matmul(weights, v);

  Matrix y1 = affine(context, params.w_o, params.b_o);
  axpy(1.0, z, y1);
  Matrix ff_pre = affine(y1, params.w_1, params.b_1);
  Matrix ff_act(ff_pre.rows(), ff_pre.cols());
  for (std::size_t i = 0; i < ff_pre.size(); ++i) ff_act.data()[i] = gelu(ff_pre.data()[i]);

  AttnForward fwd;
  fwd.outputs = affine(ff_act, params.w_2, params.b_2);
  axpy(1.0, y1, fwd.outputs);
  check_finite(fwd.outputs, "attention_forward");
  if (keep_cache) {
    fwd.cache = AttnCache{std::move(z),       std::move(q),  std::move(k),      std::move(v),     std::move(weights),
                          std::move(context), std::move(y1), std::move(ff_pre), std::move(ff_act)};
  }
  return fwd;
}

AttnBackward attention_backward(const AttnCache& c, const Matrix& output_grads, const AttnParams& params) {
  const std::size_t n = c.z.rows();
  const std::size_t d = params.dim();
  if (output_grads.rows() != n || output_grads.cols() != d)
    usage_error("attention_backward: output grads do not match cached forward pass");

  AttnBackward out{AttnParams::zeros(d, params.ff_dim(), params.max_tokens()), Matrix()};
  AttnParams& g = out.grads;

  // Feed-forward sublayer with residual.
  g.w_2 = matmul_tn(c.ff_act, output_grads);
  g.b_2 = column_sums(output_grads);
  Matrix d_ff = matmul_nt(output_grads, params.w_2);
  for (std::size_t i = 0; i < d_ff.size(); ++i) d_ff.data()[i] *= gelu_grad(c.ff_pre.data()[i]);
  g.w_1 = matmul_tn(c.y1, d_ff);
  g.b_1 = column_sums(d_ff);
  Matrix d_y1 = matmul_nt(d_ff, params.w_1);
  axpy(1.0, output_grads, d_y1);

  // Attention sublayer with residual.
  g.w_o = matmul_tn(c.context, d_y1);
  g.b_o = column_sums(d_y1);
  const Matrix d_context = matmul_nt(d_y1, params.w_o);
  const Matrix d_weights = matmul_nt(d_context, c.v);
  const Matrix d_v = matmul_tn(c.weights, d_context);
  Matrix d_logits = softmax_rows_backward(c.weights, d_weights);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& s : d_logits.values()) s *= scale;
  const Matrix d_q = matmul(d_logits, c.k);
  const Matrix d_k = matmul_tn(d_logits, c.q);

  g.w_q = matmul_tn(c.z, d_q), g.b_q = column_sums(d_q);
  g.w_k = matmul_tn(c.z, d_k), g.b_k = column_sums(d_k);
  g.w_v = matmul_tn(c.z, d_v), g.b_v = column_sums(d_v);

  Matrix d_z = std::move(d_y1);
  axpy(1.0, matmul_nt(d_q, params.w_q), d_z);
  axpy(1.0, matmul_nt(d_k, params.w_k), d_z);
  axpy(1.0, matmul_nt(d_v, params.w_v), d_z);
  for (std::size_t t = 0; t < n; ++t) std::copy(d_z.row(t).begin(), d_z.row(t).end(), g.pos.row(t).begin());
  out.input_grads = std::move(d_z);
  return out;
}

}  // namespace patchdelta
