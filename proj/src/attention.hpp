// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Single-head softmax self-attention block used as the quadratic baseline
// core. Learned positional embeddings are added to the tokens, attention is
// bidirectional (no causal mask), and the block is
//   z  = x + pos
//   y1 = z + (softmax(q k^T / sqrt(d)) v) W_o + b_o
//   y  = y1 + gelu(y1 W_1 + b_1) W_2 + b_2
// with the exact erf GELU. The N x N weight matrix is materialized.

#pragma once

#include <cstddef>

#include "numerics.hpp"

namespace patchdelta {

struct AttnParams {
  Matrix pos;  // max_tokens x d
  Matrix w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;
  Matrix w_1, b_1;  // d x d_ff
  Matrix w_2, b_2;  // d_ff x d

  static AttnParams zeros(std::size_t dim, std::size_t ff_dim, std::size_t max_tokens);

  std::size_t dim() const noexcept { return w_q.rows(); }
  std::size_t ff_dim() const noexcept { return w_1.cols(); }
  std::size_t max_tokens() const noexcept { return pos.rows(); }

  template <class F>
  void for_each(F&& f) { visit(*this, f); }
  template <class F>
  void for_each(F&& f) const { visit(*this, f); }

 private:
  template <class Self, class F>
  static void visit(Self& p, F& f) {
    f("pos", p.pos);
    f("w_q", p.w_q), f("b_q", p.b_q), f("w_k", p.w_k), f("b_k", p.b_k);
    f("w_v", p.w_v), f("b_v", p.b_v), f("w_o", p.w_o), f("b_o", p.b_o);
    f("w_1", p.w_1), f("b_1", p.b_1), f("w_2", p.w_2), f("b_2", p.b_2);
  }
};

void init_attn_params(AttnParams& params, Rng& rng);

struct AttnCache {
  Matrix z, q, k, v;
  Matrix weights;  // N x N softmax rows
  Matrix context, y1, ff_pre, ff_act;
};

struct AttnForward {
  Matrix outputs;  // N x d
  AttnCache cache;
};

// keep_cache = false keeps only what inference needs.
AttnForward attention_forward(const Matrix& tokens, const AttnParams& params, bool keep_cache = true);

struct AttnBackward {
  AttnParams grads;
  Matrix input_grads;
};

AttnBackward attention_backward(const AttnCache& cache, const Matrix& output_grads, const AttnParams& params);

// Row-wise softmax in place (max-subtracted).
void softmax_rows(Matrix& logits);
// Gradient w.r.t. the logits given softmax rows and dL/d(weights).
Matrix softmax_rows_backward(const Matrix& weights, const Matrix& weight_grads);

double gelu(double x) noexcept;
double gelu_grad(double x) noexcept;

}  // namespace patchdelta
