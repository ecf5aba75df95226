// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Gated delta-rule recurrence over a token sequence.
//
// Per token x_t (row vector of width d_in):
//   q = x W_q + b_q,  k = x W_k + b_k,  v = x W_v + b_v
//   beta = sigmoid(x W_beta + b_beta)          (all ones when ungated)
//   delta = v - S_{t-1} k
//   S_t = diag(beta) S_{t-1} + delta k^T
//   o_t = S_t q
// with S_0 = 0 and S of shape d x d. Keys are not normalized.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "numerics.hpp"

namespace patchdelta {

struct DeltaParams {
  Matrix w_q, b_q;
  Matrix w_k, b_k;
  Matrix w_v, b_v;
  Matrix w_beta, b_beta;  // empty when ungated
  bool gated = true;

  static DeltaParams zeros(std::size_t input_dim, std::size_t head_dim, bool gated);

  std::size_t input_dim() const noexcept { return w_q.rows(); }
  std::size_t head_dim() const noexcept { return w_q.cols(); }

  template <class F>
  void for_each(F&& f) { visit(*this, f); }
  template <class F>
  void for_each(F&& f) const { visit(*this, f); }

 private:
  template <class Self, class F>
  static void visit(Self& p, F& f) {
    f("w_q", p.w_q), f("b_q", p.b_q), f("w_k", p.w_k), f("b_k", p.b_k), f("w_v", p.w_v), f("b_v", p.b_v);
    if (p.gated) f("w_beta", p.w_beta), f("b_beta", p.b_beta);
  }
};

// Uniform init with bound 1/sqrt(d_in); the key projection uses 1/d_in so
// that |k|^2 starts well below 1 and the unnormalized recurrence is
// contractive from the first step.
void init_delta_params(DeltaParams& params, Rng& rng);

struct Projection {
  std::vector<double> q, k, v, beta;
};

Projection project(std::span<const double> x, const DeltaParams& params);

struct DeltaState {
  Matrix s;
  static DeltaState zeros(std::size_t dim) { return {Matrix(dim, dim)}; }
};

struct DeltaStepResult {
  DeltaState state;
  std::vector<double> output;
};

DeltaStepResult delta_step(const DeltaState& state, std::span<const double> q, std::span<const double> k,
                           std::span<const double> v, std::span<const double> beta);

struct DeltaCache {
  Matrix inputs;              // N x d_in
  Matrix q, k, v, beta;       // N x d
  Matrix delta;               // N x d
  std::vector<Matrix> states; // S_0 .. S_N

  std::size_t steps() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

struct DeltaForward {
  Matrix outputs;  // N x d
  DeltaCache cache;
  std::size_t steps = 0;
};

// keep_cache = false skips the per-step state snapshots (inference).
DeltaForward delta_forward(const Matrix& tokens, const DeltaParams& params, bool keep_cache = true);

struct DeltaBackward {
  DeltaParams grads;
  Matrix input_grads;  // N x d_in
};

DeltaBackward delta_backward(const DeltaCache& cache, const Matrix& output_grads, const DeltaParams& params);

}  // namespace patchdelta
