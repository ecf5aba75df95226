// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "deltanet.hpp"

#include <cmath>
#include <string>

#include "errors.hpp"

namespace patchdelta {

DeltaParams DeltaParams::zeros(std::size_t input_dim, std::size_t head_dim, bool gated) {
  DeltaParams p;
  p.w_q = Matrix(input_dim, head_dim), p.b_q = Matrix(1, head_dim);
  p.w_k = Matrix(input_dim, head_dim), p.b_k = Matrix(1, head_dim);
  p.w_v = Matrix(input_dim, head_dim), p.b_v = Matrix(1, head_dim);
  if (gated) p.w_beta = Matrix(input_dim, head_dim), p.b_beta = Matrix(1, head_dim);
  p.gated = gated;
  return p;
}

void init_delta_params(DeltaParams& params, Rng& rng) {
  const double fan_in = static_cast<double>(params.input_dim());
  const double bound = 1.0 / std::sqrt(fan_in);
  const double key_bound = 1.0 / fan_in;
  params.for_each([&](std::string_view name, Matrix& m) {
    init_uniform(m, name == "w_k" || name == "b_k" ? key_bound : bound, rng);
  });
}

namespace {

void affine_row(std::span<const double> x, const Matrix& w, const Matrix& b, std::vector<double>& out) {
  out.assign(b.data(), b.data() + b.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double* __restrict wr = w.row(i).data();
    double* __restrict o = out.data();
#pragma omp simd
    for (std::size_t j = 0; j < out.size(); ++j) o[j] += xi * wr[j];
  }
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  Matrix y(x.rows(), w.cols());
  gemm_accumulate(x.rows(), w.cols(), x.cols(), x.data(), x.cols(), w.data(), w.cols(), y.data(), y.cols());
  add_row_inplace(y, b);
  return y;
}

// One recurrence step on S in place. Row i of the new state depends only on
// row i of the old one, so the read (S k), the write and the output read
// (S' q) fuse into a single pass over S.
void step_inplace(double* s, std::size_t d, const double* q, const double* k, const double* v, const double* beta,
                  double* delta, double* out) noexcept {
  for (std::size_t i = 0; i < d; ++i) {
    double* __restrict row = s + i * d;
    double recalled = 0.0;
#pragma omp simd reduction(+ : recalled)
    for (std::size_t j = 0; j < d; ++j) recalled += row[j] * k[j];
    const double di = v[i] - recalled;
    const double bi = beta[i];
    double o = 0.0;
#pragma omp simd reduction(+ : o)
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = bi * row[j] + di * k[j];
      o += row[j] * q[j];
    }
    delta[i] = di;
    out[i] = o;
  }
}

void check_step(std::span<const double> delta, std::span<const double> out, std::size_t t) {
  if (!all_finite(delta) || !all_finite(out)) numeric_error("delta recurrence: non-finite state at step " + std::to_string(t));
}

}  // namespace

Projection project(std::span<const double> x, const DeltaParams& params) {
  if (x.size() != params.input_dim())
    usage_error("project: token width " + std::to_string(x.size()) + " != " + std::to_string(params.input_dim()));
  Projection p;
  affine_row(x, params.w_q, params.b_q, p.q);
  affine_row(x, params.w_k, params.b_k, p.k);
  affine_row(x, params.w_v, params.b_v, p.v);
  if (params.gated) {
    affine_row(x, params.w_beta, params.b_beta, p.beta);
    for (double& b : p.beta) b = sigmoid(b);
  } else {
    p.beta.assign(params.head_dim(), 1.0);
  }
  return p;
}

DeltaStepResult delta_step(const DeltaState& state, std::span<const double> q, std::span<const double> k,
                           std::span<const double> v, std::span<const double> beta) {
  const std::size_t d = state.s.rows();
  if (state.s.cols() != d || q.size() != d || k.size() != d || v.size() != d || beta.size() != d)
    usage_error("delta_step: inconsistent dimensions");
  DeltaStepResult r{state, std::vector<double>(d)};
  std::vector<double> delta(d);
  step_inplace(r.state.s.data(), d, q.data(), k.data(), v.data(), beta.data(), delta.data(), r.output.data());
  check_step(delta, r.output, 0);
  return r;
}

DeltaForward delta_forward(const Matrix& tokens, const DeltaParams& params, bool keep_cache) {
  if (tokens.cols() != params.input_dim())
    usage_error("delta_forward: token width " + std::to_string(tokens.cols()) + " != " +
                std::to_string(params.input_dim()));
  const std::size_t n = tokens.rows();
  const std::size_t d = params.head_dim();

  // Projections do not depend on the state, so they run as whole-sequence GEMMs.
  Matrix q = affine(tokens, params.w_q, params.b_q);
  Matrix k = affine(tokens, params.w_k, params.b_k);
  Matrix v = affine(tokens, params.w_v, params.b_v);
  Matrix beta;
  if (params.gated) {
    beta = affine(tokens, params.w_beta, params.b_beta);
    for (double& b : beta.values()) b = sigmoid(b);
  } else {
    beta = Matrix(n, d, 1.0);
  }

  DeltaForward fwd;
  fwd.outputs = Matrix(n, d);
  Matrix delta(n, d);
  Matrix state(d, d);
  if (keep_cache) {
    fwd.cache.states.reserve(n + 1);
    fwd.cache.states.push_back(state);
  }
  for (std::size_t t = 0; t < n; ++t) {
    step_inplace(state.data(), d, q.row(t).data(), k.row(t).data(), v.row(t).data(), beta.row(t).data(),
                 delta.row(t).data(), fwd.outputs.row(t).data());
    check_step(delta.row(t), fwd.outputs.row(t), t);
    ++fwd.steps;
    if (keep_cache) fwd.cache.states.push_back(state);
  }
  if (keep_cache) {
    fwd.cache.inputs = tokens;
    fwd.cache.q = std::move(q);
    fwd.cache.k = std::move(k);
    fwd.cache.v = std::move(v);
    fwd.cache.beta = std::move(beta);
    fwd.cache.delta = std::move(delta);
  }
  return fwd;
}

DeltaBackward delta_backward(const DeltaCache& cache, const Matrix& output_grads, const DeltaParams& params) {
  const std::size_t n = cache.steps();
  const std::size_t d = params.head_dim();
  if (output_grads.rows() != n || output_grads.cols() != d)
    usage_error("delta_backward: output grads " + std::to_string(output_grads.rows()) + "x" +
                std::to_string(output_grads.cols()) + " do not match cache of " + std::to_string(n) + " steps");

  Matrix dq(n, d), dk(n, d), dv(n, d), dpre(n, d);
  Matrix carry(d, d);  // dL/dS_t flowing back from later steps
  for (std::size_t t = n; t-- > 0;) {
    const Matrix& prev = cache.states[t];
    const Matrix& cur = cache.states[t + 1];
    const double* __restrict g = output_grads.row(t).data();
    const double* __restrict q = cache.q.row(t).data();
    const double* __restrict k = cache.k.row(t).data();
    const double* __restrict beta = cache.beta.row(t).data();
    const double* __restrict delta = cache.delta.row(t).data();
    double* __restrict dq_t = dq.row(t).data();
    double* __restrict dk_t = dk.row(t).data();
    double* __restrict dv_t = dv.row(t).data();
    double* __restrict dpre_t = dpre.row(t).data();

    for (std::size_t i = 0; i < d; ++i) {
      double* __restrict ds = carry.row(i).data();
      const double* __restrict sp = prev.row(i).data();
      const double* __restrict sc = cur.row(i).data();
      const double gi = g[i];
      double dbeta = 0.0, ddelta = 0.0;
#pragma omp simd reduction(+ : dbeta, ddelta)
      for (std::size_t j = 0; j < d; ++j) {
        ds[j] += gi * q[j];  // o = S_t q
        dq_t[j] += sc[j] * gi;
        dbeta += ds[j] * sp[j];
        ddelta += ds[j] * k[j];
      }
      const double di = delta[i];
      const double bi = beta[i];
#pragma omp simd
      for (std::size_t j = 0; j < d; ++j) {
        // S_t = diag(beta) S_{t-1} + delta k^T with delta = v - S_{t-1} k
        dk_t[j] += ds[j] * di - sp[j] * ddelta;
        ds[j] = bi * ds[j] - ddelta * k[j];
      }
      dv_t[i] = ddelta;
      dpre_t[i] = dbeta * bi * (1.0 - bi);
    }
  }

  DeltaBackward out{DeltaParams::zeros(params.input_dim(), d, params.gated), Matrix()};
  const Matrix xt = transpose(cache.inputs);
  auto param_grad = [&](const Matrix& dy, Matrix& dw, Matrix& db) {
    dw = matmul(xt, dy);
    db = column_sums(dy);
  };
  param_grad(dq, out.grads.w_q, out.grads.b_q);
  param_grad(dk, out.grads.w_k, out.grads.b_k);
  param_grad(dv, out.grads.w_v, out.grads.b_v);
  out.input_grads = matmul_nt(dq, params.w_q);
  axpy(1.0, matmul_nt(dk, params.w_k), out.input_grads);
  axpy(1.0, matmul_nt(dv, params.w_v), out.input_grads);
  if (params.gated) {
    param_grad(dpre, out.grads.w_beta, out.grads.b_beta);
    axpy(1.0, matmul_nt(dpre, params.w_beta), out.input_grads);
  }
  check_finite(out.input_grads, "delta_backward");
  return out;
}

}  // namespace patchdelta
