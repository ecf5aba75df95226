// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include <doctest.h>

#include <cmath>

#include "deltanet.hpp"
#include "errors.hpp"
#include "support/oracles.hpp"

using namespace patchdelta;
using patchdelta::testing::random_matrix;

namespace {

// Explicit-matrix form of one step: S' = diag(beta) S + (v - S k) k^T, o = S' q.
std::pair<Matrix, std::vector<double>> reference_step(const Matrix& s, const std::vector<double>& q,
                                                      const std::vector<double>& k, const std::vector<double>& v,
                                                      const std::vector<double>& beta) {
  const std::size_t d = s.rows();
  Matrix kcol(d, 1);
  for (std::size_t i = 0; i < d; ++i) kcol(i, 0) = k[i];
  const Matrix sk = matmul(s, kcol);
  std::vector<double> delta(d);
  for (std::size_t i = 0; i < d; ++i) delta[i] = v[i] - sk(i, 0);
  Matrix next(d, d);
  const Matrix write = outer(delta, k);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) next(i, j) = beta[i] * s(i, j) + write(i, j);
  std::vector<double> o(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) o[i] += next(i, j) * q[j];
  return {next, o};
}

std::vector<double> randvec(std::size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

DeltaParams random_params(std::size_t din, std::size_t d, bool gated, std::uint64_t seed) {
  DeltaParams p = DeltaParams::zeros(din, d, gated);
  Rng rng(seed);
  init_delta_params(p, rng);
  return p;
}

}  // namespace

TEST_SUITE("deltanet") {
  TEST_CASE("single step matches the explicit matrix recurrence") {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t d = 1 + rng.below(9);
      DeltaState st{random_matrix(d, d, rng)};
      const auto q = randvec(d, rng), k = randvec(d, rng, 0.3), v = randvec(d, rng);
      std::vector<double> beta(d);
      for (double& b : beta) b = rng.uniform();
      const DeltaStepResult r = delta_step(st, q, k, v, beta);
      const auto [s_ref, o_ref] = reference_step(st.s, q, k, v, beta);
      for (std::size_t i = 0; i < d * d; ++i) CHECK(r.state.s.data()[i] == doctest::Approx(s_ref.data()[i]).epsilon(1e-13));
      for (std::size_t i = 0; i < d; ++i) CHECK(r.output[i] == doctest::Approx(o_ref[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("a value already recalled for its key writes nothing") {
    Rng rng(2);
    const std::size_t d = 5;
    DeltaState st{random_matrix(d, d, rng)};
    const auto k = randvec(d, rng);
    std::vector<double> v(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) v[i] += st.s(i, j) * k[j];
    const std::vector<double> ones(d, 1.0);
    const DeltaStepResult r = delta_step(st, randvec(d, rng), k, v, ones);
    for (std::size_t i = 0; i < d * d; ++i) CHECK(r.state.s.data()[i] == doctest::Approx(st.s.data()[i]).epsilon(1e-12));
  }

  TEST_CASE("a unit key stores its value exactly when ungated") {
    const std::size_t d = 4;
    const std::vector<double> e2{0, 0, 1, 0}, v{3, -1, 2, 5}, ones(d, 1.0);
    DeltaStepResult r = delta_step(DeltaState::zeros(d), e2, e2, v, ones);
    for (std::size_t i = 0; i < d; ++i) CHECK(r.output[i] == v[i]);
    // Overwriting the same key replaces the value rather than adding to it.
    const std::vector<double> w{1, 1, 1, 1};
    r = delta_step(r.state, e2, e2, w, ones);
    for (std::size_t i = 0; i < d; ++i) CHECK(r.output[i] == doctest::Approx(1.0));
  }

  TEST_CASE("gate zero forgets the previous state") {
    Rng rng(3);
    const std::size_t d = 3;
    DeltaState st{random_matrix(d, d, rng)};
    const auto q = randvec(d, rng), k = randvec(d, rng), v = randvec(d, rng);
    const std::vector<double> zeros(d, 0.0);
    const DeltaStepResult r = delta_step(st, q, k, v, zeros);
    const Matrix expect = outer(std::vector<double>{v[0] - dot(st.s.row(0), k), v[1] - dot(st.s.row(1), k),
                                                    v[2] - dot(st.s.row(2), k)},
                                k);
    for (std::size_t i = 0; i < d * d; ++i) CHECK(r.state.s.data()[i] == doctest::Approx(expect.data()[i]));
  }

  TEST_CASE("sequence forward composes single steps and counts them") {
    const DeltaParams p = random_params(6, 4, true, 4);
    Rng rng(5);
    const Matrix x = random_matrix(7, 6, rng);
    const DeltaForward f = delta_forward(x, p);
    CHECK(f.steps == 7);
    CHECK(f.cache.steps() == 7);
    DeltaState st = DeltaState::zeros(4);
    for (std::size_t t = 0; t < 7; ++t) {
      const Projection pr = project(x.row(t), p);
      const DeltaStepResult r = delta_step(st, pr.q, pr.k, pr.v, pr.beta);
      for (std::size_t i = 0; i < 4; ++i) CHECK(f.outputs(t, i) == doctest::Approx(r.output[i]).epsilon(1e-13));
      st = r.state;
      for (std::size_t i = 0; i < 16; ++i)
        CHECK(f.cache.states[t + 1].data()[i] == doctest::Approx(st.s.data()[i]).epsilon(1e-13));
    }
    const DeltaForward lean = delta_forward(x, p, false);
    CHECK(lean.outputs == f.outputs);
    CHECK(lean.steps == 7);
    CHECK(lean.cache.states.empty());
  }

  TEST_CASE("ungated parameters hold no gate tensors and use beta = 1") {
    DeltaParams p = random_params(3, 2, false, 6);
    std::vector<std::string> names;
    p.for_each([&](std::string_view n, const Matrix&) { names.emplace_back(n); });
    CHECK(names == std::vector<std::string>{"w_q", "b_q", "w_k", "b_k", "w_v", "b_v"});
    const Projection pr = project(std::vector<double>{1, 2, 3}, p);
    CHECK(pr.beta == std::vector<double>{1.0, 1.0});
  }

  TEST_CASE("backward matches central differences of a linear functional") {
    for (bool gated : {true, false}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const DeltaParams p = random_params(5, 3, gated, 10 + seed);
        Rng rng(20 + seed);
        const Matrix x = random_matrix(6, 5, rng);
        const Matrix g = random_matrix(6, 3, rng);
        const auto functional = [&](const DeltaParams& pp, const Matrix& xx) {
          const Matrix o = delta_forward(xx, pp, false).outputs;
          double s = 0;
          for (std::size_t i = 0; i < o.size(); ++i) s += o.data()[i] * g.data()[i];
          return s;
        };
        const DeltaBackward b = delta_backward(delta_forward(x, p).cache, g, p);
        const double h = 1e-6;
        Matrix xp = x;
        for (std::size_t i = 0; i < x.size(); ++i) {
          const double saved = xp.data()[i];
          xp.data()[i] = saved + h;
          const double up = functional(p, xp);
          xp.data()[i] = saved - h;
          const double down = functional(p, xp);
          xp.data()[i] = saved;
          CHECK(b.input_grads.data()[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
        }
        DeltaParams pp = p;
        std::vector<const Matrix*> grads;
        b.grads.for_each([&](std::string_view, const Matrix& m) { grads.push_back(&m); });
        std::size_t t = 0;
        pp.for_each([&](std::string_view, Matrix& m) {
          const Matrix& gm = *grads[t++];
          for (std::size_t i = 0; i < m.size(); ++i) {
            const double saved = m.data()[i];
            m.data()[i] = saved + h;
            const double up = functional(pp, x);
            m.data()[i] = saved - h;
            const double down = functional(pp, x);
            m.data()[i] = saved;
            CHECK(gm.data()[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
          }
        });
      }
    }
  }

  TEST_CASE("state stays bounded over long unit-variance sequences at initialization") {
    const DeltaParams p = random_params(38, 128, true, 7);
    Rng rng(8);
    const Matrix x = random_matrix(4000, 38, rng);
    const DeltaForward f = delta_forward(x, p, false);
    CHECK(f.steps == 4000);
    double mx = 0;
    for (double v : f.outputs.values()) mx = std::max(mx, std::abs(v));
    CHECK(mx < 1e3);
  }

  TEST_CASE("an exploding recurrence is reported as a numeric error") {
    DeltaParams p = DeltaParams::zeros(2, 2, false);
    p.b_k.fill(30.0);
    p.b_v.fill(1.0);
    p.b_q.fill(1.0);
    const Matrix x(400, 2);
    try {
      delta_forward(x, p, false);
      FAIL("expected numeric error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::numeric);
    }
  }

  TEST_CASE("width mismatch is a usage error") {
    const DeltaParams p = random_params(4, 2, true, 9);
    CHECK_THROWS_AS(delta_forward(Matrix(3, 5), p), Error);
  }
}
