// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include <doctest.h>

#include <cmath>

#include "alloc_tracker.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "support/oracles.hpp"

using namespace patchdelta;
using patchdelta::testing::random_matrix;

namespace {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += static_cast<long double>(a(i, p)) * b(p, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

std::size_t rank_by_elimination(Matrix m, double tol = 1e-9) {
  std::size_t rank = 0;
  for (std::size_t col = 0; col < m.cols() && rank < m.rows(); ++col) {
    std::size_t pivot = rank;
    for (std::size_t r = rank; r < m.rows(); ++r)
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    if (std::abs(m(pivot, col)) < tol) continue;
    for (std::size_t c = 0; c < m.cols(); ++c) std::swap(m(rank, c), m(pivot, c));
    for (std::size_t r = rank + 1; r < m.rows(); ++r) {
      const double f = m(r, col) / m(rank, col);
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) -= f * m(rank, c);
    }
    ++rank;
  }
  return rank;
}

}  // namespace

TEST_SUITE("numerics") {
  TEST_CASE("matmul of small known matrices") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    const Matrix b = Matrix::from_rows({{5, 6}, {7, 8}});
    CHECK(matmul(a, b) == Matrix::from_rows({{19, 22}, {43, 50}}));
    CHECK(matmul(a, Matrix::identity(2)) == a);
  }

  TEST_CASE("kernel agrees with a long-double reference over awkward shapes") {
    Rng rng(3);
    const std::size_t dims[][3] = {{1, 1, 1}, {3, 5, 7}, {4, 24, 24}, {5, 257, 25}, {37, 13, 29},
                                   {9, 300, 600}, {100, 100, 128}, {2, 1, 70}};
    for (const auto& d : dims) {
      const Matrix a = random_matrix(d[0], d[1], rng);
      const Matrix b = random_matrix(d[1], d[2], rng);
      CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) < 1e-11 * static_cast<double>(d[1]));
    }
  }

  TEST_CASE("gemm_accumulate adds into existing values with leading dimensions") {
    Rng rng(4);
    const Matrix a = random_matrix(6, 5, rng), b = random_matrix(5, 30, rng);
    Matrix c = random_matrix(6, 30, rng);
    Matrix expect = naive_matmul(a, b);
    axpy(1.0, c, expect);
    gemm_accumulate(6, 30, 5, a.data(), 5, b.data(), 30, c.data(), 30);
    CHECK(max_abs_diff(c, expect) < 1e-12);
  }

  TEST_CASE("matmul is associative within 1e-9 relative error") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t m = 1 + rng.below(12), k = 1 + rng.below(12), l = 1 + rng.below(12), n = 1 + rng.below(12);
      const Matrix a = random_matrix(m, k, rng), b = random_matrix(k, l, rng), c = random_matrix(l, n, rng);
      const Matrix left = matmul(matmul(a, b), c);
      const Matrix right = matmul(a, matmul(b, c));
      double scale = 0;
      for (double v : left.values()) scale = std::max(scale, std::abs(v));
      CHECK(max_abs_diff(left, right) <= 1e-9 * std::max(1.0, scale));
    }
  }

  TEST_CASE("transposed products match explicit transposes") {
    Rng rng(12);
    const Matrix a = random_matrix(7, 4, rng), b = random_matrix(7, 5, rng), c = random_matrix(3, 4, rng);
    CHECK(max_abs_diff(matmul_tn(a, b), naive_matmul(transpose(a), b)) < 1e-12);
    CHECK(max_abs_diff(matmul_nt(a, c), naive_matmul(a, transpose(c))) < 1e-12);
    CHECK(transpose(transpose(a)) == a);
  }

  TEST_CASE("matmul rejects mismatched shapes and non-finite products") {
    CHECK_THROWS_AS(matmul(Matrix(2, 3), Matrix(2, 3)), Error);
    try {
      matmul(Matrix(2, 3), Matrix(2, 3));
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::usage);
    }
    Matrix big = Matrix::from_rows({{1e308, 1e308}});
    try {
      matmul(big, Matrix::from_rows({{10}, {10}}));
      FAIL("expected numeric error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::numeric);
    }
  }

  TEST_CASE("row broadcast, column sums and axpy") {
    Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
    add_row_inplace(m, Matrix::from_rows({{10, 20}}));
    CHECK(m == Matrix::from_rows({{11, 22}, {13, 24}}));
    CHECK(column_sums(m) == Matrix::from_rows({{24, 46}}));
    axpy(-1.0, m, m);
    CHECK(m == Matrix(2, 2));
    CHECK_THROWS_AS(add_row_inplace(m, Matrix(1, 3)), Error);
  }

  TEST_CASE("sigmoid values, symmetry and monotonicity") {
    CHECK(sigmoid(0.0) == 0.5);
    CHECK(sigmoid(10.0) == doctest::Approx(0.9999546021312976).epsilon(1e-15));
    CHECK(sigmoid(-800.0) >= 0.0);
    CHECK(sigmoid(800.0) == 1.0);
    Rng rng(5);
    Matrix x = random_matrix(4, 6, rng, 5.0);
    Matrix neg = x;
    for (double& v : neg.values()) v = -v;
    const Matrix s = sigmoid(x), sn = sigmoid(neg);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(s.data()[i] + sn.data()[i] == doctest::Approx(1.0).epsilon(1e-15));
    double prev = sigmoid(-40.0);
    for (double v = -39.5; v <= 36.0; v += 0.5) {
      const double cur = sigmoid(v);
      CHECK(cur > prev);
      prev = cur;
    }
  }

  TEST_CASE("outer products") {
    const std::vector<double> e1{1, 0, 0}, e2{0, 1, 0}, zero{0, 0, 0};
    const Matrix o = outer(e1, e2);
    Matrix expect(3, 3);
    expect(0, 1) = 1.0;
    CHECK(o == expect);
    CHECK(outer(e1, zero) == Matrix(3, 3));
    Rng rng(6);
    for (int t = 0; t < 10; ++t) {
      std::vector<double> u(5), v(7);
      for (double& x : u) x = rng.normal();
      for (double& x : v) x = rng.normal();
      CHECK(rank_by_elimination(outer(u, v)) <= 1);
    }
    CHECK(rank_by_elimination(Matrix::identity(4)) == 4);
  }

  TEST_CASE("finite checks") {
    std::vector<double> v{1.0, 2.0};
    CHECK(all_finite(v));
    v.push_back(std::nan(""));
    CHECK_FALSE(all_finite(v));
    v.back() = INFINITY;
    CHECK_FALSE(all_finite(v));
    CHECK_THROWS_AS(check_finite(std::span<const double>(v), "ctx"), Error);
  }

  TEST_CASE("seeded streams reproduce the first 10^4 draws") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 10000; ++i) {
      const double x = a.uniform(), y = b.uniform();
      REQUIRE(x == y);
      differs = differs || x != c.uniform();
      REQUIRE(a.normal() == b.normal());
      REQUIRE(a.below(17) == b.below(17));
    }
    CHECK(differs);
  }

  TEST_CASE("uniform, below and normal moments") {
    Rng rng(7);
    double sum = 0, sq = 0;
    std::vector<int> counts(5, 0);
    constexpr int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = rng.uniform();
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      const auto k = rng.below(5);
      REQUIRE(k < 5);
      ++counts[k];
      const double z = rng.normal();
      sum += z;
      sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
    for (int c : counts) CHECK(std::abs(c / double(n) - 0.2) < 0.01);
  }

  TEST_CASE("shuffle is a permutation") {
    Rng rng(8);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    rng.shuffle(std::span(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
  }

  TEST_CASE("init_uniform stays inside its bound") {
    Rng rng(9);
    Matrix m(30, 30);
    init_uniform(m, 0.25, rng);
    for (double v : m.values()) CHECK(std::abs(v) <= 0.25);
  }

  TEST_CASE("matrix buffers are counted by the allocation tracker") {
    const std::size_t before = AllocTracker::current_bytes();
    {
      PeakScope scope;
      Matrix m(100, 10);
      CHECK(AllocTracker::current_bytes() == before + 8000);
      { Matrix tmp(50, 10); }
      CHECK(scope.transient_peak() == 12000);
    }
    CHECK(AllocTracker::current_bytes() == before);
  }
}
