// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstring>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace patchdelta {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) usage_error("Matrix::from_rows: ragged initializer");
    std::copy(row.begin(), row.end(), m.row(i++).begin());
  }
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  Matrix m(1, values.size());
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream s;
  s << m.rows() << "x" << m.cols();
  return s.str();
}

// Register-blocked kernel: C[MR x NR] tiles stay in vector registers while a
// packed kc x NR panel of B streams through.
using Vec = double __attribute__((vector_size(64)));
constexpr std::size_t kLanes = 8;
constexpr std::size_t kMR = 4;
constexpr std::size_t kVecs = 3;
constexpr std::size_t kNR = kLanes * kVecs;
constexpr std::size_t kKC = 256;
constexpr std::size_t kNC = 24 * kNR;

Vec load_vec(const double* p) noexcept {
  Vec v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

void store_vec(double* p, Vec v) noexcept { std::memcpy(p, &v, sizeof v); }

// panel: kc rows of kNR contiguous doubles. Full-width tile of `rows` rows.
template <std::size_t Rows>
void micro_kernel(std::size_t kc, const double* a, std::size_t lda, const double* panel, double* c,
                  std::size_t ldc) noexcept {
  Vec acc[Rows][kVecs];
  for (std::size_t r = 0; r < Rows; ++r)
    for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] = load_vec(c + r * ldc + v * kLanes);
  for (std::size_t p = 0; p < kc; ++p) {
    const double* bp = panel + p * kNR;
    Vec b[kVecs];
    for (std::size_t v = 0; v < kVecs; ++v) b[v] = load_vec(bp + v * kLanes);
    for (std::size_t r = 0; r < Rows; ++r) {
      const double av = a[r * lda + p];
      for (std::size_t v = 0; v < kVecs; ++v) acc[r][v] += av * b[v];
    }
  }
  for (std::size_t r = 0; r < Rows; ++r)
    for (std::size_t v = 0; v < kVecs; ++v) store_vec(c + r * ldc + v * kLanes, acc[r][v]);
}

void tile(std::size_t rows, std::size_t kc, const double* a, std::size_t lda, const double* panel, double* c,
          std::size_t ldc) noexcept {
  switch (rows) {
    case 4: micro_kernel<4>(kc, a, lda, panel, c, ldc); break;
    case 3: micro_kernel<3>(kc, a, lda, panel, c, ldc); break;
    case 2: micro_kernel<2>(kc, a, lda, panel, c, ldc); break;
    default: micro_kernel<1>(kc, a, lda, panel, c, ldc); break;
  }
}

}  // namespace

void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc) noexcept {
  if (m == 0 || n == 0 || k == 0) return;
  thread_local std::vector<double> packed;
  packed.resize(kKC * kNC);
  double edge[kMR * kNR];
  for (std::size_t j0 = 0; j0 < n; j0 += kNC) {
    const std::size_t nc = std::min(kNC, n - j0);
    const std::size_t panels = (nc + kNR - 1) / kNR;
    for (std::size_t k0 = 0; k0 < k; k0 += kKC) {
      const std::size_t kc = std::min(kKC, k - k0);
      for (std::size_t jp = 0; jp < panels; ++jp) {
        const std::size_t w = std::min(kNR, nc - jp * kNR);
        double* dst = packed.data() + jp * kKC * kNR;
        for (std::size_t p = 0; p < kc; ++p) {
          const double* src = b + (k0 + p) * ldb + j0 + jp * kNR;
          std::copy_n(src, w, dst + p * kNR);
          std::fill(dst + p * kNR + w, dst + (p + 1) * kNR, 0.0);
        }
      }
      for (std::size_t i = 0; i < m; i += kMR) {
        const std::size_t rows = std::min(kMR, m - i);
        const double* ablock = a + i * lda + k0;
        for (std::size_t jp = 0; jp < panels; ++jp) {
          const std::size_t w = std::min(kNR, nc - jp * kNR);
          const double* panel = packed.data() + jp * kKC * kNR;
          double* cblock = c + i * ldc + j0 + jp * kNR;
          if (w == kNR) {
            tile(rows, kc, ablock, lda, panel, cblock, ldc);
          } else {
            for (std::size_t r = 0; r < rows; ++r) {
              std::copy_n(cblock + r * ldc, w, edge + r * kNR);
              std::fill(edge + r * kNR + w, edge + (r + 1) * kNR, 0.0);
            }
            tile(rows, kc, ablock, lda, panel, edge, kNR);
            for (std::size_t r = 0; r < rows; ++r) std::copy_n(edge + r * kNR, w, cblock + r * ldc);
          }
        }
      }
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) usage_error("matmul: dimension mismatch " + shape_str(a) + " * " + shape_str(b));
  Matrix c(a.rows(), b.cols());
  gemm_accumulate(a.rows(), b.cols(), a.cols(), a.data(), a.cols(), b.data(), b.cols(), c.data(), c.cols());
  check_finite(c, "matmul");
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  constexpr std::size_t kTile = 32;
  for (std::size_t i0 = 0; i0 < a.rows(); i0 += kTile)
    for (std::size_t j0 = 0; j0 < a.cols(); j0 += kTile)
      for (std::size_t i = i0; i < std::min(a.rows(), i0 + kTile); ++i)
        for (std::size_t j = j0; j < std::min(a.cols(), j0 + kTile); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) usage_error("matmul_tn: dimension mismatch " + shape_str(a) + "^T * " + shape_str(b));
  return matmul(transpose(a), b);
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) usage_error("matmul_nt: dimension mismatch " + shape_str(a) + " * " + shape_str(b) + "^T");
  return matmul(a, transpose(b));
}

void add_row_inplace(Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols())
    usage_error("add_row_inplace: bias " + shape_str(bias) + " does not match " + shape_str(m));
  const double* __restrict bv = bias.data();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double* __restrict row = m.row(r).data();
#pragma omp simd
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += bv[c];
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix s(1, m.cols());
  double* __restrict sv = s.data();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* __restrict row = m.row(r).data();
#pragma omp simd
    for (std::size_t c = 0; c < m.cols(); ++c) sv[c] += row[c];
  }
  return s;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  if (!x.same_shape(y)) usage_error("axpy: shape mismatch " + shape_str(x) + " vs " + shape_str(y));
  const double* __restrict xv = x.data();
  double* __restrict yv = y.data();
#pragma omp simd
  for (std::size_t i = 0; i < x.size(); ++i) yv[i] += alpha * xv[i];
}

double sigmoid(double x) noexcept {
  // Split by sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y.data()[i] = sigmoid(x.data()[i]);
  return y;
}

Matrix outer(std::span<const double> u, std::span<const double> v) {
  Matrix m(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    double* __restrict row = m.row(i).data();
    const double ui = u[i];
#pragma omp simd
    for (std::size_t j = 0; j < v.size(); ++j) row[j] = ui * v[j];
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  const double* __restrict av = a.data();
  const double* __restrict bv = b.data();
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < a.size(); ++i) s += av[i] * bv[i];
  return s;
}

bool all_finite(std::span<const double> v) noexcept {
  // Any NaN or infinity poisons the product with zero.
  double acc = 0.0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * 0.0;
  return acc == 0.0;
}

void check_finite(std::span<const double> v, std::string_view context) {
  if (!all_finite(v)) numeric_error("non-finite value in " + std::string(context));
}

void check_finite(const Matrix& m, std::string_view context) { check_finite(m.values(), context); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) usage_error("Rng::below: empty range");
  // Rejection keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return x % n;
}

void init_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.values()) v = rng.uniform(-bound, bound);
}

}  // namespace patchdelta
