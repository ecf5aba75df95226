// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Dense row-major real matrices, the handful of kernels the models need, and
// a seeded random stream. Every buffer is allocated through the counting
// allocator in alloc_tracker.hpp.

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "alloc_tracker.hpp"

namespace patchdelta {

using Buffer = std::vector<double, TrackedAllocator<double>>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix row_vector(std::span<const double> values);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return {data_.data(), data_.size()}; }
  std::span<const double> values() const noexcept { return {data_.data(), data_.size()}; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  void fill(double v) noexcept;
  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Matrix& a, const Matrix& b) noexcept {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Buffer data_;
};

// a * b. Throws usage on dimension mismatch and numeric on a non-finite result.
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Raw kernel: c[m x n] += a[m x k] * b[k x n], all row-major with leading
// dimensions. No checks.
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
                     std::size_t ldb, double* c, std::size_t ldc) noexcept;

Matrix transpose(const Matrix& a);

// Adds a 1 x cols row vector to every row.
void add_row_inplace(Matrix& m, const Matrix& bias);
// 1 x cols matrix of column sums.
Matrix column_sums(const Matrix& m);
// y += alpha * x
void axpy(double alpha, const Matrix& x, Matrix& y);

double sigmoid(double x) noexcept;
Matrix sigmoid(const Matrix& x);
Matrix outer(std::span<const double> u, std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b) noexcept;

bool all_finite(std::span<const double> v) noexcept;
// Throws numeric naming `context` when any entry is NaN or infinite.
void check_finite(const Matrix& m, std::string_view context);
void check_finite(std::span<const double> v, std::string_view context);

// Reproducible stream over std::mt19937_64, whose integer output sequence is
// fixed by the C++ standard. Real-valued draws are derived from the raw
// 64-bit output here rather than through <random> distributions, whose
// algorithms are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal();
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fills m with U[-bound, bound].
void init_uniform(Matrix& m, double bound, Rng& rng);

}  // namespace patchdelta
