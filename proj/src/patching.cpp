// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#include "patching.hpp"

#include <algorithm>
#include <string>

#include "errors.hpp"

namespace patchdelta {

void TimeSeries::validate() const {
  if (values.rows() == 0 || values.cols() == 0) data_error("time series must have at least one step and one feature");
  if (labels) {
    if (labels->size() != values.rows())
      data_error("label count " + std::to_string(labels->size()) + " does not match series length " +
                 std::to_string(values.rows()));
    for (std::size_t i = 0; i < labels->size(); ++i)
      if ((*labels)[i] > 1) data_error("label at index " + std::to_string(i) + " is not 0 or 1");
  }
}

PatchTokens patchify(const Matrix& series, std::size_t patch_len) {
  const std::size_t length = series.rows();
  const std::size_t features = series.cols();
  if (patch_len < 1 || patch_len > length)
    usage_error("patchify: patch length " + std::to_string(patch_len) + " outside [1, " + std::to_string(length) + "]");
  const std::size_t n = length / patch_len;
  PatchTokens out{Matrix(n, patch_len * features), patch_len, features};
  // Row-major storage makes each token a contiguous run of P source rows.
  std::copy_n(series.data(), n * patch_len * features, out.tokens.data());
  return out;
}

Matrix unpatchify(const PatchTokens& tokens) {
  if (tokens.patch_len == 0 || tokens.n_features == 0 || tokens.width() != tokens.patch_len * tokens.n_features)
    usage_error("unpatchify: token width " + std::to_string(tokens.width()) + " is not patch_len * features (" +
                std::to_string(tokens.patch_len) + " * " + std::to_string(tokens.n_features) + ")");
  Matrix series(tokens.count() * tokens.patch_len, tokens.n_features);
  std::copy_n(tokens.tokens.data(), tokens.tokens.size(), series.data());
  return series;
}

}  // namespace patchdelta
