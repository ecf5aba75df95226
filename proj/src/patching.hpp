// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Non-overlapping patching of a multivariate series into flattened tokens.
//
// Layout: token i holds time steps [i*P, (i+1)*P) and is flattened
// time-major, so entry p*F + f is (time i*P + p, feature f). When P does not
// divide L the trailing L mod P steps are dropped.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "numerics.hpp"

namespace patchdelta {

struct TimeSeries {
  Matrix values;                                // L x F
  std::optional<std::vector<std::uint8_t>> labels;  // length L, entries 0/1

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t features() const noexcept { return values.cols(); }
  // Throws data on an empty series or malformed labels.
  void validate() const;
};

struct PatchTokens {
  Matrix tokens;  // N x (P*F)
  std::size_t patch_len = 0;
  std::size_t n_features = 0;

  std::size_t count() const noexcept { return tokens.rows(); }
  std::size_t width() const noexcept { return tokens.cols(); }
};

PatchTokens patchify(const Matrix& series, std::size_t patch_len);
inline PatchTokens patchify(const TimeSeries& series, std::size_t patch_len) {
  return patchify(series.values, patch_len);
}

// (N*P) x F series. Throws usage when the token width is not P*F.
Matrix unpatchify(const PatchTokens& tokens);

}  // namespace patchdelta
