// Copyright 2026 The patchdelta Authors. Apache 2.0 License.
//
// Model checkpoint container.
//
//   "PDNCKPT\0"                      8-byte magic
//   u32 format version (1)
//   u64 header length, header bytes  UTF-8 JSON: model config, tensor count
//   per tensor: u32 name length, name, u64 rows, u64 cols,
//               rows*cols IEEE-754 binary64 values
// Integers and doubles are little-endian. Optional tensors "norm.mean" and
// "norm.std" carry the training-split normalization statistics.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "data_io.hpp"
#include "model.hpp"

namespace patchdelta {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
  std::optional<NormStats> norm;
};

nlohmann::ordered_json config_to_json(const ModelConfig& config);
ModelConfig config_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace patchdelta
