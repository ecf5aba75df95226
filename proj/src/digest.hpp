// Copyright 2026 The patchdelta Authors. Apache 2.0 License.

#pragma once

#include <filesystem>
#include <string>

namespace patchdelta {

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace patchdelta
