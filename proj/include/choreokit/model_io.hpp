#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "choreokit/crossmodal.hpp"

namespace choreokit {

inline constexpr std::uint32_t kModelFileVersion = 1;

// "CKMP" + u32 version + u32 tensor count, then per tensor: u32 name length,
// name, u32 rank (always 2), u64 rows, u64 cols, row-major f64 payload.
// Scalar settings travel as 1x1 tensors under "meta.*".
std::string serialize_model(const ModelParams& model);
ModelParams deserialize_model(const std::string& bytes);

void save_model(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace choreokit
