#pragma once

#include <filesystem>

#include "teamq/nn.hpp"

namespace teamq::nn {

// Flat binary checkpoint: header (magic "TQPC", u32 version, u32 tensor
// count), then per tensor: u32 name length, name bytes, u32 rank, u64 dims,
// row-major little-endian float64 payload.
void save_parameters(const std::filesystem::path& path, const ParameterSet& params);
ParameterSet load_parameters(const std::filesystem::path& path);

}  // namespace teamq::nn
