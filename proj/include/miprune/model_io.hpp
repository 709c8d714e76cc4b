#pragma once

#include <filesystem>

#include "miprune/network.hpp"

namespace miprune {

// Model container, magic "MIPR" (little-endian):
//   u32 version=1, u32 L, u32 input_dim,
//   per layer: u32 out_dim, u8 activation (0=Identity, 1=ReLU),
//              weights out_dim x in_dim float32 row-major, bias float32[out_dim].
void save_model(const Networkf& net, const std::filesystem::path& path);
Networkf load_model(const std::filesystem::path& path);

}  // namespace miprune
