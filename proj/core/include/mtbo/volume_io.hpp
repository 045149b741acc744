#pragma once

#include <string>

#include "mtbo/discretize.hpp"

namespace mtbo {

// Volume files are a JSON header {dims, spacing, dtype, order} next to a raw
// little-endian binary; <path>.json + <path>.raw. dtype "f32" for volumes,
// "u8" for masks, order always "x-fastest".
void write_volume(const IntensityVolume& vol, const std::string& path_stem);
IntensityVolume read_volume(const std::string& path_stem);

void write_mask(const VoxelMask& mask, const std::string& path_stem);
VoxelMask read_mask(const std::string& path_stem);

// Levels as raw u16 plus a JSON sidecar with (q0, qN, N_g).
void write_levels(const DiscretizedROI& roi, const std::string& path_stem);

}  // namespace mtbo
