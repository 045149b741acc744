#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mtbo/errors.hpp"

namespace mtbo {

struct Dims {
  int x = 0, y = 0, z = 0;
  std::size_t count() const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(y) *
           static_cast<std::size_t>(z);
  }
  bool operator==(const Dims&) const = default;
};

// Dense intensity grid, x-fastest storage: index = x + dims.x*(y + dims.y*z).
struct IntensityVolume {
  Dims dims;
  std::array<double, 3> spacing{1.0, 1.0, 1.0};  // mm per voxel
  std::vector<float> data;

  float at(int x, int y, int z) const {
    return data[static_cast<std::size_t>(x) +
                static_cast<std::size_t>(dims.x) *
                    (static_cast<std::size_t>(y) +
                     static_cast<std::size_t>(dims.y) * static_cast<std::size_t>(z))];
  }
};

struct VoxelMask {
  Dims dims;
  std::vector<std::uint8_t> data;  // 0 / 1 inside-ROI flags

  bool at(int x, int y, int z) const {
    return data[static_cast<std::size_t>(x) +
                static_cast<std::size_t>(dims.x) *
                    (static_cast<std::size_t>(y) +
                     static_cast<std::size_t>(dims.y) * static_cast<std::size_t>(z))] != 0;
  }
  std::size_t num_set() const;
};

enum class RangeRuleKind { MinMax, MeanPlusMinusSD };

struct RangeRule {
  RangeRuleKind kind = RangeRuleKind::MinMax;
  double k = 0.0;  // multiplier for MeanPlusMinusSD

  static RangeRule min_max() { return {RangeRuleKind::MinMax, 0.0}; }
  static RangeRule mean_sd(double k) { return {RangeRuleKind::MeanPlusMinusSD, k}; }
};

struct DiscretizationStrategy {
  int num_bins = 2;  // N_g
  RangeRule range_rule;

  std::string name() const;
};

// Levels over masked voxels only, x-fastest scan order.
struct DiscretizedROI {
  DiscretizationStrategy strategy;
  std::vector<std::uint16_t> levels;  // each in [1, N_g]
  int num_levels = 0;
  double q0 = 0.0, qN = 0.0;
};

std::pair<double, double> compute_range(const IntensityVolume& vol, const VoxelMask& mask,
                                        const RangeRule& rule);

// q_l = q0 + (qN - q0) * l / num_bins for l = 1..num_bins-1, strictly increasing.
std::vector<double> bin_edges(double q0, double qN, int num_bins);

// Maps an intensity onto a level given the interior edges: <= first edge -> 1,
// in (q_{l-1}, q_l] -> l, above the last edge -> num_bins.
int level_of(double intensity, const std::vector<double>& edges);

DiscretizedROI discretize(const IntensityVolume& vol, const VoxelMask& mask,
                          const DiscretizationStrategy& strategy);

// The nine tasks: bins {16, 32, 64} crossed with {min-max, mean±2SD, mean±3SD},
// bin count fixed while the range rule varies fastest.
std::vector<DiscretizationStrategy> strategy_grid();

// Raw intensities of masked voxels in the same scan order as DiscretizedROI::levels.
std::vector<double> masked_intensities(const IntensityVolume& vol, const VoxelMask& mask);

}  // namespace mtbo
