#include "mtbo/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mtbo {

std::size_t VoxelMask::num_set() const {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

std::string DiscretizationStrategy::name() const {
  std::string base = "N=" + std::to_string(num_bins) + ", ";
  if (range_rule.kind == RangeRuleKind::MinMax) return base + "min-max";
  // k is always integral in the strategy grid
  return base + "mean±" + std::to_string(static_cast<int>(range_rule.k)) + "SD";
}

std::vector<double> masked_intensities(const IntensityVolume& vol, const VoxelMask& mask) {
  std::vector<double> out;
  out.reserve(mask.num_set());
  for (int z = 0; z < vol.dims.z; ++z)
    for (int y = 0; y < vol.dims.y; ++y)
      for (int x = 0; x < vol.dims.x; ++x)
        if (mask.at(x, y, z)) out.push_back(vol.at(x, y, z));
  return out;
}

std::pair<double, double> compute_range(const IntensityVolume& vol, const VoxelMask& mask,
                                        const RangeRule& rule) {
  const std::vector<double> vals = masked_intensities(vol, mask);
  if (vals.size() < 2) throw DegenerateRange("ROI has fewer than 2 voxels");

  double q0, qN;
  if (rule.kind == RangeRuleKind::MinMax) {
    auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    q0 = *mn;
    qN = *mx;
  } else {
    const double n = static_cast<double>(vals.size());
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    q0 = mean - rule.k * sd;
    qN = mean + rule.k * sd;
  }
  if (q0 == qN) throw DegenerateRange("quantization range is degenerate (q0 == qN)");
  return {q0, qN};
}

std::vector<double> bin_edges(double q0, double qN, int num_bins) {
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(num_bins - 1));
  for (int l = 1; l <= num_bins - 1; ++l)
    edges.push_back(q0 + (qN - q0) * static_cast<double>(l) / static_cast<double>(num_bins));
  return edges;
}

int level_of(double intensity, const std::vector<double>& edges) {
  // first edge >= intensity; intensity exactly on an edge takes the lower level
  auto it = std::lower_bound(edges.begin(), edges.end(), intensity);
  return static_cast<int>(it - edges.begin()) + 1;
}

DiscretizedROI discretize(const IntensityVolume& vol, const VoxelMask& mask,
                          const DiscretizationStrategy& strategy) {
  auto [q0, qN] = compute_range(vol, mask, strategy.range_rule);
  const std::vector<double> edges = bin_edges(q0, qN, strategy.num_bins);

  DiscretizedROI roi;
  roi.strategy = strategy;
  roi.num_levels = strategy.num_bins;
  roi.q0 = q0;
  roi.qN = qN;
  roi.levels.reserve(mask.num_set());
  for (int z = 0; z < vol.dims.z; ++z)
    for (int y = 0; y < vol.dims.y; ++y)
      for (int x = 0; x < vol.dims.x; ++x)
        if (mask.at(x, y, z))
          roi.levels.push_back(static_cast<std::uint16_t>(level_of(vol.at(x, y, z), edges)));
  return roi;
}

std::vector<DiscretizationStrategy> strategy_grid() {
  std::vector<DiscretizationStrategy> grid;
  for (int bins : {16, 32, 64}) {
    grid.push_back({bins, RangeRule::min_max()});
    grid.push_back({bins, RangeRule::mean_sd(2.0)});
    grid.push_back({bins, RangeRule::mean_sd(3.0)});
  }
  return grid;
}

}  // namespace mtbo
