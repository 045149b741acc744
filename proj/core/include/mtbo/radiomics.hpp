#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "mtbo/discretize.hpp"

namespace mtbo {

inline constexpr int kNumFirstOrder = 13;
inline constexpr int kNumGLCM = 23;
inline constexpr int kNumGLRLM = 12;
inline constexpr int kNumFeatures = kNumFirstOrder + kNumGLCM + kNumGLRLM;  // 48

// Canonical feature names, fixed order: 13 first-order, 23 GLCM, 12 GLRLM.
const std::array<std::string, kNumFeatures>& feature_names();

struct FeatureVector {
  std::array<double, kNumFeatures> values{};
};

struct FeatureExtraction {
  FeatureVector vec;                    // undefined entries hold NaN
  std::vector<std::string> undefined;   // names of features that could not be computed
  bool ok() const { return undefined.empty(); }
};

// Discretized levels embedded back in the 3D grid; level 0 marks outside-ROI.
struct LevelGrid {
  Dims dims;
  std::vector<std::uint16_t> levels;
  int num_levels = 0;

  int at(int x, int y, int z) const {
    return levels[static_cast<std::size_t>(x) +
                  static_cast<std::size_t>(dims.x) *
                      (static_cast<std::size_t>(y) +
                       static_cast<std::size_t>(dims.y) * static_cast<std::size_t>(z))];
  }
};

LevelGrid embed_levels(const DiscretizedROI& roi, const VoxelMask& mask);

// The 13 distance-1 offsets covering the 26-neighborhood half-set.
const std::vector<std::array<int, 3>>& direction_offsets();

struct CooccurrenceMatrix {
  Eigen::MatrixXd counts;      // N_g x N_g, symmetric, direction-summed
  Eigen::MatrixXd normalized;  // counts / sum
};

struct RunLengthMatrix {
  Eigen::MatrixXd counts;  // N_g x R, direction-summed; R = longest observed run
  double num_runs() const { return counts.sum(); }
};

struct FirstOrderResult {
  std::array<double, kNumFirstOrder> values{};
  std::vector<std::string> undefined;
};

struct GLCMResult {
  std::array<double, kNumGLCM> values{};
  std::vector<std::string> undefined;
};

// Raw-intensity statistics plus histogram entropy/uniformity on the levels.
FirstOrderResult first_order_features(const DiscretizedROI& roi,
                                      const std::vector<double>& raw);

CooccurrenceMatrix compute_glcm(const LevelGrid& grid);

GLCMResult glcm_features(const CooccurrenceMatrix& m);

RunLengthMatrix compute_glrlm(const LevelGrid& grid, const std::array<int, 3>& dir);
RunLengthMatrix compute_glrlm(const LevelGrid& grid);  // summed over all 13 directions

std::array<double, kNumGLRLM> glrlm_features(const RunLengthMatrix& m,
                                             std::size_t num_voxels);

FeatureExtraction extract_all(const IntensityVolume& vol, const VoxelMask& mask,
                              const DiscretizationStrategy& strategy);

}  // namespace mtbo
