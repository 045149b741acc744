#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtbo/bo.hpp"
#include "mtbo/radiomics.hpp"
#include "mtbo/svm.hpp"

namespace mtbo {

struct PhantomSpec {
  int n_cases = 60;
  Dims grid{24, 24, 24};
  double radius_min = 6.0;
  double radius_max = 9.0;
  double class_effect = 8.0;  // mean shift + extra speckle sd for class +1
  double noise_sd = 5.0;
  std::uint64_t seed = 0;
};

struct PhantomCase {
  IntensityVolume vol;
  VoxelMask mask;
  int label = -1;  // -1 smooth, +1 speckled
  std::string case_id;
};

// Seeded synthetic nodule volumes: spherical masks with jittered radius,
// smooth Gaussian texture, class +1 gets a mean shift plus high-variance speckle.
std::vector<PhantomCase> gen_phantom(const PhantomSpec& spec);

struct BuildResult {
  std::vector<Dataset> datasets;          // one per strategy, identical case order
  std::vector<std::string> rejected_cases;  // cases with undefined features
};

BuildResult build_datasets(const std::vector<PhantomCase>& cases,
                           const std::vector<DiscretizationStrategy>& strategies);

void write_dataset_csv(const Dataset& data, const std::string& path);
Dataset read_dataset_csv(const std::string& path);

struct LandscapeGrid {
  int grid_side = 61;
  std::vector<SearchPoint> points;  // j-major: index = j * grid_side + k
  std::vector<double> losses;       // raw CV losses, same order
};

std::vector<SearchPoint> landscape_points(int grid_side);

// CV loss at every grid point; parallel across points (MTBO_THREADS caps workers).
LandscapeGrid eval_landscape(const Dataset& data, const CVConfig& cv, int grid_side);

void write_landscape_csv(const LandscapeGrid& grid, const std::string& path);

struct RmsePair {
  double transformed = 0.0;  // GP fitting space
  double raw = 0.0;          // after pointwise inverse transform
};

RmsePair rmse(const MTGPModel& model, const LandscapeGrid& landscape, int task);

struct SyntheticTask {
  Objective objective;
  SearchPoint optimum;      // argmin located by a 1001^2 grid oracle
  double optimal_loss = 0.0;
  double max_loss = 0.0;    // grid max, for threshold definitions
};

// Family f_t(x) = g(x + delta_t) + c_t * h(x); shift and scale shrink to zero
// as correlation -> 1. Raw losses stay inside (0, 1).
std::vector<SyntheticTask> synthetic_tasks(int m, double correlation, std::uint64_t seed);

struct TaskReport {
  int task = 0;
  std::string name;
  SearchPoint stbo_point, mtbo_point;
  double stbo_loss = 1.0, mtbo_loss = 1.0;
  int stbo_evals_to_threshold = -1, mtbo_evals_to_threshold = -1;
  double rmse_single_transformed = -1.0, rmse_multi_transformed = -1.0;
  double rmse_single_raw = -1.0, rmse_multi_raw = -1.0;
};

struct RunReport {
  MTBOConfig cfg;
  int num_tasks = 0;
  std::vector<TaskReport> tasks;
  Trace stbo_trace;  // concatenated per-task STBO traces (task field set)
  Trace mtbo_trace;
  std::string notes;
};

struct CompareOptions {
  MTBOConfig cfg;
  int landscape_grid_side = 0;  // 0 skips the RMSE section
  std::vector<std::string> task_names;
};

// Runs STBO per task and MTBO per the round-robin scheduler with identical
// per-task evaluation budgets, then projects the report from the traces.
RunReport compare_runs(const std::vector<Dataset>& datasets, const CompareOptions& opts);

void write_report_json(const RunReport& report, const std::string& path);
void write_best_so_far_csv(const RunReport& report, const std::string& path);

// Chunked parallel loop; worker count from MTBO_THREADS, default logical cores.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);
int worker_count();

}  // namespace mtbo
