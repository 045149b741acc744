#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtbo/mtgp.hpp"

namespace mtbo {

struct QueryPoint {
  SearchPoint point;
  int task = 0;
};

struct TraceRecord {
  int global_iter = 0;
  int task = 0;  // 0-based
  SearchPoint point;
  double raw_loss = 0.0;
  double transformed_loss = 0.0;
  std::vector<double> best_so_far_per_task;  // raw-loss running minima
  std::int64_t wall_time_ms = 0;
  std::vector<std::string> flags;
};

struct Trace {
  std::vector<TraceRecord> records;
  int num_tasks = 1;
};

struct EvalResult {
  double raw_loss = 0.0;
  std::vector<std::string> flags;
};

using Objective = std::function<EvalResult(const SearchPoint&)>;

struct MTBOConfig {
  int iter1 = 10;   // shared warm-start iterations (including the initial point)
  int iter2 = 190;  // total iteration budget; phase 3 runs iter2 - iter1 steps
  int folds = 10;
  std::uint64_t seed = 0;
  bool impute_mode = false;    // prior-mean imputation before the MTGP fit
  bool per_task_ybest = false; // EI incumbent per task instead of global min(Y)
  int fit_restarts = 5;
  bool deterministic_timing = false;  // zero wall_time_ms in records
};

// Closed-form EI for minimization; deterministic posteriors fall back to
// max(0, y_best - mean).
double expected_improvement(const MTGPModel& model, const QueryPoint& q, double y_best);
double expected_improvement(double mean, double variance, double y_best);

// 1024 seeded quasi-random candidates plus pattern-search refinement from the
// top 8; ties broken by lower posterior mean, then lexicographic coordinates.
SearchPoint maximize_ei(const MTGPModel& model, int task, double y_best,
                        std::uint64_t seed);

struct RunResult {
  Trace trace;
  std::vector<SearchPoint> best_points;  // per task, argmin raw loss
  std::vector<double> best_losses;       // per task
  MTGPModel final_model;
};

// Single-task EI loop from log-coords (0, 0) = (C, gamma) = (1, 1).
RunResult stbo_run(const Objective& objective, int iters, std::uint64_t seed,
                   int fit_restarts = 5, bool deterministic_timing = false);

// The round-robin multi-task scheduler: shared warm start on task 0, MTGP fit,
// then per-task EI with periodic MLE refits.
RunResult mtbo_run(const std::vector<Objective>& objectives, const MTBOConfig& cfg);

// Running raw-loss minimum for one task, ordered by that task's evaluations.
std::vector<double> best_so_far(const Trace& trace, int task);

void write_trace_csv(const Trace& trace, const std::string& path);

}  // namespace mtbo
