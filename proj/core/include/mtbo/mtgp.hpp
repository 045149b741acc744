#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "mtbo/errors.hpp"

namespace mtbo {

// log10-reparameterized hyperparameter box: both coordinates in [-3, 3]
inline constexpr double kBoxLo = -3.0;
inline constexpr double kBoxHi = 3.0;

using SearchPoint = Eigen::Vector2d;  // (log10 C, log10 gamma)

struct Observation {
  SearchPoint point;
  int task = 0;  // 0-based
  double y = 0.0;  // transformed loss
  bool imputed = false;
};

enum class Design { Block, Irregular };

struct ObservationSet {
  std::vector<Observation> obs;
  int num_tasks = 1;
  Design design = Design::Irregular;

  std::size_t size() const { return obs.size(); }
};

struct MTGPHyperparams {
  Eigen::VectorXd mu;         // per-task prior means, length M
  Eigen::MatrixXd task_chol;  // lower-triangular L with positive diagonal, K^t = L L'
  double log_length_scale = 0.0;
  Eigen::VectorXd log_noise;  // per-task, sigma_i^2 = exp(2 * log_noise_i)

  int num_tasks() const { return static_cast<int>(mu.size()); }
  Eigen::MatrixXd task_cov() const { return task_chol * task_chol.transpose(); }
  double length_scale() const { return std::exp(log_length_scale); }
  double noise_var(int task) const { return std::exp(2.0 * log_noise(task)); }
};

// sigma_f = 1; k(r) = (1 + sqrt5 r/l + 5 r^2/(3 l^2)) exp(-sqrt5 r/l)
double matern52(const SearchPoint& a, const SearchPoint& b, double length_scale);

// K^t_{il} * matern52(a, b)
double cross_task_kernel(const SearchPoint& a, int task_a, const SearchPoint& b,
                         int task_b, const MTGPHyperparams& params);

// Dense Sigma0 with per-task noise on the diagonal, before jitter.
Eigen::MatrixXd joint_covariance_raw(const ObservationSet& train,
                                     const MTGPHyperparams& params);

// Kronecker assembly for block designs ordered task-major (all of task 0's points,
// then task 1's, ... with identical point lists). Used to cross-check the
// entrywise path; both must agree exactly.
Eigen::MatrixXd joint_covariance_kron(const std::vector<SearchPoint>& points,
                                      const MTGPHyperparams& params);

double log_marginal_likelihood(const ObservationSet& train, const MTGPHyperparams& params);

struct LMLResult {
  double value = 0.0;
  Eigen::VectorXd grad;  // in packed-parameter order
};

// Packed layout: [mu (M); L row-major lower-tri, diagonal as log (M(M+1)/2);
// log_length_scale; log_noise (M)]
Eigen::VectorXd pack_params(const MTGPHyperparams& params);
MTGPHyperparams unpack_params(const Eigen::VectorXd& v, int num_tasks);
int packed_size(int num_tasks);

LMLResult lml_with_grad(const ObservationSet& train, const MTGPHyperparams& params);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

class MTGPModel {
 public:
  MTGPModel() = default;
  // Factorizes Sigma0 (+ escalating jitter) for the given fixed hyperparameters.
  MTGPModel(ObservationSet train, MTGPHyperparams params);

  Prediction predict(const SearchPoint& x, int task) const;

  // Appends one observation, extending the Cholesky factor in O(n^2) with
  // unchanged hyperparameters.
  void extend(const Observation& o);

  const ObservationSet& train() const { return train_; }
  const MTGPHyperparams& params() const { return params_; }
  double log_marginal() const;

  std::string to_json() const;
  static MTGPModel from_json(const std::string& text);

 private:
  void refactor();

  ObservationSet train_;
  MTGPHyperparams params_;
  Eigen::MatrixXd chol_;   // lower factor of Sigma0 + jitter
  Eigen::VectorXd alpha_;  // (Sigma0 + jitter)^{-1} (Y - m)
  double jitter_ = 0.0;
};

// Maximum-likelihood fit via analytic-gradient L-BFGS from `restarts`
// initializations; deterministic given seed.
MTGPModel fit(const ObservationSet& train, int restarts, std::uint64_t seed);

// Deterministic first initialization used by fit (exposed for tests).
MTGPHyperparams default_init(const ObservationSet& train);

// Fills gaps in a block design with the per-task prior mean, flagged imputed.
ObservationSet impute_missing(const ObservationSet& train, const MTGPHyperparams& params);

}  // namespace mtbo
