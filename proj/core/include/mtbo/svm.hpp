#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "mtbo/errors.hpp"

namespace mtbo {

struct Dataset {
  Eigen::MatrixXd features;          // n x d
  Eigen::VectorXd labels;            // entries in {-1, +1}
  std::vector<std::string> case_ids; // n identifiers
};

struct SVMHyperparams {
  double c = 1.0;      // penalty factor
  double gamma = 1.0;  // RBF kernel size
};

struct SVMModel {
  Eigen::MatrixXd support_points;  // s x d
  Eigen::VectorXd support_coeffs;  // alpha_i * y_i
  double bias = 0.0;
  double gamma = 1.0;

  double decision(const Eigen::VectorXd& x) const;
  int predict(const Eigen::VectorXd& x) const;  // ties (exactly 0) -> +1
};

struct CVConfig {
  int folds = 10;
  std::uint64_t seed = 0;
  // folds are always stratified, keyed by sorted case_ids + seed
};

struct CVResult {
  double loss = 0.0;          // pooled misclassification rate in [0,1]
  bool nonconvergence = false;
};

// Soft-margin RBF SVM dual via SMO with maximal-violating-pair selection.
// Stops when the max KKT violation drops below 1e-3; throws NonConvergence at the
// kernel-evaluation cap.
SVMModel train_svm(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                   const SVMHyperparams& hp);

// Dual objective value of a trained model against the given training data.
double dual_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                      const Eigen::VectorXd& alpha, double gamma);

// Raw alphas are exposed for KKT / oracle checks.
struct SMOSolution {
  Eigen::VectorXd alpha;
  double bias = 0.0;
};
SMOSolution solve_smo(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& labels,
                      double c);

// Stratified k-fold CV loss; NonConvergence in any fold yields loss 1.0 + flag.
// Per-fold feature standardization uses training-fold statistics only.
CVResult cv_loss(const Dataset& data, const SVMHyperparams& hp, const CVConfig& cv);

// Fold assignment (index -> fold id), stratified per class over case_id-sorted rows.
std::vector<int> stratified_folds(const Dataset& data, int k, std::uint64_t seed);

// Monotone map of CV loss onto the real line: clamp to [1e-3, 1-1e-3], then
// tan(pi*L - pi/2).
double transform_loss(double loss);
double inverse_transform(double f);

inline constexpr double kLossClampEps = 1e-3;

}  // namespace mtbo
