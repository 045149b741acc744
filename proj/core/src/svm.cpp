#include "mtbo/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mtbo/rng.hpp"

namespace mtbo {

namespace {

constexpr double kKKTTol = 1e-3;
constexpr double kTau = 1e-12;
constexpr double kKernelEvalBudget = 1e6;

Eigen::MatrixXd rbf_kernel_matrix(const Eigen::MatrixXd& x, double gamma) {
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = sq.replicate(1, x.rows()) + sq.transpose().replicate(x.rows(), 1) -
                       2.0 * x * x.transpose();
  return (-gamma * d2.array().max(0.0)).exp();
}

}  // namespace

double SVMModel::decision(const Eigen::VectorXd& x) const {
  double f = bias;
  for (Eigen::Index i = 0; i < support_points.rows(); ++i) {
    const double d2 = (support_points.row(i).transpose() - x).squaredNorm();
    f += support_coeffs(i) * std::exp(-gamma * d2);
  }
  return f;
}

int SVMModel::predict(const Eigen::VectorXd& x) const {
  return decision(x) >= 0.0 ? 1 : -1;
}

SMOSolution solve_smo(const Eigen::MatrixXd& kernel, const Eigen::VectorXd& labels,
                      double c) {
  const Eigen::Index n = kernel.rows();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  // G_i = d(1/2 a'Qa - e'a)/da_i with Q_ij = y_i y_j K_ij; alpha = 0 => G = -e
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

  double kernel_evals = static_cast<double>(n) * static_cast<double>(n);
  const double per_iter = 2.0 * static_cast<double>(n);

  while (true) {
    // maximal violating pair
    double up_max = -std::numeric_limits<double>::infinity();
    double low_min = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double y = labels(t);
      const double v = -y * grad(t);
      const bool in_up = (y > 0 && alpha(t) < c) || (y < 0 && alpha(t) > 0);
      const bool in_low = (y < 0 && alpha(t) < c) || (y > 0 && alpha(t) > 0);
      if (in_up && v > up_max) {
        up_max = v;
        i = t;
      }
      if (in_low && v < low_min) {
        low_min = v;
        j = t;
      }
    }
    if (i < 0 || j < 0 || up_max - low_min < kKKTTol) break;
    kernel_evals += per_iter;
    if (kernel_evals > kKernelEvalBudget)
      throw NonConvergence("SMO exceeded kernel evaluation budget");

    const double yi = labels(i), yj = labels(j);
    const double kii = kernel(i, i), kjj = kernel(j, j), kij = kernel(i, j);
    const double old_ai = alpha(i), old_aj = alpha(j);

    if (yi != yj) {
      // curvature along e_i + e_j in Q = yy'.*K space is still ||phi_i - phi_j||^2
      double quad = kii + kjj - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
      }
      if (diff > 0.0) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
      } else {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = c + diff; }
      }
    } else {
      double quad = kii + kjj - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
      } else {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
      }
      if (sum > c) {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
      }
    }

    const double dai = alpha(i) - old_ai;
    const double daj = alpha(j) - old_aj;
    for (Eigen::Index t = 0; t < n; ++t)
      grad(t) += labels(t) * (yi * kernel(t, i) * dai + yj * kernel(t, j) * daj);
  }

  // rho from free points, else midpoint of the bound estimates
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = labels(t) * grad(t);
    if (alpha(t) >= c) {
      if (labels(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha(t) <= 0.0) {
      if (labels(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      sum_free += yg;
      ++n_free;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  return {alpha, -rho};
}

SVMModel train_svm(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                   const SVMHyperparams& hp) {
  const Eigen::MatrixXd kernel = rbf_kernel_matrix(features, hp.gamma);
  const SMOSolution sol = solve_smo(kernel, labels, hp.c);

  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < labels.size(); ++t)
    if (sol.alpha(t) > 0.0) sv.push_back(t);

  SVMModel model;
  model.gamma = hp.gamma;
  model.bias = sol.bias;
  model.support_points.resize(static_cast<Eigen::Index>(sv.size()), features.cols());
  model.support_coeffs.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_points.row(static_cast<Eigen::Index>(s)) = features.row(sv[s]);
    model.support_coeffs(static_cast<Eigen::Index>(s)) = sol.alpha(sv[s]) * labels(sv[s]);
  }
  return model;
}

double dual_objective(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                      const Eigen::VectorXd& alpha, double gamma) {
  const Eigen::MatrixXd kernel = rbf_kernel_matrix(features, gamma);
  const Eigen::VectorXd ay = alpha.cwiseProduct(labels);
  return 0.5 * ay.dot(kernel * ay) - alpha.sum();
}

std::vector<int> stratified_folds(const Dataset& data, int k, std::uint64_t seed) {
  const Eigen::Index n = data.labels.size();
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return data.case_ids[a] < data.case_ids[b];
  });

  std::vector<int> fold(static_cast<std::size_t>(n), 0);
  for (int cls : {-1, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t idx : order)
      if (static_cast<int>(data.labels(static_cast<Eigen::Index>(idx))) == cls)
        members.push_back(idx);
    auto eng = make_engine(mix_seed(seed, cls == -1 ? 0 : 1));
    std::shuffle(members.begin(), members.end(), eng);
    for (std::size_t p = 0; p < members.size(); ++p)
      fold[members[p]] = static_cast<int>(p % static_cast<std::size_t>(k));
  }
  return fold;
}

CVResult cv_loss(const Dataset& data, const SVMHyperparams& hp, const CVConfig& cv) {
  const Eigen::Index n = data.labels.size();
  const std::vector<int> fold = stratified_folds(data, cv.folds, cv.seed);

  Eigen::Index errors = 0;
  for (int f = 0; f < cv.folds; ++f) {
    std::vector<Eigen::Index> train_idx, val_idx;
    for (Eigen::Index t = 0; t < n; ++t)
      (fold[static_cast<std::size_t>(t)] == f ? val_idx : train_idx).push_back(t);
    if (val_idx.empty()) continue;

    Eigen::MatrixXd xtr(static_cast<Eigen::Index>(train_idx.size()), data.features.cols());
    Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_idx.size()));
    for (std::size_t t = 0; t < train_idx.size(); ++t) {
      xtr.row(static_cast<Eigen::Index>(t)) = data.features.row(train_idx[t]);
      ytr(static_cast<Eigen::Index>(t)) = data.labels(train_idx[t]);
    }

    // z-score from training-fold statistics; constant features pass through
    const Eigen::RowVectorXd mean = xtr.colwise().mean();
    Eigen::RowVectorXd sd =
        ((xtr.rowwise() - mean).array().square().colwise().sum() /
         std::max<double>(1.0, static_cast<double>(xtr.rows()) - 1.0))
            .sqrt();
    Eigen::RowVectorXd offset = mean;
    for (Eigen::Index c = 0; c < sd.size(); ++c) {
      if (sd(c) <= 0.0) {
        sd(c) = 1.0;
        offset(c) = 0.0;
      }
    }
    xtr = (xtr.rowwise() - offset).array().rowwise() / sd.array();

    SVMModel model;
    try {
      model = train_svm(xtr, ytr, hp);
    } catch (const NonConvergence&) {
      return {1.0, true};
    }

    for (Eigen::Index idx : val_idx) {
      Eigen::VectorXd x =
          ((data.features.row(idx) - offset).array() / sd.array()).transpose();
      if (model.predict(x) != static_cast<int>(data.labels(idx))) ++errors;
    }
  }
  return {static_cast<double>(errors) / static_cast<double>(n), false};
}

double transform_loss(double loss) {
  const double l = std::clamp(loss, kLossClampEps, 1.0 - kLossClampEps);
  return std::tan(M_PI * l - M_PI / 2.0);
}

double inverse_transform(double f) {
  const double l = (std::atan(f) + M_PI / 2.0) / M_PI;
  return std::clamp(l, kLossClampEps, 1.0 - kLossClampEps);
}

}  // namespace mtbo
