#pragma once

// Independent reference implementations used to check the library. These
// deliberately avoid the library's numeric paths: the GP oracle assembles the
// dense covariance itself and uses a naive matrix inverse (no Cholesky reuse),
// the SVM oracle solves the dual QP by projected gradient, and the EI oracle
// is plain Monte Carlo.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mtbo/mtgp.hpp"
#include "mtbo/rng.hpp"

namespace oracle {

inline double matern52_ref(const mtbo::SearchPoint& a, const mtbo::SearchPoint& b,
                           double ls) {
  const double r = std::sqrt((a(0) - b(0)) * (a(0) - b(0)) +
                             (a(1) - b(1)) * (a(1) - b(1)));
  const double t = std::sqrt(5.0) * r / ls;
  return (1.0 + t + t * t / 3.0) * std::exp(-t);
}

struct GPPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

// Dense Sigma0 with the same base jitter rule the library uses (the jitter is
// part of the model definition), inverted naively.
class DenseGPOracle {
 public:
  DenseGPOracle(const mtbo::ObservationSet& train, const mtbo::MTGPHyperparams& p)
      : train_(train), params_(p) {
    const Eigen::Index n = static_cast<Eigen::Index>(train.size());
    const Eigen::MatrixXd kt = p.task_cov();
    sigma_.resize(n, n);
    resid_.resize(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto& oa = train.obs[static_cast<std::size_t>(a)];
      resid_(a) = oa.y - p.mu(oa.task);
      for (Eigen::Index b = 0; b < n; ++b) {
        const auto& ob = train.obs[static_cast<std::size_t>(b)];
        sigma_(a, b) = kt(oa.task, ob.task) *
                       matern52_ref(oa.point, ob.point, p.length_scale());
      }
      sigma_(a, a) += p.noise_var(oa.task);
    }
    sigma_.diagonal().array() += 1e-8 * sigma_.diagonal().mean();
    sinv_ = sigma_.inverse();
  }

  GPPosterior predict(const mtbo::SearchPoint& x, int task) const {
    const Eigen::Index n = resid_.size();
    const Eigen::MatrixXd kt = params_.task_cov();
    Eigen::VectorXd k(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const auto& oa = train_.obs[static_cast<std::size_t>(a)];
      k(a) = kt(task, oa.task) * matern52_ref(x, oa.point, params_.length_scale());
    }
    GPPosterior out;
    out.mean = params_.mu(task) + k.dot(sinv_ * resid_);
    out.variance = kt(task, task) - k.dot(sinv_ * k);
    return out;
  }

  double log_marginal() const {
    const Eigen::Index n = resid_.size();
    const double quad = resid_.dot(sinv_ * resid_);
    const double logdet = std::log(sigma_.determinant());
    return -0.5 * quad - 0.5 * logdet -
           0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
  }

 private:
  mtbo::ObservationSet train_;
  mtbo::MTGPHyperparams params_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd sinv_;
  Eigen::VectorXd resid_;
};

// Projection onto {0 <= a <= c, y'a = 0}: clip(v - lambda y) with lambda found
// by bisection on the monotone function y'clip(v - lambda y).
inline Eigen::VectorXd project_dual(const Eigen::VectorXd& v, const Eigen::VectorXd& y,
                                    double c) {
  // explicit return type: the clip expression must be materialized before the
  // temporary it references goes out of scope
  auto clipped = [&](double lambda) -> Eigen::VectorXd {
    return (v - lambda * y).cwiseMax(0.0).cwiseMin(c);
  };
  double lo = -1.0, hi = 1.0;
  while (y.dot(clipped(lo)) < 0.0) lo *= 2.0;
  while (y.dot(clipped(hi)) > 0.0) hi *= 2.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (y.dot(clipped(mid)) > 0.0 ? lo : hi) = mid;
  }
  return clipped(0.5 * (lo + hi));
}

// Minimizes 1/2 a'Qa - e'a over the dual feasible set, Q_ij = y_i y_j K_ij.
inline Eigen::VectorXd qp_dual_oracle(const Eigen::MatrixXd& kernel,
                                      const Eigen::VectorXd& y, double c,
                                      int iters = 200000) {
  const Eigen::Index n = kernel.rows();
  Eigen::MatrixXd q = kernel;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) *= y(i) * y(j);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
  const double lip = std::max(es.eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / lip;

  Eigen::VectorXd a = project_dual(Eigen::VectorXd::Zero(n), y, c);
  for (int it = 0; it < iters; ++it) {
    const Eigen::VectorXd g = q * a - Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd next = project_dual(a - step * g, y, c);
    if ((next - a).lpNorm<Eigen::Infinity>() < 1e-12) return next;
    a = next;
  }
  return a;
}

// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9 absolute).
inline double norm_ppf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double cc[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > phigh) return -norm_ppf(1.0 - p);
  const double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// E[max(0, y_best - N(mean, variance))] by stratified Monte Carlo: one uniform
// draw inside each of `draws` equal-probability strata. Unbiased, with variance
// far below plain sampling so 1e6 draws resolve well under 1e-3.
inline double mc_expected_improvement(double mean, double variance, double y_best,
                                      std::uint64_t seed, int draws = 1000000) {
  auto eng = mtbo::make_engine(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double sigma = std::sqrt(std::max(0.0, variance));
  double acc = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double u = (static_cast<double>(i) + u01(eng)) / static_cast<double>(draws);
    const double z = norm_ppf(std::clamp(u, 1e-15, 1.0 - 1e-15));
    acc += std::max(0.0, y_best - (mean + sigma * z));
  }
  return acc / draws;
}

// Random problem generators shared by tests and acceptance checks.

inline mtbo::MTGPHyperparams random_params(int m, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  mtbo::MTGPHyperparams p;
  p.mu.resize(m);
  p.log_noise.resize(m);
  p.task_chol = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) p.mu(i) = 2.0 * u(eng);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j)
      p.task_chol(i, j) = (i == j) ? std::exp(0.5 * u(eng)) : 0.4 * u(eng);
  p.log_length_scale = 0.3 + 0.5 * u(eng);
  for (int i = 0; i < m; ++i) p.log_noise(i) = -1.5 + 0.5 * u(eng);
  return p;
}

inline mtbo::ObservationSet random_observations(int m, int n, bool block,
                                                std::mt19937_64& eng) {
  std::uniform_real_distribution<double> box(mtbo::kBoxLo, mtbo::kBoxHi);
  std::uniform_int_distribution<int> task(0, m - 1);
  std::normal_distribution<double> nd(0.0, 1.0);

  mtbo::ObservationSet out;
  out.num_tasks = m;
  if (block) {
    out.design = mtbo::Design::Block;
    const int points = std::max(1, n / m);
    for (int t = 0; t < m; ++t) {
      auto peng = mtbo::make_engine(mtbo::mix_seed(0xB10C, static_cast<std::uint64_t>(n)));
      std::uniform_real_distribution<double> pbox(mtbo::kBoxLo, mtbo::kBoxHi);
      for (int k = 0; k < points; ++k) {
        const mtbo::SearchPoint x(pbox(peng), pbox(peng));
        out.obs.push_back({x, t, nd(eng), false});
      }
    }
  } else {
    out.design = mtbo::Design::Irregular;
    for (int k = 0; k < n; ++k) {
      const mtbo::SearchPoint x(box(eng), box(eng));
      out.obs.push_back({x, task(eng), nd(eng), false});
    }
  }
  return out;
}

}  // namespace oracle
