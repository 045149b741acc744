#include "mtbo/mtgp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "mtbo/rng.hpp"

namespace mtbo {

namespace {

constexpr double kJitterBase = 1e-8;
constexpr int kJitterEscalations = 3;
constexpr double kLog2Pi = 1.8378770664093453;

double sqrt5 = std::sqrt(5.0);

// Lower Cholesky of sigma + jitter, escalating jitter x10 up to 3 times.
std::pair<Eigen::MatrixXd, double> factorize(const Eigen::MatrixXd& sigma) {
  const Eigen::Index n = sigma.rows();
  double jitter = kJitterBase * sigma.diagonal().mean();
  for (int attempt = 0; attempt <= kJitterEscalations; ++attempt) {
    Eigen::MatrixXd work = sigma;
    work.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) return {llt.matrixL(), jitter};
    jitter *= 10.0;
  }
  throw FactorizationFailure("joint covariance not positive definite after jitter escalation (n=" +
                             std::to_string(n) + ")");
}

Eigen::VectorXd residual(const ObservationSet& train, const MTGPHyperparams& params) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(train.size()));
  for (std::size_t a = 0; a < train.size(); ++a)
    r(static_cast<Eigen::Index>(a)) = train.obs[a].y - params.mu(train.obs[a].task);
  return r;
}

}  // namespace

double matern52(const SearchPoint& a, const SearchPoint& b, double length_scale) {
  const double r = (a - b).norm();
  const double t = sqrt5 * r / length_scale;
  return (1.0 + t + t * t / 3.0) * std::exp(-t);
}

double cross_task_kernel(const SearchPoint& a, int task_a, const SearchPoint& b,
                         int task_b, const MTGPHyperparams& params) {
  return params.task_cov()(task_a, task_b) * matern52(a, b, params.length_scale());
}

Eigen::MatrixXd joint_covariance_raw(const ObservationSet& train,
                                     const MTGPHyperparams& params) {
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());
  const Eigen::MatrixXd kt = params.task_cov();
  const double ls = params.length_scale();
  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& oa = train.obs[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b <= a; ++b) {
      const auto& ob = train.obs[static_cast<std::size_t>(b)];
      const double v = kt(oa.task, ob.task) * matern52(oa.point, ob.point, ls);
      sigma(a, b) = v;
      sigma(b, a) = v;
    }
    sigma(a, a) = kt(oa.task, oa.task) * matern52(oa.point, oa.point, ls) +
                  params.noise_var(oa.task);
  }
  return sigma;
}

Eigen::MatrixXd joint_covariance_kron(const std::vector<SearchPoint>& points,
                                      const MTGPHyperparams& params) {
  const int m = params.num_tasks();
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  const Eigen::MatrixXd kt = params.task_cov();
  const double ls = params.length_scale();

  Eigen::MatrixXd kx(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      kx(a, b) = matern52(points[static_cast<std::size_t>(a)],
                          points[static_cast<std::size_t>(b)], ls);

  Eigen::MatrixXd sigma(m * n, m * n);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l)
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
          sigma(i * n + a, l * n + b) = kt(i, l) * kx(a, b);
  for (int i = 0; i < m; ++i)
    for (Eigen::Index a = 0; a < n; ++a)
      sigma(i * n + a, i * n + a) += params.noise_var(i);
  return sigma;
}

double log_marginal_likelihood(const ObservationSet& train, const MTGPHyperparams& params) {
  const Eigen::MatrixXd sigma = joint_covariance_raw(train, params);
  auto [chol, jitter] = factorize(sigma);
  (void)jitter;
  const Eigen::VectorXd r = residual(train, params);
  const Eigen::VectorXd v = chol.triangularView<Eigen::Lower>().solve(r);
  const double n = static_cast<double>(train.size());
  return -0.5 * v.squaredNorm() - chol.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
}

int packed_size(int num_tasks) {
  return num_tasks + num_tasks * (num_tasks + 1) / 2 + 1 + num_tasks;
}

Eigen::VectorXd pack_params(const MTGPHyperparams& params) {
  const int m = params.num_tasks();
  Eigen::VectorXd v(packed_size(m));
  int k = 0;
  for (int i = 0; i < m; ++i) v(k++) = params.mu(i);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j)
      v(k++) = (i == j) ? std::log(params.task_chol(i, i)) : params.task_chol(i, j);
  v(k++) = params.log_length_scale;
  for (int i = 0; i < m; ++i) v(k++) = params.log_noise(i);
  return v;
}

MTGPHyperparams unpack_params(const Eigen::VectorXd& v, int num_tasks) {
  MTGPHyperparams p;
  p.mu.resize(num_tasks);
  p.task_chol = Eigen::MatrixXd::Zero(num_tasks, num_tasks);
  p.log_noise.resize(num_tasks);
  int k = 0;
  for (int i = 0; i < num_tasks; ++i) p.mu(i) = v(k++);
  for (int i = 0; i < num_tasks; ++i)
    for (int j = 0; j <= i; ++j)
      p.task_chol(i, j) = (i == j) ? std::exp(v(k)) : v(k), ++k;
  p.log_length_scale = v(k++);
  for (int i = 0; i < num_tasks; ++i) p.log_noise(i) = v(k++);
  return p;
}

namespace {

// fixed per-fit quantities, so repeated likelihood evaluations only pay for
// kernel values, not pairwise distances
struct TrainCache {
  Eigen::MatrixXd dist;
  std::vector<int> tasks;
  Eigen::VectorXd y;
  int num_tasks = 1;
};

TrainCache make_cache(const ObservationSet& train) {
  TrainCache c;
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());
  c.dist.resize(n, n);
  c.tasks.resize(static_cast<std::size_t>(n));
  c.y.resize(n);
  c.num_tasks = train.num_tasks;
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& oa = train.obs[static_cast<std::size_t>(a)];
    c.tasks[static_cast<std::size_t>(a)] = oa.task;
    c.y(a) = oa.y;
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double d = (oa.point - train.obs[static_cast<std::size_t>(b)].point).norm();
      c.dist(a, b) = d;
      c.dist(b, a) = d;
    }
  }
  return c;
}

LMLResult lml_with_grad_cached(const TrainCache& cache, const MTGPHyperparams& params) {
  const int m = params.num_tasks();
  const Eigen::Index n = cache.y.size();
  const Eigen::MatrixXd kt = params.task_cov();
  const double ls = params.length_scale();

  Eigen::MatrixXd kx(n, n);      // matern values
  Eigen::MatrixXd dkx(n, n);     // d matern / d log length_scale
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b <= a; ++b) {
      const double t = sqrt5 * cache.dist(a, b) / ls;
      const double e = std::exp(-t);
      kx(a, b) = kx(b, a) = (1.0 + t + t * t / 3.0) * e;
      dkx(a, b) = dkx(b, a) = (t * t / 3.0) * (1.0 + t) * e;
    }

  Eigen::MatrixXd sigma(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const int ta = cache.tasks[static_cast<std::size_t>(a)];
    for (Eigen::Index b = 0; b < n; ++b)
      sigma(a, b) = kt(ta, cache.tasks[static_cast<std::size_t>(b)]) * kx(a, b);
    sigma(a, a) += params.noise_var(ta);
  }

  auto [chol, jitter] = factorize(sigma);
  (void)jitter;
  Eigen::VectorXd r(n);
  for (Eigen::Index a = 0; a < n; ++a)
    r(a) = cache.y(a) - params.mu(cache.tasks[static_cast<std::size_t>(a)]);
  Eigen::VectorXd alpha = chol.triangularView<Eigen::Lower>().solve(r);
  const double quad = alpha.squaredNorm();
  chol.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha);

  LMLResult out;
  out.value = -0.5 * quad - chol.diagonal().array().log().sum() -
              0.5 * static_cast<double>(n) * kLog2Pi;

  // W = alpha alpha' - Sigma^{-1}; dLML/dtheta = 0.5 tr(W dSigma/dtheta)
  Eigen::MatrixXd sinv = Eigen::MatrixXd::Identity(n, n);
  chol.triangularView<Eigen::Lower>().solveInPlace(sinv);
  chol.triangularView<Eigen::Lower>().transpose().solveInPlace(sinv);
  const Eigen::MatrixXd w = alpha * alpha.transpose() - sinv;

  // per-task-pair reductions of W against kx and dkx
  Eigen::MatrixXd s_kt = Eigen::MatrixXd::Zero(m, m);  // sum W_ab kx_ab by task pair
  double g_ls = 0.0;
  Eigen::VectorXd g_noise = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd g_mu = Eigen::VectorXd::Zero(m);
  for (Eigen::Index a = 0; a < n; ++a) {
    const int ta = cache.tasks[static_cast<std::size_t>(a)];
    g_mu(ta) += alpha(a);
    g_noise(ta) += w(a, a);
    for (Eigen::Index b = 0; b < n; ++b) {
      const int tb = cache.tasks[static_cast<std::size_t>(b)];
      s_kt(ta, tb) += w(a, b) * kx(a, b);
      g_ls += w(a, b) * kt(ta, tb) * dkx(a, b);
    }
  }
  g_ls *= 0.5;
  for (int i = 0; i < m; ++i) g_noise(i) *= params.noise_var(i);  // d sigma^2/d log_noise = 2 sigma^2

  // K^t = L L' => dLML/dL = S L with S = 0.5 * (s_kt + s_kt') = s_kt (symmetric)
  const Eigen::MatrixXd g_chol = s_kt * params.task_chol;

  out.grad.resize(packed_size(m));
  int k = 0;
  for (int i = 0; i < m; ++i) out.grad(k++) = g_mu(i);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j)
      out.grad(k++) = (i == j) ? g_chol(i, i) * params.task_chol(i, i) : g_chol(i, j);
  out.grad(k++) = g_ls;
  for (int i = 0; i < m; ++i) out.grad(k++) = g_noise(i);
  return out;
}

}  // namespace

LMLResult lml_with_grad(const ObservationSet& train, const MTGPHyperparams& params) {
  return lml_with_grad_cached(make_cache(train), params);
}

MTGPModel::MTGPModel(ObservationSet train, MTGPHyperparams params)
    : train_(std::move(train)), params_(std::move(params)) {
  refactor();
}

void MTGPModel::refactor() {
  if (train_.obs.empty()) {
    chol_.resize(0, 0);
    alpha_.resize(0);
    jitter_ = 0.0;
    return;
  }
  const Eigen::MatrixXd sigma = joint_covariance_raw(train_, params_);
  auto [chol, jitter] = factorize(sigma);
  chol_ = std::move(chol);
  jitter_ = jitter;
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(residual(train_, params_));
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

Prediction MTGPModel::predict(const SearchPoint& x, int task) const {
  const Eigen::Index n = static_cast<Eigen::Index>(train_.size());
  const Eigen::MatrixXd kt = params_.task_cov();
  const double ls = params_.length_scale();

  Eigen::VectorXd k(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& oa = train_.obs[static_cast<std::size_t>(a)];
    k(a) = kt(task, oa.task) * matern52(x, oa.point, ls);
  }
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
  Prediction p;
  p.mean = params_.mu(task) + k.dot(alpha_);
  p.variance = std::max(0.0, kt(task, task) - v.squaredNorm());
  return p;
}

void MTGPModel::extend(const Observation& o) {
  const Eigen::Index n = static_cast<Eigen::Index>(train_.size());
  const Eigen::MatrixXd kt = params_.task_cov();
  const double ls = params_.length_scale();

  Eigen::VectorXd k(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& oa = train_.obs[static_cast<std::size_t>(a)];
    k(a) = kt(o.task, oa.task) * matern52(o.point, oa.point, ls);
  }
  const double d = kt(o.task, o.task) + params_.noise_var(o.task) + jitter_;

  const Eigen::VectorXd l12 = chol_.triangularView<Eigen::Lower>().solve(k);
  const double rem = d - l12.squaredNorm();
  train_.obs.push_back(o);
  if (rem <= 0.0) {
    refactor();  // numerically degenerate append, rebuild from scratch
    return;
  }
  Eigen::MatrixXd grown = Eigen::MatrixXd::Zero(n + 1, n + 1);
  grown.topLeftCorner(n, n) = chol_;
  grown.row(n).head(n) = l12.transpose();
  grown(n, n) = std::sqrt(rem);
  chol_ = std::move(grown);
  alpha_ = chol_.triangularView<Eigen::Lower>().solve(residual(train_, params_));
  chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

double MTGPModel::log_marginal() const {
  const Eigen::VectorXd r = residual(train_, params_);
  const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(r);
  return -0.5 * v.squaredNorm() - chol_.diagonal().array().log().sum() -
         0.5 * static_cast<double>(train_.size()) * kLog2Pi;
}

std::string MTGPModel::to_json() const {
  nlohmann::json j;
  j["num_tasks"] = train_.num_tasks;
  j["design"] = train_.design == Design::Block ? "block" : "irregular";
  j["mu"] = std::vector<double>(params_.mu.data(), params_.mu.data() + params_.mu.size());
  std::vector<double> lt;
  for (int i = 0; i < params_.num_tasks(); ++i)
    for (int c = 0; c <= i; ++c) lt.push_back(params_.task_chol(i, c));
  j["task_chol_lower"] = lt;
  j["log_length_scale"] = params_.log_length_scale;
  j["log_noise"] = std::vector<double>(params_.log_noise.data(),
                                       params_.log_noise.data() + params_.log_noise.size());
  nlohmann::json obs = nlohmann::json::array();
  for (const auto& o : train_.obs)
    obs.push_back({{"x", {o.point(0), o.point(1)}}, {"task", o.task}, {"y", o.y},
                   {"imputed", o.imputed}});
  j["observations"] = obs;
  return j.dump(2);
}

MTGPModel MTGPModel::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int m = j.at("num_tasks").get<int>();

  MTGPHyperparams p;
  const auto mu = j.at("mu").get<std::vector<double>>();
  p.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
  p.task_chol = Eigen::MatrixXd::Zero(m, m);
  const auto lt = j.at("task_chol_lower").get<std::vector<double>>();
  std::size_t k = 0;
  for (int i = 0; i < m; ++i)
    for (int c = 0; c <= i; ++c) p.task_chol(i, c) = lt[k++];
  p.log_length_scale = j.at("log_length_scale").get<double>();
  const auto ln = j.at("log_noise").get<std::vector<double>>();
  p.log_noise = Eigen::Map<const Eigen::VectorXd>(ln.data(), static_cast<Eigen::Index>(ln.size()));

  ObservationSet train;
  train.num_tasks = m;
  train.design = j.at("design").get<std::string>() == "block" ? Design::Block : Design::Irregular;
  for (const auto& o : j.at("observations")) {
    Observation ob;
    ob.point = SearchPoint(o.at("x")[0].get<double>(), o.at("x")[1].get<double>());
    ob.task = o.at("task").get<int>();
    ob.y = o.at("y").get<double>();
    ob.imputed = o.value("imputed", false);
    train.obs.push_back(ob);
  }
  return MTGPModel(std::move(train), std::move(p));
}

MTGPHyperparams default_init(const ObservationSet& train) {
  const int m = train.num_tasks;
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());

  Eigen::VectorXd y(n);
  for (Eigen::Index a = 0; a < n; ++a) y(a) = train.obs[static_cast<std::size_t>(a)].y;
  const double y_mean = n > 0 ? y.mean() : 0.0;
  double y_sd = n > 1 ? std::sqrt((y.array() - y_mean).square().sum() /
                                  (static_cast<double>(n) - 1.0))
                      : 1.0;
  if (y_sd <= 0.0) y_sd = 1.0;

  MTGPHyperparams p;
  p.mu.resize(m);
  p.log_noise.resize(m);
  for (int i = 0; i < m; ++i) {
    double sum = 0.0, sumsq = 0.0;
    int cnt = 0;
    for (const auto& o : train.obs)
      if (o.task == i) {
        sum += o.y;
        sumsq += o.y * o.y;
        ++cnt;
      }
    const double ti_mean = cnt > 0 ? sum / cnt : y_mean;
    double ti_sd = cnt > 1 ? std::sqrt(std::max(0.0, (sumsq - cnt * ti_mean * ti_mean) /
                                                     (cnt - 1.0)))
                           : y_sd;
    if (ti_sd <= 0.0) ti_sd = y_sd;
    p.mu(i) = ti_mean;
    p.log_noise(i) = std::log(std::max(0.1 * ti_sd, 1e-3));
  }
  p.task_chol = y_sd * Eigen::MatrixXd::Identity(m, m);
  p.log_length_scale = std::log(0.5 * (kBoxHi - kBoxLo) * std::sqrt(2.0));
  return p;
}

namespace {

// parameter sanity box; the optimizer rejects steps outside
bool in_bounds(const Eigen::VectorXd& v, int m) {
  int k = 0;
  for (int i = 0; i < m; ++i)
    if (std::abs(v(k++)) > 1e6) return false;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      const double b = (i == j) ? 12.0 : 1e4;
      if (std::abs(v(k)) > b) return false;
      ++k;
    }
  if (std::abs(v(k++)) > 8.0) return false;
  for (int i = 0; i < m; ++i)
    if (v(k++) < -14.0 || v(k - 1) > 8.0) return false;
  return true;
}

struct LBFGSResult {
  Eigen::VectorXd x;
  double f = std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Minimizes f(x); fn returns {value, gradient} or throws FactorizationFailure.
template <typename Fn>
LBFGSResult lbfgs_minimize(Eigen::VectorXd x, Fn&& fn, int max_iter = 200) {
  constexpr int kMem = 8;
  constexpr double kArmijo = 1e-4;

  auto eval = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) -> double {
    try {
      return fn(p, g);
    } catch (const FactorizationFailure&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd grad(x.size());
  double f = eval(x, &grad);
  if (!std::isfinite(f)) return {};

  std::vector<Eigen::VectorXd> s_hist, y_hist;
  std::vector<double> rho_hist;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() < 1e-6 * std::max(1.0, std::abs(f))) break;

    // two-loop recursion
    Eigen::VectorXd q = grad;
    std::vector<double> a(s_hist.size());
    for (int h = static_cast<int>(s_hist.size()) - 1; h >= 0; --h) {
      a[static_cast<std::size_t>(h)] =
          rho_hist[static_cast<std::size_t>(h)] * s_hist[static_cast<std::size_t>(h)].dot(q);
      q -= a[static_cast<std::size_t>(h)] * y_hist[static_cast<std::size_t>(h)];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& yv = y_hist.back();
      q *= s.dot(yv) / yv.squaredNorm();
    }
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double b = rho_hist[h] * y_hist[h].dot(q);
      q += (a[h] - b) * s_hist[h];
    }
    Eigen::VectorXd dir = -q;
    double dg = dir.dot(grad);
    if (dg >= 0.0) {  // not a descent direction, fall back to steepest descent
      dir = -grad;
      dg = -grad.squaredNorm();
    }

    double step = (iter == 0 && s_hist.empty())
                      ? std::min(1.0, 1.0 / std::max(1.0, grad.norm()))
                      : 1.0;
    Eigen::VectorXd x_new, g_new(x.size());
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * dir;
      f_new = eval(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * dg) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-10) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kMem) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
    }
    const double df = f - f_new;
    x = std::move(x_new);
    f = f_new;
    grad = g_new;
    if (df < 1e-10 * (1.0 + std::abs(f))) break;
  }
  return {x, f, true};
}

}  // namespace

MTGPModel fit(const ObservationSet& train, int restarts, std::uint64_t seed) {
  const int m = train.num_tasks;
  const MTGPHyperparams init = default_init(train);
  const Eigen::VectorXd x0 = pack_params(init);
  const TrainCache cache = make_cache(train);
  const int max_iter = train.size() > 120 ? 60 : 200;

  auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) -> double {
    if (!in_bounds(p, m)) return std::numeric_limits<double>::infinity();
    const MTGPHyperparams hp = unpack_params(p, m);
    const LMLResult res = lml_with_grad_cached(cache, hp);
    if (g) *g = -res.grad;
    return -res.value;
  };

  double best_f = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd x = x0;
    if (r > 0) {
      auto eng = make_engine(mix_seed(seed, static_cast<std::uint64_t>(r)));
      std::normal_distribution<double> nd(0.0, 1.0);
      int k = 0;
      for (int i = 0; i < m; ++i) x(k++) += 0.5 * nd(eng);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j) x(k++) += (i == j ? 0.5 : 0.3) * nd(eng);
      x(k++) += 0.7 * nd(eng);
      for (int i = 0; i < m; ++i) x(k++) += 0.5 * nd(eng);
    }
    const LBFGSResult res = lbfgs_minimize(x, objective, max_iter);
    if (res.ok && res.f < best_f) {
      best_f = res.f;
      best_x = res.x;
    }
  }
  if (!best_x.size()) throw FitFailure("all MLE restarts failed factorization");
  return MTGPModel(train, unpack_params(best_x, m));
}

ObservationSet impute_missing(const ObservationSet& train, const MTGPHyperparams& params) {
  ObservationSet out = train;
  // distinct points in first-appearance order
  std::vector<SearchPoint> points;
  for (const auto& o : train.obs) {
    bool seen = false;
    for (const auto& p : points)
      if (p == o.point) {
        seen = true;
        break;
      }
    if (!seen) points.push_back(o.point);
  }
  for (const auto& p : points) {
    for (int t = 0; t < train.num_tasks; ++t) {
      bool present = false;
      for (const auto& o : train.obs)
        if (o.task == t && o.point == p) {
          present = true;
          break;
        }
      if (!present) out.obs.push_back({p, t, params.mu(t), true});
    }
  }
  out.design = Design::Block;
  return out;
}

}  // namespace mtbo
