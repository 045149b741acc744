#include "mtbo/bo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mtbo/rng.hpp"
#include "mtbo/svm.hpp"

namespace mtbo {

namespace {

constexpr std::uint64_t kFitTag = 0xF17;
constexpr std::uint64_t kSelectTag = 0xE1;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

double halton(std::uint64_t index, std::uint64_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

struct Scored {
  SearchPoint point;
  double ei = -1.0;
  double mean = 0.0;
};

// EI descending, then posterior mean ascending, then lexicographic coords
bool better(const Scored& a, const Scored& b) {
  if (a.ei != b.ei) return a.ei > b.ei;
  if (a.mean != b.mean) return a.mean < b.mean;
  if (a.point(0) != b.point(0)) return a.point(0) < b.point(0);
  return a.point(1) < b.point(1);
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  std::int64_t elapsed_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct LoopState {
  ObservationSet obs;
  std::vector<double> best_raw;
  Trace trace;
  bool deterministic_timing = false;

  explicit LoopState(int num_tasks, bool det_timing)
      : best_raw(static_cast<std::size_t>(num_tasks),
                 std::numeric_limits<double>::infinity()),
        deterministic_timing(det_timing) {
    obs.num_tasks = num_tasks;
    trace.num_tasks = num_tasks;
  }

  void evaluate(const Objective& objective, const SearchPoint& x, int task,
                int global_iter) {
    Stopwatch sw;
    const EvalResult res = objective(x);
    const double y = transform_loss(res.raw_loss);
    obs.obs.push_back({x, task, y, false});
    auto& best = best_raw[static_cast<std::size_t>(task)];
    best = std::min(best, res.raw_loss);

    TraceRecord rec;
    rec.global_iter = global_iter;
    rec.task = task;
    rec.point = x;
    rec.raw_loss = res.raw_loss;
    rec.transformed_loss = y;
    rec.best_so_far_per_task = best_raw;
    rec.wall_time_ms = deterministic_timing ? 0 : sw.elapsed_ms();
    rec.flags = res.flags;
    trace.records.push_back(std::move(rec));
  }

  double y_best(int task, bool per_task) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : obs.obs)
      if (!o.imputed && (!per_task || o.task == task)) best = std::min(best, o.y);
    return best;
  }
};

RunResult finish(LoopState&& state, MTGPModel&& final_model) {
  RunResult out;
  out.trace = std::move(state.trace);
  const int m = out.trace.num_tasks;
  out.best_points.resize(static_cast<std::size_t>(m));
  out.best_losses.assign(static_cast<std::size_t>(m),
                         std::numeric_limits<double>::infinity());
  for (const auto& rec : out.trace.records) {
    auto& best = out.best_losses[static_cast<std::size_t>(rec.task)];
    if (rec.raw_loss < best) {
      best = rec.raw_loss;
      out.best_points[static_cast<std::size_t>(rec.task)] = rec.point;
    }
  }
  out.final_model = std::move(final_model);
  return out;
}

}  // namespace

double expected_improvement(double mean, double variance, double y_best) {
  const double sigma = std::sqrt(std::max(0.0, variance));
  if (sigma < 1e-12) return std::max(0.0, y_best - mean);
  const double eta = (y_best - mean) / sigma;
  return sigma * (eta * normal_cdf(eta) + normal_pdf(eta));
}

double expected_improvement(const MTGPModel& model, const QueryPoint& q, double y_best) {
  const Prediction p = model.predict(q.point, q.task);
  return expected_improvement(p.mean, p.variance, y_best);
}

SearchPoint maximize_ei(const MTGPModel& model, int task, double y_best,
                        std::uint64_t seed) {
  constexpr int kCandidates = 1024;
  constexpr int kTopStarts = 8;
  constexpr int kRefineEvals = 64;
  const double span = kBoxHi - kBoxLo;

  auto score = [&](const SearchPoint& x) {
    const Prediction p = model.predict(x, task);
    return Scored{x, expected_improvement(p.mean, p.variance, y_best), p.mean};
  };

  // seeded Cranley-Patterson rotation of a Halton (2,3) sequence
  auto eng = make_engine(mix_seed(seed, 0x9a17));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double shift0 = unif(eng), shift1 = unif(eng);

  std::vector<Scored> cands;
  cands.reserve(kCandidates);
  for (int k = 1; k <= kCandidates; ++k) {
    double u = halton(static_cast<std::uint64_t>(k), 2) + shift0;
    double v = halton(static_cast<std::uint64_t>(k), 3) + shift1;
    u -= std::floor(u);
    v -= std::floor(v);
    cands.push_back(score(SearchPoint(kBoxLo + span * u, kBoxLo + span * v)));
  }

  std::partial_sort(cands.begin(), cands.begin() + kTopStarts, cands.end(), better);
  Scored best = cands.front();

  for (int s = 0; s < kTopStarts; ++s) {
    Scored cur = cands[static_cast<std::size_t>(s)];
    double step = 0.25 * span;
    int evals = 0;
    while (evals < kRefineEvals && step > 1e-7) {
      Scored best_nb = cur;
      bool moved = false;
      for (int axis = 0; axis < 2 && evals < kRefineEvals; ++axis) {
        for (double dir : {-1.0, 1.0}) {
          if (evals >= kRefineEvals) break;
          SearchPoint x = cur.point;
          x(axis) = std::clamp(x(axis) + dir * step, kBoxLo, kBoxHi);
          if (x == cur.point) continue;
          const Scored sc = score(x);
          ++evals;
          if (better(sc, best_nb)) {
            best_nb = sc;
            moved = true;
          }
        }
      }
      if (moved) {
        cur = best_nb;
      } else {
        step *= 0.5;
      }
    }
    if (better(cur, best)) best = cur;
  }
  return best.point;
}

RunResult stbo_run(const Objective& objective, int iters, std::uint64_t seed,
                   int fit_restarts, bool deterministic_timing) {
  LoopState state(1, deterministic_timing);
  state.evaluate(objective, SearchPoint(0.0, 0.0), 0, 0);

  MTGPModel model;
  for (int it = 1; it < iters; ++it) {
    const std::uint64_t n = state.obs.size();
    model = fit(state.obs, fit_restarts, mix_seed(seed, kFitTag, n));
    const SearchPoint x =
        maximize_ei(model, 0, state.y_best(0, false), mix_seed(seed, kSelectTag, n));
    state.evaluate(objective, x, 0, it);
  }
  MTGPModel final_model =
      fit(state.obs, fit_restarts, mix_seed(seed, kFitTag, state.obs.size()));
  return finish(std::move(state), std::move(final_model));
}

RunResult mtbo_run(const std::vector<Objective>& objectives, const MTBOConfig& cfg) {
  const int m = static_cast<int>(objectives.size());
  if (m < 1 || cfg.iter1 < 1 || cfg.iter2 <= cfg.iter1)
    throw std::invalid_argument("mtbo_run: need M >= 1, iter1 >= 1, iter2 > iter1");

  LoopState state(m, cfg.deterministic_timing);

  // phase 1: all tasks at (C, gamma) = (1, 1)
  for (int t = 0; t < m; ++t)
    state.evaluate(objectives[static_cast<std::size_t>(t)], SearchPoint(0.0, 0.0), t, 0);

  // phase 2: STBO on task 0; every task evaluated at each selected point
  for (int it = 1; it < cfg.iter1; ++it) {
    ObservationSet task0;
    task0.num_tasks = 1;
    for (const auto& o : state.obs.obs)
      if (o.task == 0) task0.obs.push_back({o.point, 0, o.y, false});
    const std::uint64_t n = task0.size();

    const MTGPModel gp = fit(task0, cfg.fit_restarts, mix_seed(cfg.seed, kFitTag, n));
    double y_best = std::numeric_limits<double>::infinity();
    for (const auto& o : task0.obs) y_best = std::min(y_best, o.y);
    const SearchPoint x = maximize_ei(gp, 0, y_best, mix_seed(cfg.seed, kSelectTag, n));

    for (int t = 0; t < m; ++t)
      state.evaluate(objectives[static_cast<std::size_t>(t)], x, t, it);
  }

  // phase 3: round-robin per-task EI on the coregionalized GP
  auto train_set = [&]() -> ObservationSet {
    if (!cfg.impute_mode) return state.obs;
    return impute_missing(state.obs, default_init(state.obs));
  };

  MTGPModel model;
  try {
    for (int i = cfg.iter1; i < cfg.iter2; ++i) {
      const int t = (i - cfg.iter1) % m;
      if ((i - cfg.iter1) % m == 0) {
        const ObservationSet ts = train_set();
        model = fit(ts, cfg.fit_restarts, mix_seed(cfg.seed, kFitTag, state.obs.size()));
      }
      const SearchPoint x =
          maximize_ei(model, t, state.y_best(t, cfg.per_task_ybest),
                      mix_seed(cfg.seed, kSelectTag, state.obs.size()));
      state.evaluate(objectives[static_cast<std::size_t>(t)], x, t, i);
      model.extend(state.obs.obs.back());
    }
  } catch (const FitFailure&) {
    // partial trace is still meaningful; surface the failure on the last record
    if (!state.trace.records.empty())
      state.trace.records.back().flags.push_back("FitFailure");
    return finish(std::move(state), std::move(model));
  }

  MTGPModel final_model = fit(train_set(), cfg.fit_restarts,
                              mix_seed(cfg.seed, kFitTag, state.obs.size()));
  return finish(std::move(state), std::move(final_model));
}

std::vector<double> best_so_far(const Trace& trace, int task) {
  std::vector<double> out;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& rec : trace.records)
    if (rec.task == task) {
      best = std::min(best, rec.raw_loss);
      out.push_back(best);
    }
  return out;
}

void write_trace_csv(const Trace& trace, const std::string& path) {
  std::ofstream out(path);
  out << "global_iter,task,log10_c,log10_gamma,c,gamma,raw_loss,transformed_loss,"
         "best_so_far,wall_time_ms,flags\n";
  char buf[512];
  for (const auto& rec : trace.records) {
    std::string flags;
    for (std::size_t i = 0; i < rec.flags.size(); ++i) {
      if (i) flags += ';';
      flags += rec.flags[i];
    }
    std::snprintf(buf, sizeof(buf),
                  "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%lld,%s\n",
                  rec.global_iter, rec.task + 1, rec.point(0), rec.point(1),
                  std::pow(10.0, rec.point(0)), std::pow(10.0, rec.point(1)),
                  rec.raw_loss, rec.transformed_loss,
                  rec.best_so_far_per_task[static_cast<std::size_t>(rec.task)],
                  static_cast<long long>(rec.wall_time_ms), flags.c_str());
    out << buf;
  }
}

}  // namespace mtbo
