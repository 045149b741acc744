#include "mtbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "mtbo/rng.hpp"

namespace mtbo {

int worker_count() {
  if (const char* env = std::getenv("MTBO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const int workers = std::min<int>(worker_count(), static_cast<int>(count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& t : pool) t.join();
}

std::vector<PhantomCase> gen_phantom(const PhantomSpec& spec) {
  std::vector<PhantomCase> cases;
  cases.reserve(static_cast<std::size_t>(spec.n_cases));

  const int stride = 4;  // coarse lattice pitch for the smooth texture
  const int cx = spec.grid.x / stride + 2;
  const int cy = spec.grid.y / stride + 2;
  const int cz = spec.grid.z / stride + 2;

  for (int c = 0; c < spec.n_cases; ++c) {
    auto eng = make_engine(mix_seed(spec.seed, static_cast<std::uint64_t>(c)));
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);

    PhantomCase pc;
    pc.label = (c % 2 == 0) ? -1 : 1;
    char id[32];
    std::snprintf(id, sizeof(id), "case_%04d", c);
    pc.case_id = id;

    // coarse Gaussian lattice, trilinear upsample -> smooth base texture
    std::vector<double> coarse(static_cast<std::size_t>(cx * cy * cz));
    for (auto& v : coarse) v = nd(eng);
    auto coarse_at = [&](int x, int y, int z) {
      return coarse[static_cast<std::size_t>(x + cx * (y + cy * z))];
    };

    pc.vol.dims = spec.grid;
    pc.vol.data.resize(spec.grid.count());
    pc.mask.dims = spec.grid;
    pc.mask.data.assign(spec.grid.count(), 0);

    const double jx = 3.0 * (ud(eng) - 0.5);
    const double jy = 3.0 * (ud(eng) - 0.5);
    const double jz = 3.0 * (ud(eng) - 0.5);
    const double ctr_x = 0.5 * spec.grid.x + jx;
    const double ctr_y = 0.5 * spec.grid.y + jy;
    const double ctr_z = 0.5 * spec.grid.z + jz;
    const double radius = spec.radius_min + (spec.radius_max - spec.radius_min) * ud(eng);

    const double mean_shift = pc.label > 0 ? spec.class_effect : 0.0;
    const double speckle_sd = pc.label > 0 ? 0.8 * spec.class_effect : 0.0;

    std::size_t idx = 0;
    for (int z = 0; z < spec.grid.z; ++z)
      for (int y = 0; y < spec.grid.y; ++y)
        for (int x = 0; x < spec.grid.x; ++x, ++idx) {
          const double fx = static_cast<double>(x) / stride;
          const double fy = static_cast<double>(y) / stride;
          const double fz = static_cast<double>(z) / stride;
          const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy),
                    z0 = static_cast<int>(fz);
          const double tx = fx - x0, ty = fy - y0, tz = fz - z0;
          double s = 0.0;
          for (int dz = 0; dz <= 1; ++dz)
            for (int dy = 0; dy <= 1; ++dy)
              for (int dx = 0; dx <= 1; ++dx) {
                const double w = (dx ? tx : 1.0 - tx) * (dy ? ty : 1.0 - ty) *
                                 (dz ? tz : 1.0 - tz);
                s += w * coarse_at(x0 + dx, y0 + dy, z0 + dz);
              }
          double value = 100.0 + spec.noise_sd * s + mean_shift;
          if (speckle_sd > 0.0) value += speckle_sd * nd(eng);
          pc.vol.data[idx] = static_cast<float>(value);

          const double dxr = x - ctr_x, dyr = y - ctr_y, dzr = z - ctr_z;
          if (dxr * dxr + dyr * dyr + dzr * dzr <= radius * radius)
            pc.mask.data[idx] = 1;
        }
    cases.push_back(std::move(pc));
  }
  return cases;
}

BuildResult build_datasets(const std::vector<PhantomCase>& cases,
                           const std::vector<DiscretizationStrategy>& strategies) {
  const std::size_t ns = strategies.size();
  std::vector<std::vector<FeatureExtraction>> feats(
      ns, std::vector<FeatureExtraction>(cases.size()));

  parallel_for(cases.size() * ns, [&](std::size_t idx) {
    const std::size_t s = idx / cases.size();
    const std::size_t c = idx % cases.size();
    feats[s][c] = extract_all(cases[c].vol, cases[c].mask, strategies[s]);
  });

  BuildResult out;
  std::vector<bool> keep(cases.size(), true);
  for (std::size_t c = 0; c < cases.size(); ++c)
    for (std::size_t s = 0; s < ns; ++s)
      if (!feats[s][c].ok() && keep[c]) {
        keep[c] = false;
        out.rejected_cases.push_back(cases[c].case_id);
      }

  Eigen::Index n = 0;
  for (bool k : keep) n += k;
  for (std::size_t s = 0; s < ns; ++s) {
    Dataset d;
    d.features.resize(n, kNumFeatures);
    d.labels.resize(n);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < cases.size(); ++c) {
      if (!keep[c]) continue;
      for (int f = 0; f < kNumFeatures; ++f)
        d.features(row, f) = feats[s][c].vec.values[static_cast<std::size_t>(f)];
      d.labels(row) = cases[c].label;
      d.case_ids.push_back(cases[c].case_id);
      ++row;
    }
    out.datasets.push_back(std::move(d));
  }
  return out;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  out << "case_id,label";
  for (const auto& name : feature_names()) out << ',' << name;
  out << '\n';
  char buf[64];
  for (Eigen::Index r = 0; r < data.labels.size(); ++r) {
    out << data.case_ids[static_cast<std::size_t>(r)] << ','
        << static_cast<int>(data.labels(r));
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", data.features(r, c));
      out << buf;
    }
    out << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");

  std::vector<std::vector<double>> rows;
  std::vector<std::string> ids;
  std::vector<double> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    ids.push_back(cell);
    std::getline(ss, cell, ',');
    labels.push_back(std::stod(cell));
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }

  Dataset d;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index cols = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  d.features.resize(n, cols);
  d.labels.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    d.labels(r) = labels[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < cols; ++c)
      d.features(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  d.case_ids = std::move(ids);
  return d;
}

std::vector<SearchPoint> landscape_points(int grid_side) {
  std::vector<SearchPoint> points;
  points.reserve(static_cast<std::size_t>(grid_side) * static_cast<std::size_t>(grid_side));
  for (int j = 0; j < grid_side; ++j)
    for (int k = 0; k < grid_side; ++k)
      points.emplace_back(
          kBoxLo + (kBoxHi - kBoxLo) * static_cast<double>(j) / (grid_side - 1),
          kBoxLo + (kBoxHi - kBoxLo) * static_cast<double>(k) / (grid_side - 1));
  return points;
}

LandscapeGrid eval_landscape(const Dataset& data, const CVConfig& cv, int grid_side) {
  LandscapeGrid grid;
  grid.grid_side = grid_side;
  grid.points = landscape_points(grid_side);
  grid.losses.resize(grid.points.size());
  parallel_for(grid.points.size(), [&](std::size_t i) {
    const SVMHyperparams hp{std::pow(10.0, grid.points[i](0)),
                            std::pow(10.0, grid.points[i](1))};
    grid.losses[i] = cv_loss(data, hp, cv).loss;
  });
  return grid;
}

void write_landscape_csv(const LandscapeGrid& grid, const std::string& path) {
  std::ofstream out(path);
  out << "log10_c,log10_gamma,loss\n";
  char buf[128];
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", grid.points[i](0),
                  grid.points[i](1), grid.losses[i]);
    out << buf;
  }
}

RmsePair rmse(const MTGPModel& model, const LandscapeGrid& landscape, int task) {
  double sum_t = 0.0, sum_r = 0.0;
  for (std::size_t i = 0; i < landscape.points.size(); ++i) {
    const Prediction p = model.predict(landscape.points[i], task);
    const double truth_t = transform_loss(landscape.losses[i]);
    const double dt = truth_t - p.mean;
    sum_t += dt * dt;
    const double dr = landscape.losses[i] - inverse_transform(p.mean);
    sum_r += dr * dr;
  }
  const double n = static_cast<double>(landscape.points.size());
  return {std::sqrt(sum_t / n), std::sqrt(sum_r / n)};
}

std::vector<SyntheticTask> synthetic_tasks(int m, double correlation, std::uint64_t seed) {
  auto g = [](const SearchPoint& x) {
    const SearchPoint p1(-1.5, 1.0), p2(1.2, -0.8);
    return 0.45 - 0.28 * std::exp(-(x - p1).squaredNorm() / 2.2) -
           0.38 * std::exp(-(x - p2).squaredNorm() / 3.0);
  };
  auto h = [](const SearchPoint& x) {
    return 0.5 * std::sin(0.9 * x(0) + 0.4) * std::cos(0.7 * x(1) - 0.3);
  };

  const double shift_mag = 0.8 * (1.0 - correlation);
  const double scale_mag = 0.15 * (1.0 - correlation);

  std::vector<SyntheticTask> tasks;
  for (int t = 0; t < m; ++t) {
    auto eng = make_engine(mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::uniform_real_distribution<double> ud(-1.0, 1.0);
    SearchPoint delta(0.0, 0.0);
    double c_t = 0.0;
    if (t > 0) {  // task 0 is the reference objective
      const double angle = M_PI * ud(eng);
      delta = shift_mag * SearchPoint(std::cos(angle), std::sin(angle));
      c_t = scale_mag * ud(eng);
    }

    auto f = [g, h, delta, c_t](const SearchPoint& x) {
      return std::clamp(g(x + delta) + c_t * h(x), 0.02, 0.98);
    };

    SyntheticTask task;
    task.objective = [f](const SearchPoint& x) { return EvalResult{f(x), {}}; };

    // 1001^2 grid oracle for the stored optimum
    constexpr int kSide = 1001;
    double best = 1.0, worst = 0.0;
    SearchPoint argbest(0.0, 0.0);
    for (int j = 0; j < kSide; ++j)
      for (int k = 0; k < kSide; ++k) {
        const SearchPoint x(kBoxLo + (kBoxHi - kBoxLo) * j / (kSide - 1.0),
                            kBoxLo + (kBoxHi - kBoxLo) * k / (kSide - 1.0));
        const double v = f(x);
        if (v < best) {
          best = v;
          argbest = x;
        }
        worst = std::max(worst, v);
      }
    task.optimum = argbest;
    task.optimal_loss = best;
    task.max_loss = worst;
    tasks.push_back(std::move(task));
  }
  return tasks;
}

namespace {

int evals_to_threshold(const Trace& trace, int task, double threshold) {
  int count = 0;
  for (const auto& rec : trace.records)
    if (rec.task == task) {
      ++count;
      if (rec.raw_loss <= threshold) return count;
    }
  return -1;
}

}  // namespace

RunReport compare_runs(const std::vector<Dataset>& datasets, const CompareOptions& opts) {
  const int m = static_cast<int>(datasets.size());
  const MTBOConfig& cfg = opts.cfg;
  const int per_task_budget = cfg.iter1 + (cfg.iter2 - cfg.iter1) / m;

  CVConfig cv{cfg.folds, cfg.seed};
  std::vector<Objective> objectives;
  for (int t = 0; t < m; ++t) {
    const Dataset& d = datasets[static_cast<std::size_t>(t)];
    objectives.push_back([&d, cv](const SearchPoint& x) {
      const SVMHyperparams hp{std::pow(10.0, x(0)), std::pow(10.0, x(1))};
      const CVResult res = cv_loss(d, hp, cv);
      EvalResult out{res.loss, {}};
      if (res.nonconvergence) out.flags.push_back("NonConvergence");
      return out;
    });
  }

  RunReport report;
  report.cfg = cfg;
  report.num_tasks = m;
  report.mtbo_trace.num_tasks = m;
  report.stbo_trace.num_tasks = m;

  // STBO baseline, one independent run per task
  std::vector<RunResult> stbo(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t t) {
    stbo[t] = stbo_run(objectives[t], per_task_budget,
                       mix_seed(cfg.seed, 0x57B0, t), cfg.fit_restarts,
                       cfg.deterministic_timing);
  });

  RunResult mtbo = mtbo_run(objectives, cfg);

  for (int t = 0; t < m; ++t) {
    for (auto rec : stbo[static_cast<std::size_t>(t)].trace.records) {
      rec.task = t;
      report.stbo_trace.records.push_back(std::move(rec));
    }
  }
  report.mtbo_trace = mtbo.trace;

  std::vector<LandscapeGrid> landscapes;
  if (opts.landscape_grid_side > 0) {
    landscapes.resize(static_cast<std::size_t>(m));
    for (int t = 0; t < m; ++t)
      landscapes[static_cast<std::size_t>(t)] =
          eval_landscape(datasets[static_cast<std::size_t>(t)], cv,
                         opts.landscape_grid_side);
  }

  for (int t = 0; t < m; ++t) {
    const auto& sr = stbo[static_cast<std::size_t>(t)];
    TaskReport tr;
    tr.task = t;
    tr.name = t < static_cast<int>(opts.task_names.size())
                  ? opts.task_names[static_cast<std::size_t>(t)]
                  : "task " + std::to_string(t + 1);
    tr.stbo_point = sr.best_points[0];
    tr.stbo_loss = sr.best_losses[0];
    tr.mtbo_point = mtbo.best_points[static_cast<std::size_t>(t)];
    tr.mtbo_loss = mtbo.best_losses[static_cast<std::size_t>(t)];

    const double best = std::min(tr.stbo_loss, tr.mtbo_loss);
    const double initial = report.mtbo_trace.records[static_cast<std::size_t>(t)].raw_loss;
    const double threshold = best + 0.05 * std::max(0.0, initial - best);
    tr.stbo_evals_to_threshold = evals_to_threshold(report.stbo_trace, t, threshold);
    tr.mtbo_evals_to_threshold = evals_to_threshold(report.mtbo_trace, t, threshold);

    if (opts.landscape_grid_side > 0) {
      const auto& grid = landscapes[static_cast<std::size_t>(t)];
      const RmsePair single = rmse(sr.final_model, grid, 0);
      const RmsePair multi = rmse(mtbo.final_model, grid, t);
      tr.rmse_single_transformed = single.transformed;
      tr.rmse_single_raw = single.raw;
      tr.rmse_multi_transformed = multi.transformed;
      tr.rmse_multi_raw = multi.raw;
    }
    report.tasks.push_back(std::move(tr));
  }

  report.notes =
      "rmse divides by the actual grid point count (grid_side^2); "
      "evals_to_threshold counts per-task evaluations until raw loss reaches "
      "best + 5% of the initial-to-best gap";
  return report;
}

void write_report_json(const RunReport& report, const std::string& path) {
  nlohmann::json j;
  j["config"] = {{"iter1", report.cfg.iter1},
                 {"iter2", report.cfg.iter2},
                 {"folds", report.cfg.folds},
                 {"seed", report.cfg.seed},
                 {"inference", report.cfg.impute_mode ? "impute" : "exact"},
                 {"fit_restarts", report.cfg.fit_restarts}};
  j["num_tasks"] = report.num_tasks;
  j["notes"] = report.notes;
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : report.tasks) {
    nlohmann::json e;
    e["task"] = t.task + 1;
    e["name"] = t.name;
    e["stbo"] = {{"log10_c", t.stbo_point(0)},
                 {"log10_gamma", t.stbo_point(1)},
                 {"c", std::pow(10.0, t.stbo_point(0))},
                 {"gamma", std::pow(10.0, t.stbo_point(1))},
                 {"loss", t.stbo_loss},
                 {"evals_to_threshold", t.stbo_evals_to_threshold}};
    e["mtbo"] = {{"log10_c", t.mtbo_point(0)},
                 {"log10_gamma", t.mtbo_point(1)},
                 {"c", std::pow(10.0, t.mtbo_point(0))},
                 {"gamma", std::pow(10.0, t.mtbo_point(1))},
                 {"loss", t.mtbo_loss},
                 {"evals_to_threshold", t.mtbo_evals_to_threshold}};
    if (t.rmse_single_transformed >= 0.0) {
      e["rmse"] = {{"single_transformed", t.rmse_single_transformed},
                   {"multi_transformed", t.rmse_multi_transformed},
                   {"single_raw", t.rmse_single_raw},
                   {"multi_raw", t.rmse_multi_raw}};
    }
    tasks.push_back(std::move(e));
  }
  j["tasks"] = std::move(tasks);
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

void write_best_so_far_csv(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  out << "method,task,eval,best_so_far\n";
  char buf[128];
  for (const char* method : {"stbo", "mtbo"}) {
    const Trace& trace =
        std::string(method) == "stbo" ? report.stbo_trace : report.mtbo_trace;
    for (int t = 0; t < report.num_tasks; ++t) {
      const std::vector<double> curve = best_so_far(trace, t);
      for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%zu,%.17g\n", method, t + 1, i + 1,
                      curve[i]);
        out << buf;
      }
    }
  }
}

}  // namespace mtbo
