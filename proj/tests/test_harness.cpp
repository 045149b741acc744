#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mtbo/harness.hpp"
#include "mtbo/rng.hpp"

using namespace mtbo;

namespace {

PhantomSpec tiny_spec() {
  PhantomSpec spec;
  spec.n_cases = 8;
  spec.grid = {12, 12, 12};
  spec.radius_min = 3.0;
  spec.radius_max = 4.5;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST_CASE("phantom generation is deterministic and balanced") {
  const auto a = gen_phantom(tiny_spec());
  const auto b = gen_phantom(tiny_spec());
  REQUIRE(a.size() == 8);
  int pos = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].vol.data == b[i].vol.data);
    CHECK(a[i].mask.data == b[i].mask.data);
    CHECK(a[i].label == b[i].label);
    CHECK(a[i].mask.num_set() >= 2);
    if (a[i].label > 0) ++pos;
  }
  CHECK(pos == 4);
  CHECK(a[0].case_id == "case_0000");
  CHECK(a[7].case_id == "case_0007");

  PhantomSpec other = tiny_spec();
  other.seed = 78;
  const auto c = gen_phantom(other);
  CHECK(a[0].vol.data != c[0].vol.data);
}

TEST_CASE("build_datasets produces one aligned dataset per strategy") {
  const auto cases = gen_phantom(tiny_spec());
  const auto strategies = strategy_grid();
  const BuildResult built = build_datasets(cases, strategies);

  REQUIRE(built.datasets.size() == 9);
  const Eigen::Index n = built.datasets[0].labels.size();
  CHECK(n + static_cast<Eigen::Index>(built.rejected_cases.size()) == 8);

  for (const auto& d : built.datasets) {
    CHECK(d.labels.size() == n);
    CHECK(d.features.cols() == kNumFeatures);
    CHECK(d.case_ids == built.datasets[0].case_ids);
    CHECK(d.features.allFinite());
  }

  // raw-intensity statistics (first 11 features) do not depend on the strategy
  for (std::size_t s = 1; s < built.datasets.size(); ++s)
    for (Eigen::Index r = 0; r < n; ++r)
      for (int f = 0; f < 11; ++f)
        CHECK(built.datasets[s].features(r, f) == built.datasets[0].features(r, f));

  // histogram entropy differs across bin counts (columns 11 is entropy)
  CHECK(built.datasets[0].features.col(11) != built.datasets[6].features.col(11));
}

TEST_CASE("dataset CSV round trip") {
  const auto cases = gen_phantom(tiny_spec());
  const BuildResult built = build_datasets(cases, {strategy_grid()[0]});
  const Dataset& d = built.datasets[0];

  const std::string path = "dataset_test_tmp.csv";
  write_dataset_csv(d, path);
  const Dataset back = read_dataset_csv(path);
  std::remove(path.c_str());

  REQUIRE(back.labels.size() == d.labels.size());
  CHECK(back.case_ids == d.case_ids);
  CHECK((back.labels - d.labels).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.features - d.features).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("landscape grid geometry") {
  const auto points = landscape_points(61);
  REQUIRE(points.size() == 61u * 61u);
  CHECK(points.front() == SearchPoint(-3.0, -3.0));   // (C, gamma) = (1e-3, 1e-3)
  CHECK(points.back() == SearchPoint(3.0, 3.0));      // (C, gamma) = (1e3, 1e3)
  // j-major, k varies fastest
  CHECK(points[1](0) == -3.0);
  CHECK(points[1](1) == doctest::Approx(-2.9).epsilon(1e-12));
  for (const auto& p : points) {
    CHECK(p(0) >= kBoxLo);
    CHECK(p(0) <= kBoxHi);
  }
}

TEST_CASE("rmse against a constant model") {
  // empty-train model: posterior mean is the prior mean everywhere
  MTGPHyperparams p;
  p.mu = Eigen::VectorXd::Constant(1, transform_loss(0.3));
  p.task_chol = Eigen::MatrixXd::Identity(1, 1);
  p.log_noise = Eigen::VectorXd::Constant(1, -2.0);
  ObservationSet empty;
  empty.num_tasks = 1;
  const MTGPModel model(empty, p);

  LandscapeGrid grid;
  grid.grid_side = 5;
  grid.points = landscape_points(5);
  SUBCASE("model equal to the truth gives zero error") {
    grid.losses.assign(grid.points.size(), 0.3);
    const RmsePair r = rmse(model, grid, 0);
    CHECK(r.transformed == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.raw == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("constant offset in transformed space is returned exactly") {
    const double shifted = inverse_transform(transform_loss(0.3) + 0.01);
    grid.losses.assign(grid.points.size(), shifted);
    const RmsePair r = rmse(model, grid, 0);
    CHECK(r.transformed == doctest::Approx(0.01).epsilon(1e-9));
  }
}

TEST_CASE("landscape evaluation is deterministic") {
  const auto cases = gen_phantom(tiny_spec());
  const BuildResult built = build_datasets(cases, {strategy_grid()[0]});
  const CVConfig cv{4, 9};
  const LandscapeGrid a = eval_landscape(built.datasets[0], cv, 3);
  const LandscapeGrid b = eval_landscape(built.datasets[0], cv, 3);
  REQUIRE(a.losses.size() == 9);
  CHECK(a.losses == b.losses);
  for (double l : a.losses) {
    CHECK(l >= 0.0);
    CHECK(l <= 1.0);
  }
}

TEST_CASE("synthetic task family") {
  SUBCASE("correlation 1 collapses to identical tasks") {
    const auto tasks = synthetic_tasks(3, 1.0, 4);
    REQUIRE(tasks.size() == 3);
    for (const auto& t : tasks) {
      CHECK(t.optimum == tasks[0].optimum);
      CHECK(t.optimal_loss == tasks[0].optimal_loss);
    }
    const SearchPoint probe(0.7, -1.1);
    const double ref = tasks[0].objective(probe).raw_loss;
    for (const auto& t : tasks) CHECK(t.objective(probe).raw_loss == ref);
  }

  SUBCASE("stored optimum beats every probe and losses stay in (0, 1)") {
    const auto tasks = synthetic_tasks(4, 0.9, 4);
    auto eng = make_engine(8);
    std::uniform_real_distribution<double> box(kBoxLo, kBoxHi);
    for (const auto& t : tasks) {
      CHECK(t.optimal_loss == t.objective(t.optimum).raw_loss);
      CHECK(t.max_loss > t.optimal_loss);
      for (int probe = 0; probe < 200; ++probe) {
        const double v = t.objective(SearchPoint(box(eng), box(eng))).raw_loss;
        CHECK(v >= t.optimal_loss - 1e-9);
        CHECK(v <= t.max_loss + 1e-9);
        CHECK(v > 0.0);
        CHECK(v < 1.0);
      }
    }
  }

  SUBCASE("correlation 0.9 keeps tasks strongly related on the grid") {
    const auto tasks = synthetic_tasks(4, 0.9, 4);
    const auto points = landscape_points(61);
    std::vector<std::vector<double>> vals(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t)
      for (const auto& x : points)
        vals[t].push_back(tasks[t].objective(x).raw_loss);

    auto pearson = [](const std::vector<double>& a, const std::vector<double>& b) {
      const double n = static_cast<double>(a.size());
      double ma = 0.0, mb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
      }
      ma /= n;
      mb /= n;
      double cab = 0.0, ca = 0.0, cb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        cab += (a[i] - ma) * (b[i] - mb);
        ca += (a[i] - ma) * (a[i] - ma);
        cb += (b[i] - mb) * (b[i] - mb);
      }
      return cab / std::sqrt(ca * cb);
    };
    for (std::size_t i = 0; i < tasks.size(); ++i)
      for (std::size_t j = i + 1; j < tasks.size(); ++j)
        CHECK(pearson(vals[i], vals[j]) >= 0.8);
  }
}

TEST_CASE("compare_runs report is a projection of its traces") {
  const auto cases = gen_phantom(tiny_spec());
  const auto strategies = strategy_grid();
  const BuildResult built =
      build_datasets(cases, {strategies[0], strategies[1]});

  CompareOptions opts;
  opts.cfg.iter1 = 2;
  opts.cfg.iter2 = 6;
  opts.cfg.folds = 4;
  opts.cfg.seed = 13;
  opts.cfg.fit_restarts = 2;
  opts.cfg.deterministic_timing = true;
  opts.task_names = {"a", "b"};

  const RunReport report = compare_runs(built.datasets, opts);
  REQUIRE(report.tasks.size() == 2);
  CHECK(report.num_tasks == 2);

  const int per_task_budget = opts.cfg.iter1 + (opts.cfg.iter2 - opts.cfg.iter1) / 2;
  for (int t = 0; t < 2; ++t) {
    const auto& tr = report.tasks[static_cast<std::size_t>(t)];

    int stbo_count = 0, mtbo_count = 0;
    bool stbo_best_seen = false, mtbo_best_seen = false;
    for (const auto& rec : report.stbo_trace.records)
      if (rec.task == t) {
        ++stbo_count;
        if (rec.point == tr.stbo_point && rec.raw_loss == tr.stbo_loss)
          stbo_best_seen = true;
      }
    for (const auto& rec : report.mtbo_trace.records)
      if (rec.task == t) {
        ++mtbo_count;
        if (rec.point == tr.mtbo_point && rec.raw_loss == tr.mtbo_loss)
          mtbo_best_seen = true;
      }
    CHECK(stbo_count == per_task_budget);
    CHECK(mtbo_count == per_task_budget);
    CHECK(stbo_best_seen);
    CHECK(mtbo_best_seen);
  }

  const std::string jpath = "report_test_tmp.json";
  const std::string cpath = "curves_test_tmp.csv";
  write_report_json(report, jpath);
  write_best_so_far_csv(report, cpath);
  std::ifstream jin(jpath);
  std::ifstream cin_(cpath);
  CHECK(jin.good());
  std::string header;
  std::getline(cin_, header);
  CHECK(header == "method,task,eval,best_so_far");
  std::size_t lines = 0;
  std::string line;
  while (std::getline(cin_, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 2u * 2u * static_cast<std::size_t>(per_task_budget));
  std::remove(jpath.c_str());
  std::remove(cpath.c_str());
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<std::atomic<int>> hits(100);
  for (auto& h : hits) h = 0;
  parallel_for(100, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h == 1);
  CHECK(worker_count() >= 1);
}
