#include <benchmark/benchmark.h>

#include <random>

#include "mtbo/bo.hpp"
#include "mtbo/harness.hpp"
#include "mtbo/mtgp.hpp"
#include "mtbo/radiomics.hpp"
#include "mtbo/rng.hpp"
#include "mtbo/svm.hpp"

using namespace mtbo;

namespace {

ObservationSet make_obs(int num_tasks, int n) {
  auto eng = make_engine(mix_seed(0xBE7C, static_cast<std::uint64_t>(n)));
  std::uniform_real_distribution<double> box(kBoxLo, kBoxHi);
  std::uniform_real_distribution<double> loss(-2.0, 2.0);
  ObservationSet out;
  out.num_tasks = num_tasks;
  for (int i = 0; i < n; ++i)
    out.obs.push_back({SearchPoint(box(eng), box(eng)), i % num_tasks, loss(eng)});
  return out;
}

MTGPHyperparams make_params(int num_tasks) {
  auto eng = make_engine(0xBEA2);
  std::normal_distribution<double> nd(0.0, 0.3);
  MTGPHyperparams p;
  p.mu = Eigen::VectorXd::Zero(num_tasks);
  p.task_chol = Eigen::MatrixXd::Identity(num_tasks, num_tasks);
  for (int i = 0; i < num_tasks; ++i)
    for (int j = 0; j < i; ++j) p.task_chol(i, j) = nd(eng);
  p.log_length_scale = 0.2;
  p.log_noise = Eigen::VectorXd::Constant(num_tasks, -2.0);
  return p;
}

PhantomCase make_case(int side) {
  PhantomSpec spec;
  spec.n_cases = 1;
  spec.grid = {side, side, side};
  spec.radius_min = side / 4.0;
  spec.radius_max = side / 3.0;
  spec.seed = 5;
  return gen_phantom(spec)[0];
}

Dataset make_dataset() {
  PhantomSpec spec;
  spec.n_cases = 24;
  spec.grid = {16, 16, 16};
  spec.radius_min = 4.0;
  spec.radius_max = 6.0;
  spec.seed = 9;
  return build_datasets(gen_phantom(spec), {strategy_grid()[0]}).datasets[0];
}

void bm_lml_with_grad(benchmark::State& state) {
  const int num_tasks = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const ObservationSet train = make_obs(num_tasks, n);
  const MTGPHyperparams p = make_params(num_tasks);
  for (auto _ : state) benchmark::DoNotOptimize(lml_with_grad(train, p).value);
}
BENCHMARK(bm_lml_with_grad)->Args({1, 30})->Args({4, 60})->Args({9, 120})->Args({9, 270});

void bm_fit(benchmark::State& state) {
  const int num_tasks = static_cast<int>(state.range(0));
  const int n = static_cast<int>(state.range(1));
  const ObservationSet train = make_obs(num_tasks, n);
  for (auto _ : state) benchmark::DoNotOptimize(fit(train, 1, 3).log_marginal());
}
BENCHMARK(bm_fit)->Args({1, 30})->Args({4, 60})->Args({9, 120})->Unit(benchmark::kMillisecond);

void bm_predict(benchmark::State& state) {
  const MTGPModel model(make_obs(9, 270), make_params(9));
  const SearchPoint x(0.4, -1.2);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x, 3).mean);
}
BENCHMARK(bm_predict);

void bm_maximize_ei(benchmark::State& state) {
  const MTGPModel model(make_obs(4, 80), make_params(4));
  for (auto _ : state)
    benchmark::DoNotOptimize(maximize_ei(model, 1, -0.5, 17));
}
BENCHMARK(bm_maximize_ei)->Unit(benchmark::kMillisecond);

void bm_extract_all(benchmark::State& state) {
  const PhantomCase c = make_case(static_cast<int>(state.range(0)));
  const DiscretizationStrategy strat{32, RangeRule::mean_sd(3.0)};
  for (auto _ : state)
    benchmark::DoNotOptimize(extract_all(c.vol, c.mask, strat).vec.values[0]);
}
BENCHMARK(bm_extract_all)->Arg(16)->Arg(24)->Arg(32)->Unit(benchmark::kMillisecond);

void bm_cv_loss(benchmark::State& state) {
  const Dataset data = make_dataset();
  const SVMHyperparams hp{10.0, 0.1};
  const CVConfig cv{static_cast<int>(state.range(0)), 1};
  for (auto _ : state) benchmark::DoNotOptimize(cv_loss(data, hp, cv).loss);
}
BENCHMARK(bm_cv_loss)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
