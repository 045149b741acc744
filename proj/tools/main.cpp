#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mtbo/bo.hpp"
#include "mtbo/harness.hpp"
#include "mtbo/mtgp.hpp"
#include "mtbo/rng.hpp"
#include "mtbo/radiomics.hpp"
#include "mtbo/svm.hpp"
#include "mtbo/volume_io.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<mtbo::PhantomCase> load_phantom_dir(const std::string& dir) {
  std::ifstream labels(dir + "/labels.csv");
  if (!labels) throw std::runtime_error("missing " + dir + "/labels.csv");
  std::string line;
  std::getline(labels, line);  // header
  std::vector<mtbo::PhantomCase> cases;
  while (std::getline(labels, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    mtbo::PhantomCase pc;
    pc.case_id = line.substr(0, comma);
    pc.label = std::stoi(line.substr(comma + 1));
    pc.vol = mtbo::read_volume(dir + "/" + pc.case_id + "_vol");
    pc.mask = mtbo::read_mask(dir + "/" + pc.case_id + "_mask");
    cases.push_back(std::move(pc));
  }
  return cases;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-task Bayesian optimization toolkit for SVM hyperparameter tuning "
               "across image-discretization strategies"};
  app.require_subcommand(1);

  // ---- discretize ----
  std::string vol_path, mask_path, out_path;
  int strategy_index = 0;
  auto* cmd_disc = app.add_subcommand("discretize", "discretize one ROI volume");
  cmd_disc->add_option("--volume", vol_path, "volume path stem (.json/.raw)")->required();
  cmd_disc->add_option("--mask", mask_path, "mask path stem")->required();
  cmd_disc->add_option("--strategy-index", strategy_index, "0..8")->required();
  cmd_disc->add_option("--out", out_path, "output path stem")->required();

  // ---- extract ----
  bool all_strategies = false;
  std::string extract_case_id = "case";
  auto* cmd_ext = app.add_subcommand("extract", "extract radiomic features to CSV");
  cmd_ext->add_option("--volume", vol_path, "volume path stem")->required();
  cmd_ext->add_option("--mask", mask_path, "mask path stem")->required();
  cmd_ext->add_flag("--all-strategies", all_strategies, "all 9 strategies");
  cmd_ext->add_option("--strategy-index", strategy_index, "single strategy 0..8");
  cmd_ext->add_option("--case-id", extract_case_id, "case identifier for the CSV");
  cmd_ext->add_option("--out", out_path, "output CSV")->required();

  // ---- cv-loss ----
  std::string data_path;
  double opt_c = 1.0, opt_gamma = 1.0;
  int folds = 10;
  std::uint64_t seed = 7;
  auto* cmd_cv = app.add_subcommand("cv-loss", "k-fold CV misclassification loss");
  cmd_cv->add_option("--data", data_path, "dataset CSV")->required();
  cmd_cv->add_option("--c", opt_c, "penalty factor C");
  cmd_cv->add_option("--gamma", opt_gamma, "kernel size gamma");
  cmd_cv->add_option("--folds", folds, "fold count");
  cmd_cv->add_option("--seed", seed, "fold-assignment seed");

  // ---- phantom-gen ----
  std::string out_dir;
  int n_cases = 60, grid_dim = 24;
  double class_effect = 8.0, noise_sd = 5.0;
  auto* cmd_ph = app.add_subcommand("phantom-gen", "generate synthetic nodule volumes");
  cmd_ph->add_option("--cases", n_cases, "number of cases");
  cmd_ph->add_option("--grid", grid_dim, "cubic grid side in voxels");
  cmd_ph->add_option("--effect", class_effect, "class separation effect");
  cmd_ph->add_option("--noise-sd", noise_sd, "texture noise sd");
  cmd_ph->add_option("--seed", seed, "generator seed");
  cmd_ph->add_option("--out", out_dir, "output directory")->required();

  // ---- build-datasets ----
  std::string phantom_dir;
  auto* cmd_bd = app.add_subcommand("build-datasets",
                                    "extract features for all 9 strategies");
  cmd_bd->add_option("--phantoms", phantom_dir, "phantom-gen output directory")->required();
  cmd_bd->add_option("--out", out_dir, "output directory for d1.csv..d9.csv")->required();

  // ---- landscape ----
  int grid_side = 61;
  auto* cmd_ls = app.add_subcommand("landscape", "CV loss over a hyperparameter grid");
  cmd_ls->add_option("--data", data_path, "dataset CSV")->required();
  cmd_ls->add_option("--grid-side", grid_side, "points per axis");
  cmd_ls->add_option("--folds", folds, "fold count");
  cmd_ls->add_option("--seed", seed, "fold seed");
  cmd_ls->add_option("--out", out_path, "output CSV")->required();

  // ---- tune ----
  std::string mode = "mtbo", inference = "exact";
  std::vector<std::string> dataset_paths;
  int iter1 = 10, iter2 = 190;
  bool det_timing = false;
  auto* cmd_tune = app.add_subcommand("tune", "run STBO or MTBO over M datasets");
  cmd_tune->add_option("--mode", mode, "stbo|mtbo")->check(CLI::IsMember({"stbo", "mtbo"}));
  cmd_tune->add_option("--datasets", dataset_paths, "dataset CSVs, task order")->required();
  cmd_tune->add_option("--iter1", iter1, "warm-start iterations");
  cmd_tune->add_option("--iter2", iter2, "total iteration budget");
  cmd_tune->add_option("--folds", folds, "CV folds");
  cmd_tune->add_option("--seed", seed, "run seed");
  cmd_tune->add_option("--inference", inference, "exact|impute")
      ->check(CLI::IsMember({"exact", "impute"}));
  cmd_tune->add_flag("--deterministic-timestamps", det_timing,
                     "write wall_time_ms as 0 for byte-reproducible traces");
  cmd_tune->add_option("--out", out_path, "trace CSV")->required();

  // ---- report ----
  int report_grid_side = 0;
  auto* cmd_rep = app.add_subcommand("report", "STBO vs MTBO comparison report");
  cmd_rep->add_option("--datasets", dataset_paths, "dataset CSVs, task order")->required();
  cmd_rep->add_option("--iter1", iter1, "warm-start iterations");
  cmd_rep->add_option("--iter2", iter2, "total iteration budget");
  cmd_rep->add_option("--folds", folds, "CV folds");
  cmd_rep->add_option("--seed", seed, "run seed");
  cmd_rep->add_option("--inference", inference, "exact|impute")
      ->check(CLI::IsMember({"exact", "impute"}));
  cmd_rep->add_option("--rmse-grid-side", report_grid_side,
                      "landscape side for the RMSE section (0 skips it)");
  cmd_rep->add_flag("--deterministic-timestamps", det_timing,
                    "write wall_time_ms as 0 in trace CSVs");
  cmd_rep->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_disc) {
      const auto vol = mtbo::read_volume(vol_path);
      const auto mask = mtbo::read_mask(mask_path);
      const auto strategies = mtbo::strategy_grid();
      const auto roi =
          mtbo::discretize(vol, mask, strategies.at(static_cast<std::size_t>(strategy_index)));
      mtbo::write_levels(roi, out_path);
    } else if (*cmd_ext) {
      const auto vol = mtbo::read_volume(vol_path);
      const auto mask = mtbo::read_mask(mask_path);
      const auto strategies = mtbo::strategy_grid();
      std::ofstream out(out_path);
      out << "case_id,strategy_index";
      for (const auto& n : mtbo::feature_names()) out << ',' << n;
      out << '\n';
      const int lo = all_strategies ? 0 : strategy_index;
      const int hi = all_strategies ? 8 : strategy_index;
      char buf[64];
      for (int s = lo; s <= hi; ++s) {
        const auto fx =
            mtbo::extract_all(vol, mask, strategies[static_cast<std::size_t>(s)]);
        out << extract_case_id << ',' << s;
        for (double v : fx.vec.values) {
          std::snprintf(buf, sizeof(buf), ",%.17g", v);
          out << buf;
        }
        out << '\n';
        for (const auto& u : fx.undefined)
          std::cerr << "undefined feature (strategy " << s << "): " << u << "\n";
      }
    } else if (*cmd_cv) {
      const auto data = mtbo::read_dataset_csv(data_path);
      const auto res = mtbo::cv_loss(data, {opt_c, opt_gamma}, {folds, seed});
      std::printf("loss %.6f%s\n", res.loss, res.nonconvergence ? " (NonConvergence)" : "");
    } else if (*cmd_ph) {
      fs::create_directories(out_dir);
      mtbo::PhantomSpec spec;
      spec.n_cases = n_cases;
      spec.grid = {grid_dim, grid_dim, grid_dim};
      spec.class_effect = class_effect;
      spec.noise_sd = noise_sd;
      spec.seed = seed;
      const auto cases = mtbo::gen_phantom(spec);
      std::ofstream labels(out_dir + "/labels.csv");
      labels << "case_id,label\n";
      for (const auto& pc : cases) {
        mtbo::write_volume(pc.vol, out_dir + "/" + pc.case_id + "_vol");
        mtbo::write_mask(pc.mask, out_dir + "/" + pc.case_id + "_mask");
        labels << pc.case_id << ',' << pc.label << '\n';
      }
      std::printf("wrote %zu cases to %s\n", cases.size(), out_dir.c_str());
    } else if (*cmd_bd) {
      fs::create_directories(out_dir);
      const auto cases = load_phantom_dir(phantom_dir);
      const auto result = mtbo::build_datasets(cases, mtbo::strategy_grid());
      for (std::size_t s = 0; s < result.datasets.size(); ++s)
        mtbo::write_dataset_csv(result.datasets[s],
                                out_dir + "/d" + std::to_string(s + 1) + ".csv");
      for (const auto& r : result.rejected_cases)
        std::cerr << "rejected case (undefined features): " << r << "\n";
      std::printf("wrote %zu datasets to %s\n", result.datasets.size(), out_dir.c_str());
    } else if (*cmd_ls) {
      const auto data = mtbo::read_dataset_csv(data_path);
      const auto grid = mtbo::eval_landscape(data, {folds, seed}, grid_side);
      mtbo::write_landscape_csv(grid, out_path);
    } else if (*cmd_tune) {
      std::vector<mtbo::Dataset> datasets;
      for (const auto& p : dataset_paths) datasets.push_back(mtbo::read_dataset_csv(p));
      mtbo::CVConfig cv{folds, seed};
      std::vector<mtbo::Objective> objectives;
      for (const auto& d : datasets)
        objectives.push_back([&d, cv](const mtbo::SearchPoint& x) {
          const auto res =
              mtbo::cv_loss(d, {std::pow(10.0, x(0)), std::pow(10.0, x(1))}, cv);
          mtbo::EvalResult out{res.loss, {}};
          if (res.nonconvergence) out.flags.push_back("NonConvergence");
          return out;
        });

      mtbo::Trace trace;
      if (mode == "stbo") {
        trace.num_tasks = static_cast<int>(objectives.size());
        const int per_task = iter1 + (iter2 - iter1) / static_cast<int>(objectives.size());
        for (std::size_t t = 0; t < objectives.size(); ++t) {
          auto run = mtbo::stbo_run(objectives[t], per_task,
                                    mtbo::mix_seed(seed, 0x57B0, t), 5, det_timing);
          for (auto rec : run.trace.records) {
            rec.task = static_cast<int>(t);
            trace.records.push_back(std::move(rec));
          }
        }
      } else {
        mtbo::MTBOConfig cfg;
        cfg.iter1 = iter1;
        cfg.iter2 = iter2;
        cfg.folds = folds;
        cfg.seed = seed;
        cfg.impute_mode = inference == "impute";
        cfg.deterministic_timing = det_timing;
        trace = mtbo::mtbo_run(objectives, cfg).trace;
      }
      mtbo::write_trace_csv(trace, out_path);
    } else if (*cmd_rep) {
      fs::create_directories(out_dir);
      std::vector<mtbo::Dataset> datasets;
      for (const auto& p : dataset_paths) datasets.push_back(mtbo::read_dataset_csv(p));
      mtbo::CompareOptions opts;
      opts.cfg.iter1 = iter1;
      opts.cfg.iter2 = iter2;
      opts.cfg.folds = folds;
      opts.cfg.seed = seed;
      opts.cfg.impute_mode = inference == "impute";
      opts.cfg.deterministic_timing = det_timing;
      opts.landscape_grid_side = report_grid_side;
      const auto& names = mtbo::strategy_grid();
      if (datasets.size() == names.size())
        for (const auto& s : names) opts.task_names.push_back(s.name());
      const auto report = mtbo::compare_runs(datasets, opts);
      mtbo::write_report_json(report, out_dir + "/report.json");
      mtbo::write_best_so_far_csv(report, out_dir + "/best_so_far.csv");
      mtbo::write_trace_csv(report.stbo_trace, out_dir + "/stbo_trace.csv");
      mtbo::write_trace_csv(report.mtbo_trace, out_dir + "/mtbo_trace.csv");
      std::printf("report written to %s\n", out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
