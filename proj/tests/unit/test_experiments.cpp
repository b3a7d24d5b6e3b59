#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "relu_lqr/csv.hpp"
#include "relu_lqr/experiments.hpp"

namespace relu_lqr::experiments {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "relu_lqr_unit" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(RiccatiReport, AgreesWithFixedPoint) {
  const RiccatiReport rep = riccati_report(base_case());
  EXPECT_LE(rep.residuals.gain, 1e-12);
  EXPECT_LE(rep.residuals.value, 1e-12);
  EXPECT_NEAR(rep.fixed_point_p, rep.solution.p_star, 1e-12);
  EXPECT_LE(rep.grad_norm_at_optimum, 1e-9);
  EXPECT_NE(to_text(rep).find("K_star"), std::string::npos);
}

TEST(GradCheck, PassesAndCatchesCorruption) {
  GradCheckConfig cfg;
  cfg.sys = base_case();
  cfg.points_per_region = 10;
  cfg.networks = 5;
  const GradCheckReport ok = grad_check(cfg);
  EXPECT_EQ(ok.failures(), 0u);
  for (const RegionCheck& r : ok.regions) EXPECT_EQ(r.points, 10u);
  EXPECT_LT(ok.boundary_jump[0], 1e-6);
  EXPECT_LT(ok.boundary_jump[1], 1e-6);
  cfg.corrupt = 1e-3;
  EXPECT_GT(grad_check(cfg).failures(), 0u);
}

TEST(GradCheck, RegionSamplerRespectsSigns) {
  const SystemSpec sys = base_case();
  for (Region region : {Region::PP, Region::NN, Region::PN, Region::NP}) {
    for (std::size_t i = 0; i < 50; ++i) {
      const PiecewiseGains mu = sample_in_region(sys, region, 0.025, 1e-3, 4, i);
      const ClosedLoop cl = closed_loop(sys, mu);
      EXPECT_EQ(region_of(cl.a1, cl.a2), region);
      EXPECT_GE(std::abs(cl.a1), 1e-3);
      EXPECT_GE(std::abs(cl.a2), 1e-3);
      EXPECT_TRUE(in_margin_set(sys, mu, 0.025));
    }
  }
}

TEST(InitStats, SmallRunIsDeterministic) {
  InitStatsConfig cfg;
  cfg.sys = base_case();
  cfg.widths = {100, 1000};
  cfg.seeds = 40;
  const InitStatsReport one = init_stats(cfg);
  cfg.workers = 3;
  const InitStatsReport three = init_stats(cfg);
  ASSERT_EQ(one.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(one.rows[i].freq_all, three.rows[i].freq_all);
    EXPECT_EQ(one.rows[i].mean_M_w, three.rows[i].mean_M_w);
  }
  EXPECT_GT(one.thresholds.tau_w, 0.0);
  const fs::path path = scratch_dir("init") / "init_stats.csv";
  write_csv(one, path);
  EXPECT_EQ(read_csv(path, schemas::init_stats()).rows.size(), 2u);
}

TEST(Sweep, IndependentOfWorkerCountAndRecordsFailures) {
  SweepConfig cfg;
  cfg.base = base_case();
  cfg.init = {.m = 200, .beta = 10.0};
  cfg.a_values = {0.5, -0.3};
  cfg.b_values = {0.1, 0.45};
  cfg.max_iters = 300;
  const SweepReport one = sweep(cfg);
  cfg.workers = 4;
  const SweepReport four = sweep(cfg);
  ASSERT_EQ(one.runs.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(one.runs[i].K1, four.runs[i].K1);
    EXPECT_EQ(one.runs[i].K2, four.runs[i].K2);
    EXPECT_EQ(one.runs[i].status, four.runs[i].status);
  }
  cfg.iota = 1e4;
  const SweepReport blown = sweep(cfg);
  EXPECT_EQ(blown.runs.size(), 4u);
  EXPECT_GT(blown.failed, 0u);
  const fs::path path = scratch_dir("sweep") / "sweep.csv";
  write_csv(blown, path);
  EXPECT_EQ(read_csv(path, schemas::sweep()).rows.size(), 4u);
}

TEST(Sweep, DefaultGridHas324Systems) {
  EXPECT_EQ(default_a_grid().size() * default_b_grid().size(), 324u);
  for (double a : default_a_grid()) EXPECT_NE(a, 0.0);
  for (double b : default_b_grid()) EXPECT_NE(b, 0.0);
}

TEST(TrainOutputs, RoundTripThroughCsv) {
  TrainConfig cfg;
  cfg.sys = base_case();
  cfg.init = {.m = 50, .seed = 2};
  cfg.max_iters = 30;
  cfg.track_neurons = pick_neurons(50, 5, 1);
  const TrainHistory hist = train(cfg);
  const fs::path dir = scratch_dir("train");
  write_train_outputs(hist, cfg, dir);
  EXPECT_EQ(read_snapshot_csv(dir / "theta_final.csv"), hist.theta_final);
  const std::vector<HistoryRow> rows = read_history_csv(dir / "history.csv");
  ASSERT_EQ(rows.size(), hist.rows.size());
  EXPECT_EQ(rows.back().J, hist.rows.back().J);
  EXPECT_EQ(rows.back().safe, hist.rows.back().safe);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_EQ(read_csv(dir / "neurons.csv", schemas::neurons()).rows.size(), 5u * 31u);
}

TEST(TrainOutputs, PickNeuronsIsDistinct) {
  std::vector<std::size_t> idx = pick_neurons(100, 30, 9);
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(std::unique(idx.begin(), idx.end()), idx.end());
  EXPECT_LT(idx.back(), 100u);
  EXPECT_EQ(pick_neurons(10, 50, 0).size(), 10u);
}

TEST(EdgeCase, BothHiddenWeightsPositive) {
  const ThetaNetwork theta = edge_case_network(3);
  ASSERT_EQ(theta.width(), 2u);
  EXPECT_GT(theta.w[0], 0.0);
  EXPECT_GT(theta.w[1], 0.0);
  EXPECT_EQ(effective_gains(theta).k2, 0.0);
}

TEST(Regime, ReportFillsEstimatedConstants) {
  RegimeReportConfig cfg;
  cfg.inputs.sys = base_case();
  cfg.grid_n = 17;
  cfg.betas = {10.0, 1e7};
  const RegimeReport rep = regime_report(cfg);
  ASSERT_TRUE(rep.inputs.L_mu && rep.inputs.alpha_mu);
  EXPECT_EQ(*rep.inputs.L_mu, rep.L_mu.value);
  EXPECT_EQ(rep.sweep.size(), 2u);
  const fs::path path = scratch_dir("regime") / "beta_sweep.csv";
  write_beta_sweep_csv(rep.sweep, path);
  EXPECT_EQ(read_csv(path, schemas::beta_sweep()).rows.size(), 2u);
}

TEST(ExportPlots, ManifestValidates) {
  ExportConfig cfg;
  cfg.base.sys = base_case();
  cfg.base.init = {.m = 100};
  cfg.base.max_iters = 50;
  cfg.widths = {10, 20};
  cfg.tracked_neurons = 5;
  cfg.edge_iters = 50;
  const fs::path dir = scratch_dir("export");
  const ExportManifest manifest = export_plots(cfg, dir);
  EXPECT_FALSE(manifest.files.empty());
  EXPECT_TRUE(validate_export(dir).empty());
  fs::remove(dir / manifest.files.front().file);
  EXPECT_FALSE(validate_export(dir).empty());
}

}  // namespace
}  // namespace relu_lqr::experiments
