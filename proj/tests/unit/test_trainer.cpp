#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "relu_lqr/errors.hpp"
#include "relu_lqr/experiments.hpp"
#include "relu_lqr/trainer.hpp"

namespace relu_lqr {
namespace {

TrainConfig base_config(std::size_t iters, std::uint64_t seed = 0) {
  TrainConfig cfg;
  cfg.sys = base_case();
  cfg.init = {.m = 1000, .beta = 10.0, .seed = seed};
  cfg.max_iters = iters;
  return cfg;
}

std::vector<HistoryRow> synthetic_rows(double rho, std::size_t n) {
  std::vector<HistoryRow> rows;
  for (std::size_t k = 0; k < n; ++k) {
    HistoryRow row;
    row.k = k;
    row.gap = 3.0 * std::pow(rho, static_cast<double>(k));
    rows.push_back(row);
  }
  return rows;
}

TEST(Train, ZeroStepScaleKeepsHistoryFlat) {
  TrainConfig cfg = base_config(20);
  cfg.iota = 0.0;
  const TrainHistory hist = train(cfg);
  ASSERT_EQ(hist.rows.size(), 21u);
  EXPECT_EQ(hist.stop_reason, "max_iters");
  for (const HistoryRow& row : hist.rows) {
    EXPECT_EQ(row.K1, hist.rows.front().K1);
    EXPECT_EQ(row.K2, hist.rows.front().K2);
    EXPECT_EQ(row.J, hist.rows.front().J);
    EXPECT_EQ(row.crossings, 0u);
  }
  EXPECT_EQ(hist.theta_final, hist.theta_initial);
}

TEST(Train, TelemetryIsExactCostOfRecordedGains) {
  const TrainHistory hist = train(base_config(50, 3));
  for (const HistoryRow& row : hist.rows) {
    EXPECT_EQ(row.J, cost(base_case(), PiecewiseGains{row.K1, row.K2}));
    EXPECT_EQ(row.gap, row.J - hist.J_star);
  }
  const PiecewiseGains last = effective_gains(hist.theta_final);
  EXPECT_EQ(hist.rows.back().K1, last.k1);
  EXPECT_EQ(hist.rows.back().K2, last.k2);
}

TEST(Train, GapIsNonincreasingAndInvariantsHold) {
  TrainConfig cfg = base_config(400, 1);
  cfg.assert_invariants = true;
  const TrainHistory hist = train(cfg);
  for (std::size_t i = 1; i < hist.rows.size(); ++i) {
    EXPECT_LE(hist.rows[i].gap, hist.rows[i - 1].gap + 1e-12) << i;
    EXPECT_TRUE(hist.rows[i].safe);
  }
  EXPECT_LE(hist.invariants.max_decomposition_residual, 1e-12);
  EXPECT_EQ(hist.invariants.crossing_bound_violations, 0u);
  EXPECT_LT(hist.rows.back().gap, hist.rows.front().gap);
}

TEST(Train, RecordEveryKeepsFinalRow) {
  TrainConfig cfg = base_config(25);
  cfg.record_every = 10;
  cfg.track_neurons = {0, 5};
  const TrainHistory hist = train(cfg);
  std::vector<std::size_t> ks;
  for (const HistoryRow& row : hist.rows) ks.push_back(row.k);
  EXPECT_EQ(ks, (std::vector<std::size_t>{0, 10, 20, 25}));
  EXPECT_EQ(hist.neurons.size(), 8u);
  EXPECT_EQ(hist.iterations, 25u);
}

TEST(Train, GapToleranceStopsEarly) {
  TrainConfig cfg = base_config(25000);
  cfg.gap_tol = 1e-2;
  const TrainHistory hist = train(cfg);
  EXPECT_EQ(hist.stop_reason, "gap_tol");
  EXPECT_LE(hist.rows.back().gap, 1e-2);
  EXPECT_GT(hist.rows[hist.rows.size() - 2].gap, 1e-2);
}

TEST(Train, WidthScaledRuleDividesByWidth) {
  TrainConfig cfg = base_config(2);
  cfg.step_rule = StepRule::kWidthScaled;
  EXPECT_DOUBLE_EQ(train(cfg).eta, 0.01 / 1000.0);
  cfg.step_rule = StepRule::kConstant;
  EXPECT_DOUBLE_EQ(train(cfg).eta, 0.01);
}

TEST(Train, TwoNeuronEdgeCaseNeverRecoversNegativeGain) {
  TrainConfig cfg = base_config(3000);
  cfg.theta0 = experiments::edge_case_network(7);
  const TrainHistory hist = train(cfg);
  ASSERT_TRUE(hist.crossing_events.empty());
  for (const HistoryRow& row : hist.rows) EXPECT_EQ(row.K2, 0.0);
  EXPECT_GT(hist.rows.back().J, hist.J_star);
  EXPECT_GT(hist.rows.back().gap, 1e-3);
}

TEST(Train, OversizedStepReportsLastStableIterate) {
  TrainConfig cfg = base_config(100, 2);
  cfg.iota = 50.0;
  try {
    train(cfg);
    FAIL() << "expected UnstableIterateError";
  } catch (const UnstableIterateError& e) {
    EXPECT_EQ(e.last_safe_k(), 0u);
  }
}

TEST(Train, RejectsUnsafeStartAndBadConfig) {
  TrainConfig cfg = base_config(10);
  cfg.theta0 = ThetaNetwork{{1.0}, {20.0}};
  EXPECT_THROW(train(cfg), InvalidInputError);
  cfg = base_config(10);
  cfg.iota = -1.0;
  EXPECT_THROW(train(cfg), InvalidInputError);
  cfg = base_config(10);
  cfg.record_every = 0;
  EXPECT_THROW(train(cfg), InvalidInputError);
  cfg = base_config(10);
  cfg.track_neurons = {1000};
  EXPECT_THROW(train(cfg), InvalidInputError);
}

TEST(RateFit, RecoversExactGeometricDecay) {
  const RateFit fit = rate_fit(synthetic_rows(0.9, 200), 10, 150);
  EXPECT_NEAR(fit.rho_hat, 0.9, 1e-10);
  EXPECT_NEAR(std::exp(fit.log_intercept), 3.0, 1e-9);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.points, 141u);
}

TEST(RateFit, DegenerateWindowsThrow) {
  const std::vector<HistoryRow> rows = synthetic_rows(0.5, 10);
  EXPECT_THROW(rate_fit(rows, 3, 4), DegenerateWindowError);
  std::vector<HistoryRow> with_zero = rows;
  with_zero[5].gap = 0.0;
  EXPECT_THROW(rate_fit(with_zero, 0, 9), DegenerateWindowError);
}

TEST(GainError, EnvelopesFollowDefinitions) {
  const SystemSpec sys = base_case();
  const RiccatiSolution opt = riccati_solve(sys);
  std::vector<HistoryRow> rows = synthetic_rows(0.5, 4);
  for (HistoryRow& row : rows) {
    row.K1 = opt.k_star + 3.0;
    row.K2 = opt.k_star - 4.0;
  }
  const double curvature = gap_curvature(sys, opt);
  const std::vector<GainErrorRow> err = gain_error(sys, rows, opt, 0.5);
  ASSERT_EQ(err.size(), 4u);
  EXPECT_NEAR(err[2].error, 5.0, 1e-14);
  EXPECT_NEAR(err[2].gap_envelope, std::sqrt(0.75 / curvature), 1e-14);
  EXPECT_NEAR(err[2].rate_envelope, std::sqrt(0.75 / curvature), 1e-14);
  EXPECT_TRUE(std::isnan(gain_error(sys, rows, opt)[1].rate_envelope));
  EXPECT_THROW(gain_error(sys, {}, opt), InvalidInputError);
}

}  // namespace
}  // namespace relu_lqr
