#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "relu_lqr/lqr.hpp"
#include "relu_lqr/network.hpp"
#include "relu_lqr/system.hpp"

namespace relu_lqr {

struct TrainConfig {
  SystemSpec sys;
  InitConfig init;
  double iota = 0.01;
  StepRule step_rule = StepRule::kConstant;
  std::size_t max_iters = 25000;
  std::optional<double> gap_tol;  // stop once the cost gap is at or below this
  std::size_t record_every = 1;
  std::vector<std::size_t> track_neurons;
  double delta = 0.05;  // margin for the safe-set flag, which uses delta / 2
  bool assert_invariants = false;
  std::optional<ThetaNetwork> theta0;  // overrides the Gaussian draw

  double eta(std::size_t m) const { return step_size(step_rule, iota, m); }
};

/// Throws InvalidInputError unless iota >= 0, max_iters >= 1,
/// record_every >= 1 and every tracked neuron index is in range.
void validate(const TrainConfig& cfg, std::size_t width);

/// Telemetry of iterate k. xi and crossings describe the step from k to
/// k + 1 and are zero on the final row.
struct HistoryRow {
  std::size_t k = 0;
  double K1 = 0.0;
  double K2 = 0.0;
  double J = 0.0;
  double gap = 0.0;
  double grad_norm = 0.0;
  double xi = 0.0;
  std::size_t crossings = 0;
  double g1_mass = 0.0;
  double g2_mass = 0.0;
  double cum_grad = 0.0;  // eta * sum_{t <= k} |g_t|
  bool safe = false;      // in the margin set at delta / 2
};

struct NeuronSample {
  std::size_t k = 0;
  std::size_t j = 0;
  double w = 0.0;
  double v = 0.0;
};

/// Per-step invariant bookkeeping accumulated over the whole run.
struct StepInvariants {
  double max_decomposition_residual = 0.0;  // relative to max(1, |K|)
  std::size_t crossing_steps = 0;
  std::size_t crossing_bound_violations = 0;
  double max_crossing_ratio = 0.0;  // max |e_k| / (2 sqrt(2) eta |g_k| Xi_k)
  std::size_t small_step_violations = 0;  // crossing steps with eta |g_k| > 1
  std::size_t gain_mass_violations = 0;   // steps with |K_i| > G_i / 2
};

struct TrainHistory {
  std::vector<HistoryRow> rows;
  std::vector<NeuronSample> neurons;
  StepInvariants invariants;
  std::vector<double> radial_growth;  // max_s r_{j,s} / r_{j,0}
  std::vector<CrossingEvent> crossing_events;
  ThetaNetwork theta_initial;
  ThetaNetwork theta_final;
  double eta = 0.0;
  RiccatiSolution riccati;
  double J_star = 0.0;
  std::size_t iterations = 0;  // gradient steps taken
  std::string stop_reason;     // "gap_tol" or "max_iters"
};

/// Runs theta_{k+1} = theta_k - eta grad_theta. The initial controller must
/// lie in the margin set at delta / 2 (InvalidInputError otherwise). Throws
/// UnstableIterateError as soon as an iterate leaves the spectral-stability
/// region; with assert_invariants, throws Error when the per-step
/// decomposition residual exceeds 1e-12 or the crossing bound fails on a
/// step with eta |g| <= 1.
TrainHistory train(const TrainConfig& cfg);

struct RateFit {
  double rho_hat = 0.0;
  double log_intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log gap against k over rows with k_lo <= k <= k_hi.
/// Throws DegenerateWindowError with fewer than three rows, any gap <= 0, or
/// a constant k.
RateFit rate_fit(const std::vector<HistoryRow>& rows, std::size_t k_lo, std::size_t k_hi);

struct GainErrorRow {
  std::size_t k = 0;
  double error = 0.0;          // |mu_k - mu*|
  double gap_envelope = 0.0;   // sqrt(gap_k / curvature)
  double rate_envelope = 0.0;  // sqrt(Delta_0 rho^k / curvature)
};

/// Distance to the optimal gains with the two envelopes. `rho` <= 0 skips
/// the rate envelope (reported as NaN).
std::vector<GainErrorRow> gain_error(const SystemSpec& sys, const std::vector<HistoryRow>& rows,
                                     const RiccatiSolution& riccati, double rho = 0.0);

}  // namespace relu_lqr
