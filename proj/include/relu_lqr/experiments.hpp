#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "relu_lqr/lqr.hpp"
#include "relu_lqr/network.hpp"
#include "relu_lqr/regime.hpp"
#include "relu_lqr/system.hpp"
#include "relu_lqr/trainer.hpp"

/// Experiment recipes behind the command-line subcommands. Each returns a
/// plain report struct; file output is opt-in through an output directory.
namespace relu_lqr::experiments {

// ---------------------------------------------------------------- riccati

struct RiccatiReport {
  RiccatiSolution solution;
  double J_star = 0.0;
  RiccatiResiduals residuals;
  double fixed_point_p = 0.0;  // damped fixed-point oracle
  double grad_norm_at_optimum = 0.0;
};

RiccatiReport riccati_report(const SystemSpec& sys);
std::string to_text(const RiccatiReport& rep);

// ------------------------------------------------------------- grad-check

struct GradCheckConfig {
  SystemSpec sys;
  double delta_bar = 0.025;
  std::size_t points_per_region = 100;
  double mu_tol = 1e-5;
  std::size_t networks = 50;
  std::size_t network_width = 20;
  double theta_step = 1e-7;
  double theta_tol = 1e-4;
  double min_abs_w = 1e-3;
  std::uint64_t seed = 0;
  double corrupt = 0.0;  // test hook: analytic g1 is scaled by (1 + corrupt)
};

struct RegionCheck {
  Region region = Region::PP;
  std::size_t points = 0;
  std::size_t failures = 0;
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::array<RegionCheck, 4> regions;
  std::size_t theta_networks = 0;
  std::size_t theta_failures = 0;
  double theta_max_rel_err = 0.0;
  std::array<double, 2> boundary_jump{};  // gradient jump across a_i = 0 at a_i = +-1e-9
  std::size_t failures() const;
};

/// Draws a controller in the safe box whose closed-loop signs match
/// `region`, with |a_i| >= min_abs_a.
PiecewiseGains sample_in_region(const SystemSpec& sys, Region region, double delta_bar,
                                double min_abs_a, std::uint64_t seed, std::size_t index);

GradCheckReport grad_check(const GradCheckConfig& cfg);
std::string to_text(const GradCheckReport& rep);

// ------------------------------------------------------------- init-stats

struct InitStatsConfig {
  SystemSpec sys;
  double beta = 10.0;
  std::vector<std::size_t> widths{100, 1000, 10000};
  std::size_t seeds = 1000;
  std::uint64_t seed = 0;
  double delta = 0.05;
  double s = 0.25;
  double S = 4.0;
  double V = 1.0;
  double eps = 0.2;
  double B = 0.5;  // growth budget defining tau_w and the bad-mass thresholds
  std::size_t workers = 1;
};

struct InitThresholds {
  double R_star_sq = 0.0;
  double c = 0.0;
  double tau_w = 0.0;
  double M_w = 0.0;
  double M_v = 0.0;
};

InitThresholds init_thresholds(const InitStatsConfig& cfg);

struct InitEvents {
  bool stable = false;    // mu_0 in the margin set at delta
  bool norm = false;      // total mass <= R*^2
  bool backbone = false;  // |C1|, |C2| >= c m
  bool bad_mass = false;  // M_w(theta) <= M_w and M_v(theta) <= M_v
  double c1_frac = 0.0;
  double c2_frac = 0.0;
  double m_w = 0.0;
  double m_v = 0.0;
};

InitEvents init_events(const SystemSpec& sys, const ThetaNetwork& theta0, double beta,
                       double delta, const InitStatsConfig& cfg, const InitThresholds& th);

struct InitStatsRow {
  std::size_t m = 0;
  std::size_t seeds = 0;
  double freq_stable = 0.0;
  double freq_norm = 0.0;
  double freq_backbone = 0.0;
  double freq_bad_mass = 0.0;
  double freq_all = 0.0;
  double mean_c1_frac = 0.0;
  double mean_c2_frac = 0.0;
  double mean_M_w = 0.0;
  double mean_M_v = 0.0;
};

struct InitStatsReport {
  InitThresholds thresholds;
  std::vector<InitStatsRow> rows;
};

/// Seed for draw i at width m: derive_seed(derive_seed(seed, m), i).
InitStatsReport init_stats(const InitStatsConfig& cfg);
std::string to_text(const InitStatsReport& rep);
void write_csv(const InitStatsReport& rep, const std::filesystem::path& path);

// ------------------------------------------------------------------ train

/// Writes history.csv, neurons.csv (when neurons are tracked),
/// theta_initial.csv, theta_final.csv and summary.json into `dir`.
void write_train_outputs(const TrainHistory& hist, const TrainConfig& cfg,
                         const std::filesystem::path& dir, const std::string& prefix = "");

void write_history_csv(const std::vector<HistoryRow>& rows, const std::filesystem::path& path);
void write_neurons_csv(const std::vector<NeuronSample>& samples, const std::filesystem::path& path);
void write_snapshot_csv(const ThetaNetwork& theta, const std::filesystem::path& path);
ThetaNetwork read_snapshot_csv(const std::filesystem::path& path);
std::vector<HistoryRow> read_history_csv(const std::filesystem::path& path);

/// Two-neuron network with both hidden weights positive, so K2 starts at 0.
ThetaNetwork edge_case_network(std::uint64_t seed, double beta = 10.0);

/// `count` distinct neuron indices drawn from [0, m) with a seeded shuffle.
std::vector<std::size_t> pick_neurons(std::size_t m, std::size_t count, std::uint64_t seed);

// ------------------------------------------------------------------ sweep

struct SweepConfig {
  SystemSpec base;  // q, r, gamma, sigma_rho_sq, delta0 taken from here
  std::vector<double> a_values;  // empty selects {-0.9, ..., 0.9} without 0
  std::vector<double> b_values;  // empty selects {-0.45, ..., 0.45} without 0
  InitConfig init;
  double iota = 0.01;
  StepRule step_rule = StepRule::kConstant;
  std::size_t max_iters = 25000;
  double stop_rel_error = 1e-3;  // early stop once the gap certifies this gain error
  double tol = 5e-2;             // success threshold on max_i |K_i - K*| / |K*|
  std::size_t record_every = 0;  // 0 keeps only the first and last rows
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

std::vector<double> default_a_grid();
std::vector<double> default_b_grid();

struct SweepRun {
  double a = 0.0;
  double b = 0.0;
  double K_star = 0.0;
  double K1 = 0.0;
  double K2 = 0.0;
  double gap = 0.0;
  double gain_error = 0.0;
  double rel_gain_error = 0.0;
  std::size_t iters = 0;
  std::uint64_t seed = 0;
  std::string status;  // "ok", "not_converged" or "failed"
  std::string message;
  std::vector<HistoryRow> rows;
};

struct SweepReport {
  std::vector<SweepRun> runs;
  std::size_t converged = 0;
  std::size_t failed = 0;
};

/// Runs every (a, b) pair independently; run i uses derive_seed(seed, i).
/// Errors inside a run are recorded as status "failed".
SweepReport sweep(const SweepConfig& cfg);
std::string to_text(const SweepReport& rep, double tol);
void write_csv(const SweepReport& rep, const std::filesystem::path& path);

// ----------------------------------------------------------------- regime

struct RegimeReportConfig {
  RegimeInputs inputs;
  std::size_t grid_n = 33;
  std::vector<double> betas{10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8};
  std::size_t workers = 1;
};

struct RegimeReport {
  RegimeInputs inputs;  // with L_mu, alpha_mu filled in
  GridEstimate L_mu;
  GridEstimate alpha_mu;
  RegimeConstants constants;
  std::vector<BetaSweepRow> sweep;
};

/// Estimates any of L_mu, alpha_mu the inputs leave empty, then evaluates
/// the ledger and the beta sweep.
RegimeReport regime_report(const RegimeReportConfig& cfg);
std::string to_text(const RegimeReport& rep);
void write_beta_sweep_csv(const std::vector<BetaSweepRow>& rows, const std::filesystem::path& path);

// ----------------------------------------------------------- export-plots

struct ExportConfig {
  TrainConfig base;
  std::vector<std::size_t> widths{10, 100, 1000, 10000};
  std::size_t tracked_neurons = 50;
  std::size_t edge_iters = 5000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct ExportedFile {
  std::string file;
  std::string schema;
  std::string kind;   // "history", "neurons" or "snapshot"
  std::string label;  // e.g. "base", "edge_m2", "width_100"
  std::size_t m = 0;
};

struct ExportManifest {
  std::vector<ExportedFile> files;
  double K_star = 0.0;
  double J_star = 0.0;
  double beta = 0.0;
  double alpha = 0.0;
  std::size_t m = 0;
};

/// Runs the base case with tracked neurons, the m = 2 edge case and the
/// width series, and writes their CSVs plus manifest.json into `dir`.
ExportManifest export_plots(const ExportConfig& cfg, const std::filesystem::path& dir);

/// Checks every manifest entry exists and passes its schema; returns the
/// list of problems (empty when valid).
std::vector<std::string> validate_export(const std::filesystem::path& dir);

}  // namespace relu_lqr::experiments
