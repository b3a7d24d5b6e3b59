// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "relu_lqr/errors.hpp"
#include "relu_lqr/experiments.hpp"
#include "relu_lqr/numeric.hpp"
#include "relu_lqr/oracle.hpp"
#include "relu_lqr/parallel.hpp"
#include "relu_lqr/random.hpp"
#include "relu_lqr/regime.hpp"
#include "relu_lqr/trainer.hpp"

namespace {

using namespace relu_lqr;
using Clock = std::chrono::steady_clock;

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void info(const char* name, const std::string& detail) {
  std::printf("INFO  %-28s %s\n", name, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr Region kRegions[] = {Region::PP, Region::NN, Region::PN, Region::NP};

// Rollout from x0 = +-1 over a horizon whose tail is below 1e-8 for every
// controller in the safe set; P_i - rollout must lie in [0, tail bound].
void value_coefficient_oracle() {
  const auto t0 = Clock::now();
  const SystemSpec sys = base_case();
  const double delta_bar = 0.025;
  const std::size_t horizon = oracle::horizon_for(sys, 1e-8, 1.0, delta_bar);
  const double bound = oracle::truncation_bound(sys, horizon, 1.0, delta_bar);
  std::size_t bad = 0;
  std::size_t n = 0;
  double worst = 0.0;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t i = 0; i < 250; ++i, ++n) {
      const PiecewiseGains mu =
          experiments::sample_in_region(sys, kRegions[r], delta_bar, 0.0, 101 + r, i);
      const ValueCoeffs p = value_coeffs(sys, mu);
      const double gap1 = p.p1 - oracle::rollout_cost(sys, mu, 1.0, horizon);
      const double gap2 = p.p2 - oracle::rollout_cost(sys, mu, -1.0, horizon);
      const double slack = 1e-13 * std::max(p.p1, p.p2);
      worst = std::max({worst, std::abs(gap1), std::abs(gap2)});
      if (gap1 < -slack || gap1 > bound + slack || gap2 < -slack || gap2 > bound + slack) ++bad;
    }
  }
  const double secs = seconds_since(t0);
  report(bad == 0 && secs < 10.0, "value_coefficient_oracle",
         fmt("%zu controllers, horizon %zu, tail bound %.2e, max |P - rollout| %.2e, "
             "violations %zu, %.2fs",
             n, horizon, bound, worst, bad, secs));
}

void bellman_identity() {
  const auto t0 = Clock::now();
  const SystemSpec sys = base_case();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> a_dist(-0.975, 0.975);
  std::uniform_real_distribution<double> x_dist(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const PiecewiseGains mu{(a_dist(rng) - sys.a) / sys.b, (a_dist(rng) - sys.a) / sys.b};
    const ValueCoeffs p = value_coeffs(sys, mu);
    const double x = x_dist(rng);
    const double u = mu(x);
    const double lhs = value_at(p, x);
    const double rhs = sys.q * x * x + sys.r * u * u + sys.gamma * value_at(p, sys.a * x + sys.b * u);
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  const double secs = seconds_since(t0);
  report(worst <= 1e-10 && secs < 5.0, "bellman_identity",
         fmt("10000 samples, max residual %.2e (relative to max(1,|J|)), %.2fs", worst, secs));
}

void gradient_validation() {
  const auto t0 = Clock::now();
  experiments::GradCheckConfig cfg;
  cfg.sys = base_case();
  const experiments::GradCheckReport rep = experiments::grad_check(cfg);
  double mu_err = 0.0;
  std::size_t points = 0;
  for (const auto& r : rep.regions) {
    mu_err = std::max(mu_err, r.max_rel_err);
    points += r.points;
  }
  const double secs = seconds_since(t0);
  report(rep.failures() == 0 && points == 400 && rep.theta_networks == 50 && secs < 30.0,
         "gradient_validation",
         fmt("%zu mu points max rel err %.2e, %zu networks max rel err %.2e, %zu failures, %.2fs",
             points, mu_err, rep.theta_networks, rep.theta_max_rel_err, rep.failures(), secs));
}

void riccati_benchmark() {
  std::vector<SystemSpec> systems{base_case()};
  for (double a : experiments::default_a_grid()) {
    for (double b : experiments::default_b_grid()) {
      SystemSpec sys = base_case();
      sys.a = a;
      sys.b = b;
      systems.push_back(sys);
    }
  }
  double worst_res = 0.0;
  double worst_grad = 0.0;
  double base_grad = 0.0;
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const RiccatiSolution sol = riccati_solve(systems[i]);
    const RiccatiResiduals res = riccati_residuals(systems[i], sol);
    worst_res = std::max({worst_res, res.gain, res.value});
    const double gn = grad_mu(systems[i], sol.gains()).norm();
    worst_grad = std::max(worst_grad, gn);
    if (i == 0) base_grad = gn;
  }
  report(worst_res <= 1e-12 && base_grad <= 1e-9, "riccati_benchmark",
         fmt("%zu systems, max residual %.2e, |grad| at optimum: base %.2e, grid max %.2e",
             systems.size(), worst_res, base_grad, worst_grad));
}

TrainConfig base_train(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.sys = base_case();
  cfg.init = {.m = 1000, .beta = 10.0, .seed = seed};
  cfg.iota = 0.01;
  cfg.step_rule = StepRule::kConstant;
  return cfg;
}

void step_level_suite() {
  TrainConfig cfg = base_train(0);
  cfg.max_iters = 1000;
  const TrainHistory hist = train(cfg);
  const StepInvariants& inv = hist.invariants;
  report(inv.max_decomposition_residual <= 1e-12 && inv.crossing_bound_violations == 0,
         "step_decomposition",
         fmt("1000 steps, max decomposition residual %.2e, %zu crossing steps, "
             "max |e|/bound %.3f, %zu bound violations, %zu steps with eta|g| > 1",
             inv.max_decomposition_residual, inv.crossing_steps, inv.max_crossing_ratio,
             inv.crossing_bound_violations, inv.small_step_violations));
}

// Gap differences within this tolerance are treated as rounding in J.
constexpr double kMonotoneTol = 1e-12;

void base_case_reproduction() {
  const SystemSpec sys = base_case();
  const RiccatiSolution opt = riccati_solve(sys);
  const double target = 1e-2 * std::abs(opt.k_star);
  bool ok = true;
  std::size_t worst_settle = 0;
  double worst_secs = 0.0;
  double worst_rise = 0.0;
  std::size_t unsafe_runs = 0;
  std::size_t unsettled = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t0 = Clock::now();
    TrainConfig cfg = base_train(seed);
    cfg.max_iters = 25000;
    const TrainHistory hist = train(cfg);
    const double secs = seconds_since(t0);
    worst_secs = std::max(worst_secs, secs);
    bool safe = true;
    std::optional<std::size_t> settle;
    for (std::size_t i = 0; i < hist.rows.size(); ++i) {
      const HistoryRow& row = hist.rows[i];
      safe = safe && row.safe;
      if (i > 0) worst_rise = std::max(worst_rise, row.gap - hist.rows[i - 1].gap);
      const double err = std::max(std::abs(row.K1 - opt.k_star), std::abs(row.K2 - opt.k_star));
      if (!settle && err <= target) settle = row.k;
    }
    if (!safe) ++unsafe_runs;
    if (!settle) {
      ++unsettled;
    } else {
      worst_settle = std::max(worst_settle, *settle);
    }
    ok = ok && safe && settle.has_value() && secs < 120.0;
  }
  ok = ok && worst_rise <= kMonotoneTol;
  report(ok, "base_case_reproduction",
         fmt("10 seeds, unsafe runs %zu, unsettled %zu, latest settle k=%zu, "
             "max gap rise %.2e, slowest run %.2fs",
             unsafe_runs, unsettled, worst_settle, worst_rise, worst_secs));
}

void geometric_envelope(double alpha_mu_hat, double L_mu_hat) {
  TrainConfig cfg = base_train(0);
  cfg.max_iters = 25000;
  cfg.gap_tol = 1e-12;
  const TrainHistory hist = train(cfg);
  const std::size_t k_end = hist.rows.back().k;
  const RateFit fit = rate_fit(hist.rows, k_end / 4, 3 * k_end / 4);
  const double delta0 = hist.rows.front().gap;
  std::size_t above = 0;
  for (const HistoryRow& row : hist.rows) {
    if (row.gap > delta0 * std::pow(fit.rho_hat, static_cast<double>(row.k)) * (1 + 1e-12)) {
      ++above;
    }
  }
  RegimeInputs inp;
  inp.sys = cfg.sys;
  inp.beta = cfg.init.beta;
  inp.m = cfg.init.m;
  inp.iota = cfg.iota;
  inp.step_rule = cfg.step_rule;
  inp.L_mu = L_mu_hat;
  inp.alpha_mu = alpha_mu_hat;
  const double rho_m = compute_constants(inp).rho_m;
  const bool ok = fit.r_squared >= 0.98 && fit.rho_hat < 1.0 && above == 0 && fit.rho_hat <= rho_m;
  report(ok, "geometric_envelope",
         fmt("window k in [%zu, %zu], R^2 %.6f, rho_hat %.6f, rows above envelope %zu, "
             "ledger rho_m %.8f (alpha_mu_hat %.4g)",
             k_end / 4, 3 * k_end / 4, fit.r_squared, fit.rho_hat, above, rho_m, alpha_mu_hat));
}

void edge_case() {
  const auto t0 = Clock::now();
  TrainConfig cfg = base_train(0);
  cfg.init.m = 2;
  cfg.theta0 = experiments::edge_case_network(7);
  cfg.max_iters = 25000;
  const TrainHistory hist = train(cfg);
  const std::size_t first_cross =
      hist.crossing_events.empty() ? hist.iterations : hist.crossing_events.front().step;
  bool pinned = true;
  for (const HistoryRow& row : hist.rows) {
    if (row.k <= first_cross) pinned = pinned && row.K2 == 0.0;
  }
  const double secs = seconds_since(t0);
  const double gap = hist.rows.back().gap;
  report(pinned && gap > 0.0 && secs < 10.0, "edge_case_m2",
         fmt("%zu iterations, crossings %zu, K2 pinned at 0: %s, final K1 %.6f, "
             "terminal gap %.4e, %.2fs",
             hist.iterations, hist.crossing_events.size(), pinned ? "yes" : "no",
             hist.rows.back().K1, gap, secs));
}

void initialization_events() {
  const auto t0 = Clock::now();
  experiments::InitStatsConfig cfg;
  cfg.sys = base_case();
  cfg.workers = 0;
  const experiments::InitStatsReport rep = experiments::init_stats(cfg);
  bool ok = rep.rows.size() == 3;
  std::string detail;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& row = rep.rows[i];
    detail += fmt("m=%zu [%.3f %.3f %.3f %.3f] ", row.m, row.freq_stable, row.freq_norm,
                  row.freq_backbone, row.freq_bad_mass);
    if (row.m == 1000) {
      ok = ok && row.freq_stable >= 0.99 && row.freq_norm >= 0.99 && row.freq_backbone >= 0.99 &&
           row.freq_bad_mass >= 0.99;
    }
    if (i > 0) {
      const auto& prev = rep.rows[i - 1];
      ok = ok && row.freq_stable >= prev.freq_stable && row.freq_norm >= prev.freq_norm &&
           row.freq_backbone >= prev.freq_backbone && row.freq_bad_mass >= prev.freq_bad_mass;
    }
  }
  report(ok, "initialization_events",
         detail + fmt("(stable norm backbone bad_mass, 1000 seeds), %.2fs", seconds_since(t0)));
}

struct Estimates {
  double L_mu = 0.0;
  double alpha_mu = 0.0;
};

Estimates regime_self_consistency() {
  experiments::RegimeReportConfig cfg;
  cfg.inputs.sys = base_case();
  cfg.workers = 0;
  cfg.betas = {10.0, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e12};
  const experiments::RegimeReport rep = experiments::regime_report(cfg);
  const RegimeInputs& inp = rep.inputs;

  double worst_identity = 0.0;
  for (const BetaSweepRow& row : rep.sweep) {
    RegimeInputs at = inp;
    at.beta = row.beta;
    const double substituted =
        1.0 - at.eta() * *at.alpha_mu * (1 - at.eps) * (normal_cdf(at.S) - normal_cdf(at.s)) *
                  (2 * normal_cdf(at.V * row.beta) - 1) * at.s * at.s * row.beta / 4;
    worst_identity = std::max(worst_identity, std::abs(row.consts.rho_m - substituted) /
                                                  std::max(1.0, std::abs(substituted)));
  }

  const double limit = (1 - inp.eps) * rep.constants.l_sS;
  bool b_dec = true;
  bool xi_dec = true;
  bool lam_lin = true;
  std::size_t xi_pairs = 0;
  for (std::size_t i = 1; i < rep.sweep.size(); ++i) {
    const RegimeConstants& p = rep.sweep[i - 1].consts;
    const RegimeConstants& c = rep.sweep[i].consts;
    b_dec = b_dec && c.B < p.B;
    if (std::isfinite(p.Xi_star) && std::isfinite(c.Xi_star)) {
      ++xi_pairs;
      xi_dec = xi_dec && c.Xi_star < p.Xi_star;
    }
    const double rp = p.lambda_star / rep.sweep[i - 1].beta;
    const double rc = c.lambda_star / rep.sweep[i].beta;
    lam_lin = lam_lin && rc >= rp * (1 - 1e-15) && rc <= limit * (1 + 1e-15);
  }
  const double last_ratio = rep.sweep.back().consts.lambda_star / rep.sweep.back().beta;
  lam_lin = lam_lin && std::abs(last_ratio - limit) <= 1e-14 * limit;
  const bool ok = worst_identity <= 1e-14 && b_dec && xi_dec && xi_pairs >= 2 && lam_lin;
  report(ok, "regime_self_consistency",
         fmt("rho identity max err %.2e, B decreasing %s, Xi* decreasing %s over %zu pairs, "
             "lambda*/beta -> (1-eps) l %s, L_mu_hat %.4g, alpha_mu_hat %.4g",
             worst_identity, b_dec ? "yes" : "no", xi_dec ? "yes" : "no", xi_pairs,
             lam_lin ? "yes" : "no", *inp.L_mu, *inp.alpha_mu));
  return {*inp.L_mu, *inp.alpha_mu};
}

void sweep_grid() {
  const auto t0 = Clock::now();
  experiments::SweepConfig cfg;
  cfg.base = base_case();
  cfg.init = {.m = 1000, .beta = 10.0};
  cfg.workers = 0;
  const experiments::SweepReport rep = experiments::sweep(cfg);
  std::size_t within = 0;
  double worst = 0.0;
  for (const auto& run : rep.runs) {
    if (run.status != "failed" && run.rel_gain_error <= cfg.tol) ++within;
    if (run.status != "failed") worst = std::max(worst, run.rel_gain_error);
  }
  const double frac = rep.runs.empty() ? 0.0 : static_cast<double>(within) / rep.runs.size();
  const double secs = seconds_since(t0);
  report(rep.runs.size() == 324 && frac >= 0.95 && secs < 1800.0, "sweep_grid",
         fmt("%zu systems, %zu within 5e-2 (%.1f%%), %zu failed, worst rel error %.2e, %.1fs",
             rep.runs.size(), within, 100 * frac, rep.failed, worst, secs));
}

void width_scaled_info() {
  TrainConfig cfg = base_train(0);
  cfg.step_rule = StepRule::kWidthScaled;
  cfg.max_iters = 25000;
  const TrainHistory hist = train(cfg);
  const RiccatiSolution opt = riccati_solve(cfg.sys);
  const HistoryRow& last = hist.rows.back();
  info("width_scaled_step",
       fmt("eta = iota/m = %.1e: after %zu iterations gap %.4e, max |K_i - K*|/|K*| %.3e",
           hist.eta, hist.iterations, last.gap,
           std::max(std::abs(last.K1 - opt.k_star), std::abs(last.K2 - opt.k_star)) /
               std::abs(opt.k_star)));
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  auto guarded = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  };
  guarded("value_coefficient_oracle", value_coefficient_oracle);
  guarded("bellman_identity", bellman_identity);
  guarded("gradient_validation", gradient_validation);
  guarded("riccati_benchmark", riccati_benchmark);
  guarded("step_decomposition", step_level_suite);
  guarded("base_case_reproduction", base_case_reproduction);
  Estimates est;
  guarded("regime_self_consistency", [&] { est = regime_self_consistency(); });
  guarded("geometric_envelope", [&] {
    if (!(est.alpha_mu > 0.0)) throw Error("no alpha_mu estimate from the regime step");
    geometric_envelope(est.alpha_mu, est.L_mu);
  });
  guarded("edge_case_m2", edge_case);
  guarded("initialization_events", initialization_events);
  guarded("sweep_grid", sweep_grid);
  guarded("width_scaled_step", width_scaled_info);
  std::printf("summary: %d failing criteria, %.1fs total\n", g_failures, seconds_since(t0));
  return g_failures == 0 ? 0 : 1;
}
