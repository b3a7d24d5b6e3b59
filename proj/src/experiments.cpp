#include "relu_lqr/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "relu_lqr/csv.hpp"
#include "relu_lqr/errors.hpp"
#include "relu_lqr/numeric.hpp"
#include "relu_lqr/oracle.hpp"
#include "relu_lqr/parallel.hpp"
#include "relu_lqr/random.hpp"

namespace relu_lqr::experiments {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string num(double x) { return format_number(x); }

void write_text_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write " + tmp.string());
    out << text;
    if (!out) throw InvalidInputError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

double rel_err(Vec2 analytic, Vec2 reference) {
  return (analytic - reference).norm() / reference.norm();
}

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

// ---------------------------------------------------------------- riccati

RiccatiReport riccati_report(const SystemSpec& sys) {
  validate(sys);
  RiccatiReport rep;
  rep.solution = riccati_solve(sys);
  rep.J_star = optimal_cost(sys, rep.solution);
  rep.residuals = riccati_residuals(sys, rep.solution);
  rep.fixed_point_p = oracle::riccati_fixed_point(sys).p_star;
  rep.grad_norm_at_optimum = grad_mu(sys, rep.solution.gains()).norm();
  return rep;
}

std::string to_text(const RiccatiReport& rep) {
  std::ostringstream out;
  out << "K_star = " << num(rep.solution.k_star) << '\n'
      << "P_star = " << num(rep.solution.p_star) << '\n'
      << "J_star = " << num(rep.J_star) << '\n'
      << "residual.gain = " << num(rep.residuals.gain) << '\n'
      << "residual.value = " << num(rep.residuals.value) << '\n'
      << "fixed_point.P = " << num(rep.fixed_point_p) << '\n'
      << "grad_norm_at_optimum = " << num(rep.grad_norm_at_optimum) << '\n';
  return out.str();
}

// ------------------------------------------------------------- grad-check

std::size_t GradCheckReport::failures() const {
  std::size_t n = theta_failures;
  for (const RegionCheck& r : regions) n += r.failures;
  return n;
}

PiecewiseGains sample_in_region(const SystemSpec& sys, Region region, double delta_bar,
                                double min_abs_a, std::uint64_t seed, std::size_t index) {
  CounterStream stream(seed, index);
  std::uniform_real_distribution<double> mag(min_abs_a, 1.0 - delta_bar);
  const bool pos1 = region == Region::PP || region == Region::PN;
  const bool pos2 = region == Region::PP || region == Region::NP;
  const double a1 = (pos1 ? 1.0 : -1.0) * mag(stream);
  const double a2 = (pos2 ? 1.0 : -1.0) * mag(stream);
  return {(a1 - sys.a) / sys.b, (a2 - sys.a) / sys.b};
}

GradCheckReport grad_check(const GradCheckConfig& cfg) {
  validate(cfg.sys);
  GradCheckReport rep;
  const Region all[] = {Region::PP, Region::NN, Region::PN, Region::NP};
  for (std::size_t r = 0; r < 4; ++r) {
    RegionCheck& check = rep.regions[r];
    check.region = all[r];
    const std::uint64_t region_seed = derive_seed(cfg.seed, r);
    for (std::size_t i = 0; i < cfg.points_per_region; ++i) {
      const PiecewiseGains mu = sample_in_region(cfg.sys, all[r], cfg.delta_bar, 1e-2, region_seed, i);
      Vec2 g = grad_mu(cfg.sys, mu);
      g.x1 *= 1.0 + cfg.corrupt;
      const double err = rel_err(g, oracle::fd_grad_mu(cfg.sys, mu));
      check.max_rel_err = std::max(check.max_rel_err, err);
      if (!(err <= cfg.mu_tol)) ++check.failures;
      ++check.points;
    }
  }

  // Random networks whose gains spread over all regions of the safe box.
  const std::uint64_t net_seed = derive_seed(cfg.seed, 100);
  const std::size_t m = cfg.network_width;
  std::size_t attempt = 0;
  while (rep.theta_networks < cfg.networks) {
    CounterStream stream(net_seed, attempt++);
    std::uniform_real_distribution<double> scale(0.1, 10.0);
    std::normal_distribution<double> normal;
    const double sv = scale(stream);
    ThetaNetwork theta;
    for (std::size_t j = 0; j < m; ++j) {
      double w = 0.0;
      do {
        w = std::sqrt(10.0 / static_cast<double>(m)) * normal(stream);
      } while (std::abs(w) <= cfg.min_abs_w);
      theta.w.push_back(w);
      theta.v.push_back(sv / std::sqrt(static_cast<double>(m)) * normal(stream));
    }
    const PiecewiseGains mu = effective_gains(theta);
    if (!in_margin_set(cfg.sys, mu, cfg.delta_bar)) continue;
    const auto [a1, a2] = closed_loop(cfg.sys, mu);
    if (std::min(std::abs(a1), std::abs(a2)) < 1e-3) continue;
    Vec2 g = grad_mu(cfg.sys, mu);
    g.x1 *= 1.0 + cfg.corrupt;
    const std::vector<double> analytic = grad_theta(theta, g);
    const std::vector<double> fd = oracle::fd_grad_theta(cfg.sys, theta, cfg.theta_step);
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      diff += (analytic[i] - fd[i]) * (analytic[i] - fd[i]);
      ref += fd[i] * fd[i];
    }
    const double err = std::sqrt(diff / ref);
    rep.theta_max_rel_err = std::max(rep.theta_max_rel_err, err);
    if (!(err <= cfg.theta_tol)) ++rep.theta_failures;
    ++rep.theta_networks;
  }

  // Continuity of the gradient across a_i = 0.
  for (int side = 0; side < 2; ++side) {
    const double k_lo = (-1e-9 - cfg.sys.a) / cfg.sys.b;
    const double k_hi = (1e-9 - cfg.sys.a) / cfg.sys.b;
    const double other = riccati_solve(cfg.sys).k_star;
    const PiecewiseGains below = side == 0 ? PiecewiseGains{k_lo, other} : PiecewiseGains{other, k_lo};
    const PiecewiseGains above = side == 0 ? PiecewiseGains{k_hi, other} : PiecewiseGains{other, k_hi};
    const Vec2 gb = grad_mu(cfg.sys, below);
    const Vec2 ga = grad_mu(cfg.sys, above);
    rep.boundary_jump[side] = (ga - gb).norm() / std::max(ga.norm(), 1.0);
  }
  return rep;
}

std::string to_text(const GradCheckReport& rep) {
  std::ostringstream out;
  for (const RegionCheck& r : rep.regions) {
    out << "grad_mu." << to_string(r.region) << ": points=" << r.points
        << " failures=" << r.failures << " max_rel_err=" << num(r.max_rel_err) << '\n';
  }
  out << "grad_theta: networks=" << rep.theta_networks << " failures=" << rep.theta_failures
      << " max_rel_err=" << num(rep.theta_max_rel_err) << '\n';
  out << "boundary_jump.a1 = " << num(rep.boundary_jump[0]) << '\n';
  out << "boundary_jump.a2 = " << num(rep.boundary_jump[1]) << '\n';
  out << "failures = " << rep.failures() << '\n';
  return out.str();
}

// ------------------------------------------------------------- init-stats

InitThresholds init_thresholds(const InitStatsConfig& cfg) {
  if (!(cfg.s > 0.0 && cfg.s < cfg.S) || !(cfg.V > 0.0) || !(cfg.eps > 0.0 && cfg.eps < 1.0) ||
      !(cfg.beta > 0.0)) {
    throw InvalidInputError("init-stats needs 0 < s < S, V > 0, eps in (0,1), beta > 0");
  }
  const double alpha = 1.0 / (cfg.beta * cfg.beta);
  InitThresholds th;
  th.R_star_sq = (1.0 + cfg.eps) * (alpha + cfg.beta);
  th.c = (1.0 - cfg.eps) * (normal_cdf(cfg.S) - normal_cdf(cfg.s)) *
         (2.0 * normal_cdf(cfg.V * cfg.beta) - 1.0);
  const BadMassExpectations bad = bad_mass_expectations(cfg.beta, cfg.V, cfg.B, alpha);
  th.tau_w = bad.tau_w;
  th.M_w = bad.M_w;
  th.M_v = bad.M_v;
  return th;
}

InitEvents init_events(const SystemSpec& sys, const ThetaNetwork& theta0, double beta,
                       double delta, const InitStatsConfig& cfg, const InitThresholds& th) {
  InitEvents ev;
  const double m = static_cast<double>(theta0.width());
  ev.stable = in_margin_set(sys, effective_gains(theta0), delta);
  ev.norm = masses(theta0).total <= th.R_star_sq;
  const double sb = std::sqrt(beta);
  const BackboneSets sets = backbone_sets(theta0, {cfg.s * sb, cfg.S * sb, cfg.V, th.tau_w});
  ev.c1_frac = static_cast<double>(sets.c1_idx.size()) / m;
  ev.c2_frac = static_cast<double>(sets.c2_idx.size()) / m;
  ev.backbone = ev.c1_frac >= th.c && ev.c2_frac >= th.c;
  ev.m_w = sets.m_w;
  ev.m_v = sets.m_v;
  ev.bad_mass = sets.m_w <= th.M_w && sets.m_v <= th.M_v;
  return ev;
}

InitStatsReport init_stats(const InitStatsConfig& cfg) {
  validate(cfg.sys);
  if (cfg.seeds == 0) throw InvalidInputError("init-stats needs at least one seed");
  InitStatsReport rep;
  rep.thresholds = init_thresholds(cfg);
  for (std::size_t m : cfg.widths) {
    if (m == 0) throw InvalidInputError("width must be at least 1");
    std::vector<InitEvents> events(cfg.seeds);
    const std::uint64_t width_seed = derive_seed(cfg.seed, m);
    parallel_for(cfg.seeds, cfg.workers, [&](std::size_t i) {
      InitConfig init{m, cfg.beta, std::nullopt, derive_seed(width_seed, i)};
      events[i] = init_events(cfg.sys, init_network(init), cfg.beta, cfg.delta, cfg, rep.thresholds);
    });
    InitStatsRow row;
    row.m = m;
    row.seeds = cfg.seeds;
    const double n = static_cast<double>(cfg.seeds);
    for (const InitEvents& ev : events) {
      row.freq_stable += ev.stable;
      row.freq_norm += ev.norm;
      row.freq_backbone += ev.backbone;
      row.freq_bad_mass += ev.bad_mass;
      row.freq_all += ev.stable && ev.norm && ev.backbone && ev.bad_mass;
      row.mean_c1_frac += ev.c1_frac;
      row.mean_c2_frac += ev.c2_frac;
      row.mean_M_w += ev.m_w;
      row.mean_M_v += ev.m_v;
    }
    for (double* f : {&row.freq_stable, &row.freq_norm, &row.freq_backbone, &row.freq_bad_mass,
                      &row.freq_all, &row.mean_c1_frac, &row.mean_c2_frac, &row.mean_M_w,
                      &row.mean_M_v}) {
      *f /= n;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

std::string to_text(const InitStatsReport& rep) {
  std::ostringstream out;
  out << "thresholds: R_star_sq=" << num(rep.thresholds.R_star_sq) << " c=" << num(rep.thresholds.c)
      << " tau_w=" << num(rep.thresholds.tau_w) << " M_w=" << num(rep.thresholds.M_w)
      << " M_v=" << num(rep.thresholds.M_v) << '\n';
  out << std::setw(8) << "m" << std::setw(8) << "seeds" << std::setw(10) << "stable"
      << std::setw(10) << "norm" << std::setw(10) << "backbone" << std::setw(10) << "badmass"
      << std::setw(10) << "all" << '\n';
  for (const InitStatsRow& r : rep.rows) {
    out << std::setw(8) << r.m << std::setw(8) << r.seeds << std::fixed << std::setprecision(4)
        << std::setw(10) << r.freq_stable << std::setw(10) << r.freq_norm << std::setw(10)
        << r.freq_backbone << std::setw(10) << r.freq_bad_mass << std::setw(10) << r.freq_all
        << '\n'
        << std::defaultfloat;
  }
  return out.str();
}

void write_csv(const InitStatsReport& rep, const fs::path& path) {
  CsvWriter w(path, schemas::init_stats());
  for (const InitStatsRow& r : rep.rows) {
    w.row({std::to_string(r.m), std::to_string(r.seeds), num(r.freq_stable), num(r.freq_norm),
           num(r.freq_backbone), num(r.freq_bad_mass), num(r.freq_all), num(r.mean_c1_frac),
           num(r.mean_c2_frac), num(r.mean_M_w), num(r.mean_M_v)});
  }
  w.close();
}

// ------------------------------------------------------------------ train

void write_history_csv(const std::vector<HistoryRow>& rows, const fs::path& path) {
  CsvWriter w(path, schemas::history());
  for (const HistoryRow& r : rows) {
    w.row({std::to_string(r.k), num(r.K1), num(r.K2), num(r.J), num(r.gap), num(r.grad_norm),
           num(r.xi), std::to_string(r.crossings), num(r.g1_mass), num(r.g2_mass), num(r.cum_grad),
           r.safe ? "1" : "0"});
  }
  w.close();
}

std::vector<HistoryRow> read_history_csv(const fs::path& path) {
  const CsvTable t = read_csv(path, schemas::history());
  std::vector<HistoryRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    HistoryRow r;
    r.k = static_cast<std::size_t>(t.number(i, "k"));
    r.K1 = t.number(i, "K1");
    r.K2 = t.number(i, "K2");
    r.J = t.number(i, "J");
    r.gap = t.number(i, "gap");
    r.grad_norm = t.number(i, "grad_norm");
    r.xi = t.number(i, "xi");
    r.crossings = static_cast<std::size_t>(t.number(i, "crossings"));
    r.g1_mass = t.number(i, "g1_mass");
    r.g2_mass = t.number(i, "g2_mass");
    r.cum_grad = t.number(i, "cum_grad");
    r.safe = t.number(i, "safe") != 0.0;
    rows.push_back(r);
  }
  return rows;
}

void write_neurons_csv(const std::vector<NeuronSample>& samples, const fs::path& path) {
  CsvWriter w(path, schemas::neurons());
  for (const NeuronSample& s : samples) {
    w.row({std::to_string(s.k), std::to_string(s.j), num(s.w), num(s.v)});
  }
  w.close();
}

void write_snapshot_csv(const ThetaNetwork& theta, const fs::path& path) {
  CsvWriter w(path, schemas::snapshot());
  for (std::size_t j = 0; j < theta.width(); ++j) {
    w.row({std::to_string(j), num(theta.w[j]), num(theta.v[j])});
  }
  w.close();
}

ThetaNetwork read_snapshot_csv(const fs::path& path) {
  const CsvTable t = read_csv(path, schemas::snapshot());
  ThetaNetwork theta;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (static_cast<std::size_t>(t.number(i, "j")) != i) {
      throw SchemaMismatchError(path.string() + ": neuron indices must run 0..m-1 in order");
    }
    theta.w.push_back(t.number(i, "w"));
    theta.v.push_back(t.number(i, "v"));
  }
  return theta;
}

void write_train_outputs(const TrainHistory& hist, const TrainConfig& cfg, const fs::path& dir,
                         const std::string& prefix) {
  write_history_csv(hist.rows, dir / (prefix + "history.csv"));
  if (!hist.neurons.empty()) write_neurons_csv(hist.neurons, dir / (prefix + "neurons.csv"));
  write_snapshot_csv(hist.theta_initial, dir / (prefix + "theta_initial.csv"));
  write_snapshot_csv(hist.theta_final, dir / (prefix + "theta_final.csv"));

  const HistoryRow& last = hist.rows.back();
  json j;
  j["m"] = hist.theta_initial.width();
  j["beta"] = cfg.init.beta;
  j["alpha"] = cfg.init.alpha_value();
  j["iota"] = cfg.iota;
  j["step_rule"] = to_string(cfg.step_rule);
  j["eta"] = hist.eta;
  j["seed"] = cfg.init.seed;
  j["iterations"] = hist.iterations;
  j["stop_reason"] = hist.stop_reason;
  j["K_star"] = hist.riccati.k_star;
  j["P_star"] = hist.riccati.p_star;
  j["J_star"] = hist.J_star;
  j["final"] = {{"K1", last.K1}, {"K2", last.K2}, {"J", last.J}, {"gap", last.gap}};
  const StepInvariants& inv = hist.invariants;
  j["invariants"] = {{"max_decomposition_residual", inv.max_decomposition_residual},
                     {"crossing_steps", inv.crossing_steps},
                     {"crossing_bound_violations", inv.crossing_bound_violations},
                     {"max_crossing_ratio", inv.max_crossing_ratio},
                     {"small_step_violations", inv.small_step_violations},
                     {"gain_mass_violations", inv.gain_mass_violations}};
  j["max_radial_growth"] =
      hist.radial_growth.empty()
          ? 1.0
          : *std::max_element(hist.radial_growth.begin(), hist.radial_growth.end());
  j["crossing_events"] = hist.crossing_events.size();
  write_text_atomic(dir / (prefix + "summary.json"), j.dump(2) + "\n");
}

ThetaNetwork edge_case_network(std::uint64_t seed, double beta) {
  ThetaNetwork theta = init_network({2, beta, std::nullopt, seed});
  for (double& w : theta.w) w = std::abs(w);
  return theta;
}

std::vector<std::size_t> pick_neurons(std::size_t m, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  CounterStream stream(seed, 0x6e657572);
  std::shuffle(idx.begin(), idx.end(), stream);
  idx.resize(std::min(count, m));
  std::sort(idx.begin(), idx.end());
  return idx;
}

// ------------------------------------------------------------------ sweep

std::vector<double> default_a_grid() {
  std::vector<double> out;
  for (int i = -9; i <= 9; ++i) {
    if (i != 0) out.push_back(i / 10.0);
  }
  return out;
}

std::vector<double> default_b_grid() {
  std::vector<double> out;
  for (int i = -9; i <= 9; ++i) {
    if (i != 0) out.push_back(i * 5 / 100.0);
  }
  return out;
}

SweepReport sweep(const SweepConfig& cfg) {
  const std::vector<double> as = cfg.a_values.empty() ? default_a_grid() : cfg.a_values;
  const std::vector<double> bs = cfg.b_values.empty() ? default_b_grid() : cfg.b_values;
  SweepReport rep;
  rep.runs.resize(as.size() * bs.size());
  parallel_for(rep.runs.size(), cfg.workers, [&](std::size_t i) {
    SweepRun& run = rep.runs[i];
    run.a = as[i / bs.size()];
    run.b = bs[i % bs.size()];
    run.seed = derive_seed(cfg.seed, i);
    try {
      TrainConfig tc;
      tc.sys = cfg.base;
      tc.sys.a = run.a;
      tc.sys.b = run.b;
      tc.init = cfg.init;
      tc.init.seed = run.seed;
      tc.iota = cfg.iota;
      tc.step_rule = cfg.step_rule;
      tc.max_iters = cfg.max_iters;
      tc.record_every = cfg.record_every > 0 ? cfg.record_every : cfg.max_iters;
      const RiccatiSolution opt = riccati_solve(tc.sys);
      run.K_star = opt.k_star;
      const double target = cfg.stop_rel_error * std::abs(opt.k_star);
      tc.gap_tol = gap_curvature(tc.sys, opt) * target * target;
      TrainHistory hist = train(tc);
      const HistoryRow& last = hist.rows.back();
      run.K1 = last.K1;
      run.K2 = last.K2;
      run.gap = last.gap;
      run.iters = hist.iterations;
      run.gain_error = std::hypot(last.K1 - opt.k_star, last.K2 - opt.k_star);
      run.rel_gain_error =
          std::max(std::abs(last.K1 - opt.k_star), std::abs(last.K2 - opt.k_star)) /
          std::abs(opt.k_star);
      run.status = run.rel_gain_error <= cfg.tol ? "ok" : "not_converged";
      run.rows = std::move(hist.rows);
    } catch (const UnstableIterateError& e) {
      run.status = "failed";
      run.message = std::string("unstable iterate: ") + e.what();
      run.iters = e.last_safe_k();
    } catch (const std::exception& e) {
      run.status = "failed";
      run.message = e.what();
    }
  });
  for (const SweepRun& run : rep.runs) {
    if (run.status == "ok") ++rep.converged;
    if (run.status == "failed") ++rep.failed;
  }
  return rep;
}

std::string to_text(const SweepReport& rep, double tol) {
  std::ostringstream out;
  double worst = 0.0;
  std::size_t max_iters = 0;
  for (const SweepRun& r : rep.runs) {
    if (r.status != "failed") worst = std::max(worst, r.rel_gain_error);
    max_iters = std::max(max_iters, r.iters);
  }
  out << "systems = " << rep.runs.size() << '\n'
      << "converged = " << rep.converged << " (max_i |K_i - K*| <= " << num(tol) << " |K*|)\n"
      << "failed = " << rep.failed << '\n'
      << "worst_rel_gain_error = " << num(worst) << '\n'
      << "max_iterations_used = " << max_iters << '\n';
  for (const SweepRun& r : rep.runs) {
    if (r.status != "ok") {
      out << "  a=" << num(r.a) << " b=" << num(r.b) << " status=" << r.status
          << " rel_gain_error=" << num(r.rel_gain_error) << ' ' << r.message << '\n';
    }
  }
  return out.str();
}

void write_csv(const SweepReport& rep, const fs::path& path) {
  CsvWriter w(path, schemas::sweep());
  for (const SweepRun& r : rep.runs) {
    w.row({num(r.a), num(r.b), num(r.K_star), num(r.K1), num(r.K2), num(r.gap), num(r.gain_error),
           num(r.rel_gain_error), std::to_string(r.iters), std::to_string(r.seed), r.status,
           sanitize(r.message)});
  }
  w.close();
}

// ----------------------------------------------------------------- regime

RegimeReport regime_report(const RegimeReportConfig& cfg) {
  RegimeReport rep;
  rep.inputs = cfg.inputs;
  const double delta_bar = cfg.inputs.delta_bar();
  if (!rep.inputs.L_mu) {
    rep.L_mu = estimate_L_mu(cfg.inputs.sys, delta_bar, cfg.grid_n, cfg.workers);
    rep.inputs.L_mu = rep.L_mu.value;
  } else {
    rep.L_mu = {*rep.inputs.L_mu, 0, 0.0, {}};
  }
  if (!rep.inputs.alpha_mu) {
    rep.alpha_mu = estimate_alpha_mu(cfg.inputs.sys, delta_bar, cfg.grid_n, cfg.workers);
    rep.inputs.alpha_mu = rep.alpha_mu.value;
  } else {
    rep.alpha_mu = {*rep.inputs.alpha_mu, 0, 0.0, {}};
  }
  rep.constants = compute_constants(rep.inputs);
  rep.sweep = beta_sweep(rep.inputs, cfg.betas);
  return rep;
}

std::string to_text(const RegimeReport& rep) {
  std::ostringstream out;
  out << "estimate.L_mu = " << num(rep.L_mu.value) << " (grid_n=" << rep.L_mu.grid_n
      << ", spacing=" << num(rep.L_mu.spacing) << ")\n";
  out << "estimate.alpha_mu = " << num(rep.alpha_mu.value) << " (grid_n=" << rep.alpha_mu.grid_n
      << ", spacing=" << num(rep.alpha_mu.spacing) << ")\n";
  out << ledger_text(rep.inputs, rep.constants);
  out << "# beta sweep\n";
  out << std::setw(10) << "beta" << std::setw(14) << "lambda_star" << std::setw(14) << "B"
      << std::setw(14) << "Xi_star" << std::setw(14) << "m0" << std::setw(8) << "benign" << '\n';
  for (const BetaSweepRow& row : rep.sweep) {
    const RegimeConstants& k = row.consts;
    out << std::setw(10) << num(row.beta) << std::setw(14) << std::setprecision(6) << k.lambda_star
        << std::setw(14) << k.B << std::setw(14) << k.Xi_star << std::setw(14)
        << (k.m0 ? std::to_string(*k.m0) : std::string("-")) << std::setw(8)
        << (k.verdicts.benign() ? "yes" : "no") << '\n';
  }
  return out.str();
}

void write_beta_sweep_csv(const std::vector<BetaSweepRow>& rows, const fs::path& path) {
  CsvWriter w(path, schemas::beta_sweep());
  for (const BetaSweepRow& row : rows) {
    const RegimeConstants& k = row.consts;
    w.row({num(row.beta), num(k.lambda_star), num(k.B), num(k.tau_w), num(k.Xi_star),
           num(k.L_star), num(k.C_star), num(k.rho_m), k.m0 ? std::to_string(*k.m0) : "",
           k.verdicts.benign() ? "1" : "0", k.verdicts.controller_regime ? "1" : "0"});
  }
  w.close();
}

// ----------------------------------------------------------- export-plots

ExportManifest export_plots(const ExportConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  ExportManifest man;
  const std::size_t m = cfg.base.theta0 ? cfg.base.theta0->width() : cfg.base.init.m;
  man.m = m;
  man.beta = cfg.base.init.beta;
  man.alpha = cfg.base.init.alpha_value();
  const RiccatiSolution opt = riccati_solve(cfg.base.sys);
  man.K_star = opt.k_star;
  man.J_star = optimal_cost(cfg.base.sys, opt);

  struct Job {
    std::string label;
    TrainConfig tc;
  };
  std::vector<Job> jobs;

  TrainConfig base = cfg.base;
  base.init.seed = cfg.seed;
  base.track_neurons = pick_neurons(m, cfg.tracked_neurons, derive_seed(cfg.seed, 1));
  jobs.push_back({"base", base});

  TrainConfig edge = cfg.base;
  edge.theta0 = edge_case_network(derive_seed(cfg.seed, 2), cfg.base.init.beta);
  edge.max_iters = cfg.edge_iters;
  edge.track_neurons = {0, 1};
  jobs.push_back({"edge_m2", edge});

  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    TrainConfig tc = cfg.base;
    tc.init.m = cfg.widths[i];
    tc.init.seed = derive_seed(cfg.seed, 10 + i);
    tc.theta0.reset();
    tc.track_neurons.clear();
    jobs.push_back({"width_" + std::to_string(cfg.widths[i]), tc});
  }

  std::vector<TrainHistory> results(jobs.size());
  parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) { results[i] = train(jobs[i].tc); });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const std::string& label = jobs[i].label;
    const TrainHistory& h = results[i];
    const std::size_t width = h.theta_initial.width();
    write_history_csv(h.rows, dir / (label + "_history.csv"));
    man.files.push_back({label + "_history.csv", schemas::history().id, "history", label, width});
    if (!h.neurons.empty()) {
      write_neurons_csv(h.neurons, dir / (label + "_neurons.csv"));
      man.files.push_back({label + "_neurons.csv", schemas::neurons().id, "neurons", label, width});
    }
    if (label == "base" || label == "edge_m2") {
      write_snapshot_csv(h.theta_final, dir / (label + "_theta_final.csv"));
      man.files.push_back(
          {label + "_theta_final.csv", schemas::snapshot().id, "snapshot", label, width});
    }
  }

  json j;
  j["manifest_version"] = 1;
  j["K_star"] = man.K_star;
  j["J_star"] = man.J_star;
  j["beta"] = man.beta;
  j["alpha"] = man.alpha;
  j["m"] = man.m;
  j["files"] = json::array();
  for (const ExportedFile& f : man.files) {
    j["files"].push_back(
        {{"file", f.file}, {"schema", f.schema}, {"kind", f.kind}, {"label", f.label}, {"m", f.m}});
  }
  write_text_atomic(dir / "manifest.json", j.dump(2) + "\n");
  return man;
}

std::vector<std::string> validate_export(const fs::path& dir) {
  std::vector<std::string> problems;
  std::ifstream in(dir / "manifest.json");
  if (!in) return {"manifest.json missing"};
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    return {std::string("manifest.json unreadable: ") + e.what()};
  }
  const CsvSchema* known[] = {&schemas::history(), &schemas::neurons(), &schemas::snapshot()};
  for (const auto& f : j.at("files")) {
    const std::string file = f.at("file");
    const std::string schema = f.at("schema");
    const CsvSchema* match = nullptr;
    for (const CsvSchema* s : known) {
      if (s->id == schema) match = s;
    }
    if (!match) {
      problems.push_back(file + ": unknown schema " + schema);
      continue;
    }
    try {
      const CsvTable t = read_csv(dir / file, *match);
      if (t.rows.empty()) problems.push_back(file + ": no rows");
      for (std::size_t r = 0; r < t.rows.size(); ++r) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) parse_number(t.rows[r][c]);
      }
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  }
  return problems;
}

}  // namespace relu_lqr::experiments
