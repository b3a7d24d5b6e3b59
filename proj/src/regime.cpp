#include "relu_lqr/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "relu_lqr/csv.hpp"
#include "relu_lqr/errors.hpp"
#include "relu_lqr/numeric.hpp"
#include "relu_lqr/parallel.hpp"

namespace relu_lqr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct GridData {
  std::vector<PiecewiseGains> points;
  std::vector<Vec2> grads;
  std::vector<double> costs;
  double spacing = 0.0;
};

GridData evaluate_grid(const SystemSpec& sys, double delta_bar, std::size_t grid_n,
                       std::size_t workers, bool add_optimum) {
  if (grid_n < 16) throw InvalidInputError("grid_n must be at least 16");
  validate(sys);
  const auto [lo, hi] = safe_gain_interval(sys, delta_bar);
  GridData data;
  data.spacing = (hi - lo) / static_cast<double>(grid_n - 1);
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double k1 = i + 1 == grid_n ? hi : lo + data.spacing * static_cast<double>(i);
    for (std::size_t j = 0; j < grid_n; ++j) {
      const double k2 = j + 1 == grid_n ? hi : lo + data.spacing * static_cast<double>(j);
      data.points.push_back({k1, k2});
    }
  }
  if (add_optimum) data.points.push_back(riccati_solve(sys).gains());
  data.grads.resize(data.points.size());
  data.costs.resize(data.points.size());
  parallel_for(data.points.size(), workers, [&](std::size_t i) {
    data.grads[i] = grad_mu(sys, data.points[i]);
    data.costs[i] = cost(sys, data.points[i]);
  });
  return data;
}

}  // namespace

void validate(const RegimeInputs& inp) {
  validate(inp.sys);
  std::ostringstream why;
  if (!(inp.delta > 0.0 && inp.delta < inp.sys.delta0)) why << "delta must lie in (0, delta0); ";
  if (!(inp.s > 0.0 && inp.s < inp.S)) why << "need 0 < s < S; ";
  if (!(inp.V > 0.0)) why << "V must be positive; ";
  if (!(inp.eps > 0.0 && inp.eps < 1.0)) why << "eps must lie in (0,1); ";
  if (!(inp.beta > 0.0) || !std::isfinite(inp.beta)) why << "beta must be positive; ";
  if (inp.m == 0) why << "m must be at least 1; ";
  if (!(inp.iota > 0.0)) why << "iota must be positive; ";
  if (!inp.L_mu || !(*inp.L_mu > 0.0)) why << "L_mu must be supplied and positive; ";
  if (!inp.alpha_mu || !(*inp.alpha_mu > 0.0)) why << "alpha_mu must be supplied and positive; ";
  if (inp.C_grad && !(*inp.C_grad > 0.0)) why << "C_grad must be positive; ";
  const std::string msg = why.str();
  if (!msg.empty()) throw InvalidInputError("invalid regime inputs: " + msg);
}

bool RegimeVerdicts::benign() const {
  return step_vs_gmax && step_vs_curvature && growth_budget && backbone_radius && crossing_mass &&
         second_order && drift;
}

double c_grad_from(const SystemSpec& sys, double L_mu) {
  return L_mu * L_mu / gap_curvature(sys, riccati_solve(sys));
}

double tau_w_threshold(double B, double V) {
  const double eb = std::exp(B) * B;
  if (!(eb < 1.0)) throw InvalidInputError("tau_w needs e^B B < 1");
  return eb * V / std::sqrt(1.0 - eb * eb);
}

double normal_truncated_second_moment(double t) {
  if (!(t >= 0.0)) throw InvalidInputError("truncation level must be nonnegative");
  if (t < 0.5) {
    // 2 phi(0) sum_n (-1/2)^n t^{2n+3} / (n! (2n+3))
    const double t2 = t * t;
    double power = t2 * t;  // t^{2n+3} (-1/2)^n / n!
    double total = 0.0;
    for (int n = 0; n < 60; ++n) {
      const double term = power / (2.0 * n + 3.0);
      total += term;
      if (std::abs(term) <= 1e-17 * std::abs(total)) break;
      power *= -0.5 * t2 / (n + 1.0);
    }
    return 2.0 * total / std::sqrt(2.0 * std::numbers::pi);
  }
  return std::erf(t / std::numbers::sqrt2) - 2.0 * t * normal_pdf(t);
}

double normal_tail_second_moment(double u) {
  if (!(u >= 0.0)) throw InvalidInputError("tail level must be nonnegative");
  return 2.0 * (u * normal_pdf(u) + normal_sf(u));
}

BadMassExpectations bad_mass_expectations(double beta, double V, double B, double alpha) {
  if (!(beta > 0.0) || !(V > 0.0) || !(B >= 0.0)) {
    throw InvalidInputError("bad_mass_expectations needs beta > 0, V > 0, B >= 0");
  }
  if (!(alpha > 0.0)) alpha = 1.0 / (beta * beta);
  BadMassExpectations out;
  out.tau_w = tau_w_threshold(B, V);
  out.t = out.tau_w / std::sqrt(beta);
  out.u = V / std::sqrt(alpha);
  const double inside = std::erf(out.t / std::numbers::sqrt2);  // P(|Z| <= t)
  out.E_Mw = beta * normal_truncated_second_moment(out.t) + alpha * inside;
  out.E_Mv = beta * 2.0 * normal_sf(out.u) + alpha * normal_tail_second_moment(out.u);
  out.M_w = 2.0 * out.E_Mw;
  out.M_v = 2.0 * out.E_Mv;
  return out;
}

RegimeConstants compute_constants(const RegimeInputs& inp) {
  validate(inp);
  const SystemSpec& sys = inp.sys;
  RegimeConstants k;

  const SafeSetBounds bounds = safe_set_bounds(sys, inp.delta_bar());
  k.K_max = bounds.k_max;
  k.phi_max = bounds.phi_max;
  k.P_max = bounds.p_max;
  k.d0 = bounds.d0;
  k.G_max = bounds.g_max;

  const RiccatiSolution opt = riccati_solve(sys);
  k.P_star = opt.p_star;
  k.K_star = opt.k_star;
  k.J_star = sys.sigma_rho_sq * opt.p_star;
  k.Delta_max = sys.sigma_rho_sq * k.P_max - k.J_star;

  k.L_mu = *inp.L_mu;
  k.alpha_mu = *inp.alpha_mu;
  const double curvature = (sys.r + sys.gamma * sys.b * sys.b * opt.p_star) * (sys.sigma_rho_sq / 2.0);
  k.C_grad = inp.C_grad ? *inp.C_grad : k.L_mu * k.L_mu / curvature;
  k.eta = inp.eta();

  const double sqrt_beta = std::sqrt(inp.beta);
  const double window = normal_cdf(inp.S) - normal_cdf(inp.s);
  k.tau = inp.s * sqrt_beta;
  k.W = inp.S * sqrt_beta;
  k.l_sS = inp.s * inp.s * window / 4.0;
  k.c = (1.0 - inp.eps) * window * (2.0 * normal_cdf(inp.V * inp.beta) - 1.0);
  k.lambda_star = k.c * k.tau * k.tau / 4.0;
  k.rho_m = 1.0 - k.eta * k.lambda_star * k.alpha_mu;
  k.B = 2.0 * std::sqrt(k.C_grad * k.Delta_max) / (k.lambda_star * k.alpha_mu);
  k.R_c = std::sqrt(k.W * k.W + inp.V * inp.V);
  k.R_star_sq = (1.0 + inp.eps) * (inp.alpha() + inp.beta);
  k.G_star = std::exp(2.0 * k.B) * k.R_star_sq;

  const double growth = std::exp(k.B) * k.B;
  if (growth < 1.0) {
    const BadMassExpectations bad = bad_mass_expectations(inp.beta, inp.V, k.B, inp.alpha());
    k.tau_w = bad.tau_w;
    k.M_w = bad.M_w;
    k.M_v = bad.M_v;
  } else {
    k.tau_w = kNaN;
    k.M_w = kNaN;
    k.M_v = kNaN;
  }
  k.Xi_star = std::exp(2.0 * k.B) * (k.M_w + k.M_v);
  k.L_star = 1.5 * k.G_star + 2.0 * std::numbers::sqrt2 * k.Xi_star;
  k.C_star = 0.5 * k.G_star * k.G_max + (k.L_mu / 2.0) * k.L_star * k.L_star;

  k.controller_regime_lhs = 3.0 * std::abs(sys.b) * (1.0 + inp.eps) * k.L_mu *
                            std::sqrt(k.Delta_max) /
                            ((1.0 - inp.eps) * k.l_sS * k.alpha_mu * std::sqrt(curvature));

  RegimeVerdicts& v = k.verdicts;
  v.step_vs_gmax = k.eta * k.G_max <= 1.0;
  v.step_vs_curvature = k.eta * k.lambda_star * k.alpha_mu <= 1.0;
  v.growth_budget = growth < 1.0;
  v.backbone_radius = growth * k.R_c <= k.tau / 2.0;
  v.crossing_mass = 2.0 * std::numbers::sqrt2 * k.Xi_star <= k.lambda_star / 4.0;
  v.second_order = k.eta * k.C_star <= k.lambda_star / 4.0;
  v.drift = std::abs(sys.b) * k.L_star * k.B <= inp.delta / 2.0;
  v.controller_regime = k.controller_regime_lhs < inp.delta / 2.0;

  k.m0 = min_width(inp, k);
  return k;
}

std::optional<std::size_t> min_width(const RegimeInputs& inp, const RegimeConstants& k) {
  const double terms[] = {k.G_max, k.lambda_star * k.alpha_mu, 4.0 * k.C_star / k.lambda_star};
  for (double t : terms) {
    if (!std::isfinite(t)) return std::nullopt;
  }
  const double arg = inp.iota * std::max({terms[0], terms[1], terms[2]});
  if (!(arg <= 1e18)) return std::nullopt;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(arg)));
}

GridEstimate estimate_L_mu(const SystemSpec& sys, double delta_bar, std::size_t grid_n,
                           std::size_t workers) {
  const GridData data = evaluate_grid(sys, delta_bar, grid_n, workers, true);
  const std::size_t n = data.points.size();
  std::vector<double> best(n, 0.0);
  std::vector<std::size_t> partner(n, 0);
  parallel_for(n, workers, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dist = (data.points[i] - data.points[j]).norm();
      if (dist == 0.0) continue;
      const double ratio = (data.grads[i] - data.grads[j]).norm() / dist;
      if (ratio > best[i]) {
        best[i] = ratio;
        partner[i] = j;
      }
    }
  });
  const auto it = std::max_element(best.begin(), best.end());
  const auto idx = static_cast<std::size_t>(it - best.begin());
  return {*it, grid_n, data.spacing, data.points[idx]};
}

GridEstimate estimate_alpha_mu(const SystemSpec& sys, double delta_bar, std::size_t grid_n,
                               std::size_t workers) {
  const GridData data = evaluate_grid(sys, delta_bar, grid_n, workers, false);
  const RiccatiSolution opt = riccati_solve(sys);
  const double j_star = sys.sigma_rho_sq * opt.p_star;
  GridEstimate out{std::numeric_limits<double>::infinity(), grid_n, data.spacing, {}};
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    if ((data.points[i] - opt.gains()).norm() < 1e-6) continue;
    const double gap = data.costs[i] - j_star;
    if (!(gap > 0.0)) continue;
    const double g = data.grads[i].norm();
    const double ratio = 0.5 * g * g / gap;
    if (ratio < out.value) {
      out.value = ratio;
      out.where = data.points[i];
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> ledger_entries(const RegimeConstants& k) {
  return {{"K_max", k.K_max},
          {"phi_max", k.phi_max},
          {"P_max", k.P_max},
          {"d0", k.d0},
          {"G_max", k.G_max},
          {"P_star", k.P_star},
          {"K_star", k.K_star},
          {"J_star", k.J_star},
          {"Delta_max", k.Delta_max},
          {"L_mu", k.L_mu},
          {"alpha_mu", k.alpha_mu},
          {"C_grad", k.C_grad},
          {"eta", k.eta},
          {"tau", k.tau},
          {"W", k.W},
          {"l_sS", k.l_sS},
          {"c", k.c},
          {"lambda_star", k.lambda_star},
          {"rho_m", k.rho_m},
          {"B", k.B},
          {"tau_w", k.tau_w},
          {"R_c", k.R_c},
          {"R_star_sq", k.R_star_sq},
          {"G_star", k.G_star},
          {"M_w", k.M_w},
          {"M_v", k.M_v},
          {"Xi_star", k.Xi_star},
          {"L_star", k.L_star},
          {"C_star", k.C_star},
          {"controller_regime_lhs", k.controller_regime_lhs}};
}

std::vector<std::pair<std::string, bool>> verdict_entries(const RegimeVerdicts& v) {
  return {{"eta_G_max_le_1", v.step_vs_gmax},
          {"eta_lambda_alpha_le_1", v.step_vs_curvature},
          {"eB_B_lt_1", v.growth_budget},
          {"eB_B_Rc_le_tau_half", v.backbone_radius},
          {"crossing_mass_le_lambda_quarter", v.crossing_mass},
          {"eta_C_le_lambda_quarter", v.second_order},
          {"b_L_B_le_delta_half", v.drift},
          {"controller_regime", v.controller_regime},
          {"benign", v.benign()}};
}

std::string ledger_text(const RegimeInputs& inp, const RegimeConstants& k) {
  std::ostringstream out;
  out << "# verdicts are conditional on the supplied L_mu and alpha_mu\n";
  out << "input.delta = " << format_number(inp.delta) << '\n';
  out << "input.s = " << format_number(inp.s) << '\n';
  out << "input.S = " << format_number(inp.S) << '\n';
  out << "input.V = " << format_number(inp.V) << '\n';
  out << "input.eps = " << format_number(inp.eps) << '\n';
  out << "input.beta = " << format_number(inp.beta) << '\n';
  out << "input.m = " << inp.m << '\n';
  out << "input.iota = " << format_number(inp.iota) << '\n';
  out << "input.step_rule = " << to_string(inp.step_rule) << '\n';
  for (const auto& [name, value] : ledger_entries(k)) {
    out << name << " = " << format_number(value) << '\n';
  }
  for (const auto& [name, ok] : verdict_entries(k.verdicts)) {
    out << "verdict." << name << " = " << (ok ? "true" : "false") << '\n';
  }
  out << "m0 = " << (k.m0 ? std::to_string(*k.m0) : std::string("undefined")) << '\n';
  return out.str();
}

std::string ledger_json(const RegimeInputs& inp, const RegimeConstants& k) {
  nlohmann::ordered_json j;
  j["conditional_on_supplied_constants"] = true;
  j["inputs"] = {{"delta", inp.delta}, {"s", inp.s},       {"S", inp.S},
                 {"V", inp.V},         {"eps", inp.eps},   {"beta", inp.beta},
                 {"m", inp.m},         {"iota", inp.iota}, {"step_rule", to_string(inp.step_rule)}};
  for (const auto& [name, value] : ledger_entries(k)) {
    j["constants"][name] = std::isfinite(value) ? nlohmann::ordered_json(value) : nullptr;
  }
  for (const auto& [name, ok] : verdict_entries(k.verdicts)) j["verdicts"][name] = ok;
  j["m0"] = k.m0 ? nlohmann::ordered_json(*k.m0) : nullptr;
  return j.dump(2);
}

std::vector<BetaSweepRow> beta_sweep(const RegimeInputs& inp, const std::vector<double>& betas) {
  std::vector<BetaSweepRow> rows;
  rows.reserve(betas.size());
  for (double beta : betas) {
    RegimeInputs at = inp;
    at.beta = beta;
    rows.push_back({beta, compute_constants(at)});
  }
  return rows;
}

}  // namespace relu_lqr
