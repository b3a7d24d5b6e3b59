#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relu_lqr/lqr.hpp"
#include "relu_lqr/system.hpp"

namespace relu_lqr {

/// Inputs to the benign-width constants ledger. The initialization variance
/// of the output layer is fixed to alpha = beta^-2.
struct RegimeInputs {
  SystemSpec sys;
  double delta = 0.05;  // margin; the safe set uses delta_bar = delta / 2
  double s = 0.25;      // backbone window, 0 < s < S
  double S = 4.0;
  double V = 1.0;       // output-weight cap
  double eps = 0.2;     // concentration slack in (0, 1)
  double beta = 10.0;
  std::size_t m = 1000;
  double iota = 0.01;
  StepRule step_rule = StepRule::kWidthScaled;
  std::optional<double> L_mu;      // smoothness constant, required
  std::optional<double> alpha_mu;  // PL constant, required
  std::optional<double> C_grad;    // defaults to L_mu^2 / ((r + gamma b^2 P*) sigma^2/2)

  double alpha() const { return 1.0 / (beta * beta); }
  double delta_bar() const { return delta / 2.0; }
  double eta() const { return step_size(step_rule, iota, m); }
};

/// Throws InvalidInputError on any violated positivity or ordering
/// constraint, including delta >= delta0 and missing L_mu / alpha_mu.
void validate(const RegimeInputs& inp);

struct RegimeVerdicts {
  bool step_vs_gmax = false;        // eta G_max <= 1
  bool step_vs_curvature = false;   // eta lambda* alpha_mu <= 1
  bool growth_budget = false;       // e^B B < 1
  bool backbone_radius = false;     // e^B B R_c <= tau / 2
  bool crossing_mass = false;       // 2 sqrt(2) Xi* <= lambda* / 4
  bool second_order = false;        // eta C* <= lambda* / 4
  bool drift = false;               // |b| L* B <= delta / 2
  bool controller_regime = false;   // beta-limit of the drift condition

  /// The seven benign-width inequalities (controller_regime excluded).
  bool benign() const;
};

/// Every field is the direct evaluation of its defining expression.
/// Quantities that depend on tau_w are NaN when e^B B >= 1.
struct RegimeConstants {
  double K_max = 0.0;
  double phi_max = 0.0;
  double P_max = 0.0;
  double d0 = 0.0;
  double G_max = 0.0;
  double P_star = 0.0;
  double K_star = 0.0;
  double J_star = 0.0;
  double Delta_max = 0.0;
  double L_mu = 0.0;
  double alpha_mu = 0.0;
  double C_grad = 0.0;
  double eta = 0.0;
  double tau = 0.0;
  double W = 0.0;
  double l_sS = 0.0;
  double c = 0.0;
  double lambda_star = 0.0;
  double rho_m = 0.0;
  double B = 0.0;
  double tau_w = 0.0;
  double R_c = 0.0;
  double R_star_sq = 0.0;
  double G_star = 0.0;
  double M_w = 0.0;
  double M_v = 0.0;
  double Xi_star = 0.0;
  double L_star = 0.0;
  double C_star = 0.0;
  double controller_regime_lhs = 0.0;
  RegimeVerdicts verdicts;
  std::optional<std::size_t> m0;  // empty when the ceiling argument is not finite
};

RegimeConstants compute_constants(const RegimeInputs& inp);

/// Threshold tau_w = e^B B V / sqrt(1 - e^{2B} B^2). Throws
/// InvalidInputError unless e^B B < 1.
double tau_w_threshold(double B, double V);

/// Truncated Gaussian moments behind the bad-mass thresholds.
/// E_Mw = beta E[Z^2 1{|Z| <= t}] + alpha P(|Z| <= t) with t = tau_w / sqrt(beta),
/// E_Mv = beta P(|U| > u) + alpha E[U^2 1{|U| > u}] with u = V / sqrt(alpha).
struct BadMassExpectations {
  double tau_w = 0.0;
  double t = 0.0;
  double u = 0.0;
  double E_Mw = 0.0;
  double E_Mv = 0.0;
  double M_w = 0.0;  // 2 E_Mw
  double M_v = 0.0;  // 2 E_Mv
};

/// alpha <= 0 selects beta^-2. Throws InvalidInputError for nonpositive
/// beta or V, or when e^B B >= 1.
BadMassExpectations bad_mass_expectations(double beta, double V, double B, double alpha = 0.0);

/// E[Z^2 1{|Z| <= t}] for standard normal Z, via a power series below
/// t = 0.5 where the closed form (2 Phi(t) - 1) - 2 t phi(t) cancels.
double normal_truncated_second_moment(double t);

/// E[U^2 1{|U| > u}] = 2 (u phi(u) + 1 - Phi(u)).
double normal_tail_second_moment(double u);

/// ceil(iota max{G_max, lambda* alpha_mu, 4 C* / lambda*}), at least 1.
/// Empty when the argument is not finite.
std::optional<std::size_t> min_width(const RegimeInputs& inp, const RegimeConstants& consts);

/// Grid estimate of a constant with no closed form.
struct GridEstimate {
  double value = 0.0;
  std::size_t grid_n = 0;
  double spacing = 0.0;   // grid step in K
  PiecewiseGains where;   // grid point attaining the extremum (first of a pair for L_mu)
};

/// Largest |grad J(mu1) - grad J(mu2)| / |mu1 - mu2| over all pairs of a
/// grid_n x grid_n grid on the safe box, with mu* added as an extra point.
/// On nested grids (grid_n = 2^k + 1) the estimate is nondecreasing in k.
/// Not a certified bound. Throws InvalidInputError for grid_n < 16.
GridEstimate estimate_L_mu(const SystemSpec& sys, double delta_bar, std::size_t grid_n,
                           std::size_t workers = 1);

/// Smallest 0.5 |grad J|^2 / (J - J*) over the same grid, skipping points
/// within 1e-6 of mu*. Throws InvalidInputError for grid_n < 16.
GridEstimate estimate_alpha_mu(const SystemSpec& sys, double delta_bar, std::size_t grid_n,
                               std::size_t workers = 1);

/// C_grad = L_mu^2 / ((r + gamma b^2 P*) sigma^2 / 2).
double c_grad_from(const SystemSpec& sys, double L_mu);

/// Ordered (name, value) pairs for every ledger constant.
std::vector<std::pair<std::string, double>> ledger_entries(const RegimeConstants& consts);

/// Ordered (name, verdict) pairs.
std::vector<std::pair<std::string, bool>> verdict_entries(const RegimeVerdicts& v);

/// Flat "key = value" report, one line per constant and per verdict.
std::string ledger_text(const RegimeInputs& inp, const RegimeConstants& consts);

/// Same content as a JSON object.
std::string ledger_json(const RegimeInputs& inp, const RegimeConstants& consts);

struct BetaSweepRow {
  double beta = 0.0;
  RegimeConstants consts;
};

/// compute_constants at each beta with all other inputs fixed.
std::vector<BetaSweepRow> beta_sweep(const RegimeInputs& inp, const std::vector<double>& betas);

}  // namespace relu_lqr
