#pragma once

#include <array>

#include "relu_lqr/system.hpp"

namespace relu_lqr {

/// Closed-loop coefficients a_i = a + b K_i on each half-line.
struct ClosedLoop {
  double a1 = 0.0;
  double a2 = 0.0;
};

ClosedLoop closed_loop(const SystemSpec& sys, PiecewiseGains mu);

/// Membership in the margin set: |a + b K_i| <= 1 - delta for both gains.
bool in_margin_set(const SystemSpec& sys, PiecewiseGains mu, double delta);

/// Sharp condition under which the value function exists:
/// gamma * max(a1^2, a2^2) < 1.
bool is_spectrally_stable(const SystemSpec& sys, PiecewiseGains mu);

/// Piecewise value coefficients, J(x) = p1 x^2 on x >= 0 and p2 x^2 on x < 0.
struct ValueCoeffs {
  double p1 = 0.0;
  double p2 = 0.0;
  Region region = Region::PP;
};

/// Solves (I - gamma A(mu)) P = f(mu), where row i of A has the single
/// entry a_i^2 in the column of the half-line that a_i x lands on.
/// Throws UnstableError when the spectral condition fails.
ValueCoeffs value_coeffs(const SystemSpec& sys, PiecewiseGains mu);

/// Same coefficients from the four per-region closed forms. Kept as an
/// independent route to `value_coeffs`.
ValueCoeffs value_coeffs_closed_form(const SystemSpec& sys, PiecewiseGains mu);

/// The 2x2 system behind `value_coeffs`, exposed for residual checks.
struct ValueSystem {
  std::array<std::array<double, 2>, 2> transition{};  // A(mu)
  std::array<double, 2> stage_cost{};                 // f(mu)
};

ValueSystem value_system(const SystemSpec& sys, PiecewiseGains mu);

/// Cost-to-go J(x) under the coefficients.
inline double value_at(const ValueCoeffs& p, double x) {
  return x >= 0.0 ? p.p1 * x * x : p.p2 * x * x;
}

/// Expected cost (sigma^2 / 2)(P1 + P2). Throws UnstableError.
double cost(const SystemSpec& sys, PiecewiseGains mu);
double cost(const SystemSpec& sys, const ValueCoeffs& p);

/// Exact gradient of `cost` with respect to (K1, K2).
///
/// Inside a region, dP/dK_i = (I - gamma A)^{-1}(df/dK_i + gamma dA/dK_i P),
/// where df/dK_i has the single entry 2 r K_i and dA/dK_i the single entry
/// 2 a_i b. At a_i = 0 the a_i >= 0 branch is used; both one-sided limits
/// agree there because d(a_i^2)/dK_i vanishes.
///
/// `boundary_margin` > 0 rejects points with |a_i| < boundary_margin with
/// KinkTooCloseError, which finite-difference callers use to stay away from
/// the region switch.
Vec2 grad_mu(const SystemSpec& sys, PiecewiseGains mu, double boundary_margin = 0.0);

/// Q(x, u) = q x^2 + r u^2 + gamma P1 (ax+bu)_+^2 + gamma P2 (ax+bu)_-^2.
double q_value(const SystemSpec& sys, PiecewiseGains mu, double x, double u);
double q_value(const SystemSpec& sys, const ValueCoeffs& p, double x, double u);

/// Greedy improvement of mu: for each half-line, the gain minimizing Q(x, .).
PiecewiseGains greedy_policy(const SystemSpec& sys, PiecewiseGains mu);

/// Half-line second moments of the normalized discounted occupancy measure.
struct OccupancyMoments {
  double c1 = 0.0;  // E_eta[x^2 1{x >= 0}]
  double c2 = 0.0;  // E_eta[x^2 1{x < 0}]
};

/// c = (1 - gamma)(I - gamma A(mu)^T)^{-1} m0, where m0 holds the initial
/// half-line second moments. By default m0 = (sigma^2/2, sigma^2/2).
OccupancyMoments occupancy_moments(const SystemSpec& sys, PiecewiseGains mu);
OccupancyMoments occupancy_moments(const SystemSpec& sys, PiecewiseGains mu,
                                   std::array<double, 2> initial_split);

/// Weighted Bellman objective: E_eta[Q_mu(x, mu'(x))] with eta the
/// occupancy measure of mu.
double weighted_bellman(const SystemSpec& sys, PiecewiseGains mu, PiecewiseGains mu_prime);

/// Diagonal Hessian of `weighted_bellman` in (K1', K2') on the region
/// containing mu_prime.
Vec2 weighted_bellman_hessian(const SystemSpec& sys, PiecewiseGains mu,
                              PiecewiseGains mu_prime);

/// Optimal linear gain and value coefficient of the discounted Riccati
/// equation.
struct RiccatiSolution {
  double k_star = 0.0;
  double p_star = 0.0;

  PiecewiseGains gains() const { return PiecewiseGains::linear(k_star); }
};

/// Solves gamma b^2 P^2 + (r - gamma q b^2 - gamma a^2 r) P - q r = 0 for its
/// unique positive root and sets K* = -gamma a b P* / (r + gamma b^2 P*).
RiccatiSolution riccati_solve(const SystemSpec& sys);

/// Relative residuals of the two fixed-point identities.
struct RiccatiResiduals {
  double gain = 0.0;   // K* against -gamma a b P*/(r + gamma b^2 P*)
  double value = 0.0;  // P* against q + r K*^2 + gamma P* (a + b K*)^2
};

RiccatiResiduals riccati_residuals(const SystemSpec& sys, const RiccatiSolution& sol);

/// Optimal cost sigma^2 P*.
double optimal_cost(const SystemSpec& sys, const RiccatiSolution& sol);

/// Coefficient (r + gamma b^2 P*)(sigma^2/2) of the quadratic gap lower bound
/// cost(mu) - cost(mu*) >= coeff * |mu - mu*|^2.
double gap_curvature(const SystemSpec& sys, const RiccatiSolution& sol);

/// Uniform bounds over the safe set with margin delta_bar.
struct SafeSetBounds {
  double delta_bar = 0.0;
  double k_max = 0.0;    // (|a| + 1 - delta_bar) / |b|
  double phi_max = 0.0;  // q + r K_max^2
  double d0 = 0.0;       // 1 - gamma (1 - delta_bar)^2
  double p_max = 0.0;    // phi_max / d0
  double g_max = 0.0;    // uniform bound on |grad_mu|
};

SafeSetBounds safe_set_bounds(const SystemSpec& sys, double delta_bar);

/// Range of gains K with |a + b K| <= 1 - delta_bar, as [lo, hi].
std::array<double, 2> safe_gain_interval(const SystemSpec& sys, double delta_bar);

}  // namespace relu_lqr
