#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "relu_lqr/errors.hpp"
#include "relu_lqr/lqr.hpp"
#include "relu_lqr/network.hpp"
#include "relu_lqr/system.hpp"

/// Brute-force validators for the closed forms in lqr.hpp and network.hpp.
/// Nothing here calls value_coeffs or grad_mu except through `cost` in the
/// finite-difference routines.
namespace relu_lqr::oracle {

inline constexpr double kDivergenceLimit = 1e12;

struct RolloutConfig {
  std::size_t horizon = 0;  // 0 selects a per-sample horizon from `tol`
  double tol = 1e-10;
  std::size_t n_samples = 100000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Truncated discounted cost sum_{t<T} gamma^t (q x_t^2 + r u_t^2) along
/// x_{t+1} = a x_t + b policy(x_t). Throws DivergedError once |x_t|
/// exceeds 1e12.
template <typename Policy>
double rollout_cost(const SystemSpec& sys, Policy&& policy, double x0, std::size_t horizon) {
  if (horizon == 0) throw InvalidInputError("rollout horizon must be at least 1");
  double x = x0;
  double discount = 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < horizon; ++t) {
    if (!(std::abs(x) <= kDivergenceLimit)) throw DivergedError("rollout state exceeded 1e12");
    const double u = policy(x);
    total += discount * (sys.q * x * x + sys.r * u * u);
    x = sys.a * x + sys.b * u;
    discount *= sys.gamma;
  }
  return total;
}

/// Smallest T >= 1 with gamma^T P_max x_scale^2 (1 - delta_bar)^{2T} <= tol,
/// which bounds the truncated tail for any controller in the safe set.
std::size_t horizon_for(const SystemSpec& sys, double tol, double x_scale, double delta_bar);

/// Tail bound gamma^T P_max (1 - delta_bar)^{2T} x0^2 at horizon T.
double truncation_bound(const SystemSpec& sys, std::size_t horizon, double x0, double delta_bar);

/// Horizon for a specific controller: the same bound with the controller's
/// own contraction s = max(a1^2, a2^2) and value bound
/// max_i(q + r K_i^2) / (1 - gamma s). Throws UnstableError when gamma s >= 1.
std::size_t policy_horizon(const SystemSpec& sys, PiecewiseGains mu, double tol, double x_scale);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte-Carlo cost with x0 = sigma_rho * Z, Z standard normal. Sample i is
/// drawn from counter stream (seed, i), so the estimate is independent of
/// scheduling.
McEstimate mc_cost(const SystemSpec& sys, PiecewiseGains mu, const RolloutConfig& cfg);

struct McOccupancy {
  McEstimate c1;
  McEstimate c2;
  double m0_pos = 0.0;  // empirical E[x0^2 1{x0 >= 0}]
  double m0_neg = 0.0;  // empirical E[x0^2 1{x0 < 0}]
};

/// Monte-Carlo discounted occupancy moments (1 - gamma) sum_t gamma^t x_t^2
/// split by the sign of x_t.
McOccupancy mc_occupancy(const SystemSpec& sys, PiecewiseGains mu, const RolloutConfig& cfg);

/// Default finite-difference step for gain i: 1e-6 * max(1, |K_i|).
double default_fd_step(double gain);

/// Central differences of `cost` in (K1, K2). `h <= 0` selects the default
/// per-coordinate step. Throws KinkTooCloseError if a perturbation reaches
/// the a_i = 0 switch, UnstableError if it leaves the stability region.
Vec2 fd_grad_mu(const SystemSpec& sys, PiecewiseGains mu, double h = 0.0);

/// Central differences of cost(effective_gains(theta)) in every weight,
/// laid out like grad_theta. Throws KinkTooCloseError if any |w_j| <= h.
std::vector<double> fd_grad_theta(const SystemSpec& sys, const ThetaNetwork& theta, double h);

/// Damped fixed-point iteration P <- (1-d) P + d T(P) on the scalar Riccati
/// map T(P) = q + gamma a^2 P - (gamma a b P)^2 / (r + gamma b^2 P).
RiccatiSolution riccati_fixed_point(const SystemSpec& sys, double damping = 0.5,
                                    double tol = 1e-15, std::size_t max_iter = 1000000);

/// Golden-section minimization of a unimodal f on [lo, hi].
double golden_section_argmin(const std::function<double(double)>& f, double lo, double hi,
                             double tol = 1e-12);

}  // namespace relu_lqr::oracle
