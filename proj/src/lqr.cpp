#include "relu_lqr/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "relu_lqr/errors.hpp"

namespace relu_lqr {

void validate(const SystemSpec& sys) {
  std::ostringstream why;
  if (!(sys.b != 0.0) || !std::isfinite(sys.b)) why << "b must be finite and nonzero; ";
  if (!(sys.q > 0.0)) why << "q must be positive; ";
  if (!(sys.r > 0.0)) why << "r must be positive; ";
  if (!(sys.gamma > 0.0 && sys.gamma < 1.0)) why << "gamma must lie in (0,1); ";
  if (!(sys.sigma_rho_sq > 0.0)) why << "sigma_rho_sq must be positive; ";
  if (!(sys.delta0 > 0.0)) why << "delta0 must be positive; ";
  if (!(std::abs(sys.a) <= 1.0 - sys.delta0)) why << "|a| must not exceed 1 - delta0; ";
  const std::string msg = why.str();
  if (!msg.empty()) throw InvalidInputError("invalid system: " + msg);
}

SystemSpec base_case() { return SystemSpec{}; }

Region region_of(double a1, double a2) {
  const bool pos1 = a1 >= 0.0;
  const bool pos2 = a2 >= 0.0;
  if (pos1 && pos2) return Region::PP;
  if (!pos1 && !pos2) return Region::NN;
  return pos1 ? Region::PN : Region::NP;
}

std::string_view to_string(Region region) {
  switch (region) {
    case Region::PP: return "PP";
    case Region::NN: return "NN";
    case Region::PN: return "PN";
    case Region::NP: return "NP";
  }
  return "?";
}

std::string_view to_string(StepRule rule) {
  return rule == StepRule::kWidthScaled ? "width_scaled" : "constant";
}

ClosedLoop closed_loop(const SystemSpec& sys, PiecewiseGains mu) {
  return {sys.a + sys.b * mu.k1, sys.a + sys.b * mu.k2};
}

bool in_margin_set(const SystemSpec& sys, PiecewiseGains mu, double delta) {
  const auto [a1, a2] = closed_loop(sys, mu);
  return std::abs(a1) <= 1.0 - delta && std::abs(a2) <= 1.0 - delta;
}

bool is_spectrally_stable(const SystemSpec& sys, PiecewiseGains mu) {
  const auto [a1, a2] = closed_loop(sys, mu);
  return sys.gamma * std::max(a1 * a1, a2 * a2) < 1.0;
}

namespace {

using Mat2 = std::array<std::array<double, 2>, 2>;

void require_stable(const SystemSpec& sys, PiecewiseGains mu) {
  if (!is_spectrally_stable(sys, mu)) {
    std::ostringstream msg;
    const auto [a1, a2] = closed_loop(sys, mu);
    msg << "closed loop unstable: a1=" << a1 << ", a2=" << a2 << ", gamma=" << sys.gamma;
    throw UnstableError(msg.str());
  }
}

// (I - gamma A)^{-1}; the determinant is positive under the spectral condition.
Mat2 resolvent(const SystemSpec& sys, const Mat2& transition) {
  const double m00 = 1.0 - sys.gamma * transition[0][0];
  const double m01 = -sys.gamma * transition[0][1];
  const double m10 = -sys.gamma * transition[1][0];
  const double m11 = 1.0 - sys.gamma * transition[1][1];
  const double det = m00 * m11 - m01 * m10;
  return {{{m11 / det, -m01 / det}, {-m10 / det, m00 / det}}};
}

// Value coefficient of the half-line that state a_i x lands on, for x on
// half-line i.
double successor_coeff(int side, double ai, const ValueCoeffs& p) {
  const bool stays = ai >= 0.0;
  if (side == 0) return stays ? p.p1 : p.p2;
  return stays ? p.p2 : p.p1;
}

}  // namespace

ValueSystem value_system(const SystemSpec& sys, PiecewiseGains mu) {
  const auto [a1, a2] = closed_loop(sys, mu);
  ValueSystem out;
  out.transition[0][0] = a1 >= 0.0 ? a1 * a1 : 0.0;
  out.transition[0][1] = a1 < 0.0 ? a1 * a1 : 0.0;
  out.transition[1][0] = a2 < 0.0 ? a2 * a2 : 0.0;
  out.transition[1][1] = a2 >= 0.0 ? a2 * a2 : 0.0;
  out.stage_cost = {sys.q + sys.r * mu.k1 * mu.k1, sys.q + sys.r * mu.k2 * mu.k2};
  return out;
}

ValueCoeffs value_coeffs(const SystemSpec& sys, PiecewiseGains mu) {
  require_stable(sys, mu);
  const ValueSystem vs = value_system(sys, mu);
  const Mat2 inv = resolvent(sys, vs.transition);
  const auto [a1, a2] = closed_loop(sys, mu);
  return {inv[0][0] * vs.stage_cost[0] + inv[0][1] * vs.stage_cost[1],
          inv[1][0] * vs.stage_cost[0] + inv[1][1] * vs.stage_cost[1], region_of(a1, a2)};
}

ValueCoeffs value_coeffs_closed_form(const SystemSpec& sys, PiecewiseGains mu) {
  require_stable(sys, mu);
  const auto [a1, a2] = closed_loop(sys, mu);
  const double g = sys.gamma;
  const double f1 = sys.q + sys.r * mu.k1 * mu.k1;
  const double f2 = sys.q + sys.r * mu.k2 * mu.k2;
  const double s1 = a1 * a1;
  const double s2 = a2 * a2;
  const Region region = region_of(a1, a2);
  switch (region) {
    case Region::PP:
      return {f1 / (1.0 - g * s1), f2 / (1.0 - g * s2), region};
    case Region::NN: {
      const double den = 1.0 - g * g * s1 * s2;
      return {(f1 + g * (sys.q * s1 + sys.r * mu.k2 * mu.k2 * s1)) / den,
              (f2 + g * (sys.q * s2 + sys.r * mu.k1 * mu.k1 * s2)) / den, region};
    }
    case Region::PN:
      return {f1 / (1.0 - g * s1), f2 + g * f1 * s2 / (1.0 - g * s1), region};
    case Region::NP:
      return {f1 + g * f2 * s1 / (1.0 - g * s2), f2 / (1.0 - g * s2), region};
  }
  return {};
}

double cost(const SystemSpec& sys, const ValueCoeffs& p) {
  return 0.5 * sys.sigma_rho_sq * (p.p1 + p.p2);
}

double cost(const SystemSpec& sys, PiecewiseGains mu) { return cost(sys, value_coeffs(sys, mu)); }

Vec2 grad_mu(const SystemSpec& sys, PiecewiseGains mu, double boundary_margin) {
  const auto [a1, a2] = closed_loop(sys, mu);
  if (boundary_margin > 0.0 && (std::abs(a1) < boundary_margin || std::abs(a2) < boundary_margin)) {
    throw KinkTooCloseError("closed-loop coefficient within boundary margin of the region switch");
  }
  const ValueCoeffs p = value_coeffs(sys, mu);
  const ValueSystem vs = value_system(sys, mu);
  const Mat2 inv = resolvent(sys, vs.transition);
  // Only entry i of (df/dK_i + gamma dA/dK_i P) is nonzero, so the sum of
  // dP/dK_i is that entry times column i's sum of the resolvent.
  const double src1 = 2.0 * sys.r * mu.k1 + 2.0 * sys.gamma * a1 * sys.b * successor_coeff(0, a1, p);
  const double src2 = 2.0 * sys.r * mu.k2 + 2.0 * sys.gamma * a2 * sys.b * successor_coeff(1, a2, p);
  const double half = 0.5 * sys.sigma_rho_sq;
  return {half * (inv[0][0] + inv[1][0]) * src1, half * (inv[0][1] + inv[1][1]) * src2};
}

double q_value(const SystemSpec& sys, const ValueCoeffs& p, double x, double u) {
  const double next = sys.a * x + sys.b * u;
  const double pos = std::max(next, 0.0);
  const double neg = std::min(next, 0.0);
  return sys.q * x * x + sys.r * u * u + sys.gamma * (p.p1 * pos * pos + p.p2 * neg * neg);
}

double q_value(const SystemSpec& sys, PiecewiseGains mu, double x, double u) {
  return q_value(sys, value_coeffs(sys, mu), x, u);
}

PiecewiseGains greedy_policy(const SystemSpec& sys, PiecewiseGains mu) {
  const ValueCoeffs p = value_coeffs(sys, mu);
  auto candidate = [&](double pj) {
    return -sys.gamma * sys.a * sys.b * pj / (sys.r + sys.gamma * sys.b * sys.b * pj);
  };
  const double kappa1 = candidate(p.p1);
  const double kappa2 = candidate(p.p2);
  // Q(x, .) is strongly convex, so its minimizer is whichever region candidate
  // attains the lower value at the probe state.
  auto pick = [&](double x) {
    return q_value(sys, p, x, kappa1 * x) <= q_value(sys, p, x, kappa2 * x) ? kappa1 : kappa2;
  };
  return {pick(1.0), pick(-1.0)};
}

OccupancyMoments occupancy_moments(const SystemSpec& sys, PiecewiseGains mu,
                                   std::array<double, 2> initial_split) {
  require_stable(sys, mu);
  const Mat2 inv = resolvent(sys, value_system(sys, mu).transition);
  // (I - gamma A^T)^{-1} is the transpose of the resolvent.
  const double scale = 1.0 - sys.gamma;
  return {scale * (inv[0][0] * initial_split[0] + inv[1][0] * initial_split[1]),
          scale * (inv[0][1] * initial_split[0] + inv[1][1] * initial_split[1])};
}

OccupancyMoments occupancy_moments(const SystemSpec& sys, PiecewiseGains mu) {
  const double half = 0.5 * sys.sigma_rho_sq;
  return occupancy_moments(sys, mu, {half, half});
}

namespace {

struct BellmanTerms {
  OccupancyMoments c;
  double p_sel1 = 0.0;
  double p_sel2 = 0.0;
  double next1 = 0.0;
  double next2 = 0.0;
};

BellmanTerms bellman_terms(const SystemSpec& sys, PiecewiseGains mu, PiecewiseGains mu_prime) {
  const ValueCoeffs p = value_coeffs(sys, mu);
  const auto [n1, n2] = closed_loop(sys, mu_prime);
  return {occupancy_moments(sys, mu), successor_coeff(0, n1, p), successor_coeff(1, n2, p), n1, n2};
}

}  // namespace

double weighted_bellman(const SystemSpec& sys, PiecewiseGains mu, PiecewiseGains mu_prime) {
  const BellmanTerms t = bellman_terms(sys, mu, mu_prime);
  const double k1 = mu_prime.k1;
  const double k2 = mu_prime.k2;
  return (sys.q + sys.r * k1 * k1 + sys.gamma * t.p_sel1 * t.next1 * t.next1) * t.c.c1 +
         (sys.q + sys.r * k2 * k2 + sys.gamma * t.p_sel2 * t.next2 * t.next2) * t.c.c2;
}

Vec2 weighted_bellman_hessian(const SystemSpec& sys, PiecewiseGains mu, PiecewiseGains mu_prime) {
  const BellmanTerms t = bellman_terms(sys, mu, mu_prime);
  const double b2 = sys.b * sys.b;
  return {2.0 * (sys.r + sys.gamma * t.p_sel1 * b2) * t.c.c1,
          2.0 * (sys.r + sys.gamma * t.p_sel2 * b2) * t.c.c2};
}

RiccatiSolution riccati_solve(const SystemSpec& sys) {
  const double g = sys.gamma;
  const double b2 = sys.b * sys.b;
  const double quad = g * b2;
  const double lin = sys.r - g * sys.q * b2 - g * sys.a * sys.a * sys.r;
  const double qr = sys.q * sys.r;
  const double root = std::sqrt(lin * lin + 4.0 * quad * qr);
  // Pick the cancellation-free form of the positive root.
  const double p = lin > 0.0 ? 2.0 * qr / (lin + root) : (root - lin) / (2.0 * quad);
  const double k = -g * sys.a * sys.b * p / (sys.r + g * b2 * p);
  return {k, p};
}

RiccatiResiduals riccati_residuals(const SystemSpec& sys, const RiccatiSolution& sol) {
  const double k = sol.k_star;
  const double p = sol.p_star;
  const double g = sys.gamma;
  const double gain_rhs = -g * sys.a * sys.b * p / (sys.r + g * sys.b * sys.b * p);
  const double a_cl = sys.a + sys.b * k;
  const double value_rhs = sys.q + sys.r * k * k + g * p * a_cl * a_cl;
  const double gain_scale = std::max(std::abs(k), std::abs(gain_rhs));
  RiccatiResiduals res;
  res.gain = gain_scale > 0.0 ? std::abs(k - gain_rhs) / gain_scale : 0.0;
  res.value = std::abs(p - value_rhs) / std::abs(p);
  return res;
}

double optimal_cost(const SystemSpec& sys, const RiccatiSolution& sol) {
  return sys.sigma_rho_sq * sol.p_star;
}

double gap_curvature(const SystemSpec& sys, const RiccatiSolution& sol) {
  return (sys.r + sys.gamma * sys.b * sys.b * sol.p_star) * 0.5 * sys.sigma_rho_sq;
}

SafeSetBounds safe_set_bounds(const SystemSpec& sys, double delta_bar) {
  if (!(delta_bar > 0.0 && delta_bar < 1.0)) {
    throw InvalidInputError("delta_bar must lie in (0,1)");
  }
  SafeSetBounds out;
  out.delta_bar = delta_bar;
  const double edge = 1.0 - delta_bar;
  out.k_max = (std::abs(sys.a) + edge) / std::abs(sys.b);
  out.phi_max = sys.q + sys.r * out.k_max * out.k_max;
  out.d0 = 1.0 - sys.gamma * edge * edge;
  out.p_max = out.phi_max / out.d0;
  out.g_max = 2.0 * std::sqrt(2.0) * sys.sigma_rho_sq *
              (sys.r * out.k_max + sys.gamma * std::abs(sys.b) * edge * out.p_max) / out.d0;
  return out;
}

std::array<double, 2> safe_gain_interval(const SystemSpec& sys, double delta_bar) {
  const double edge = 1.0 - delta_bar;
  const double lo = (-edge - sys.a) / sys.b;
  const double hi = (edge - sys.a) / sys.b;
  return {std::min(lo, hi), std::max(lo, hi)};
}

}  // namespace relu_lqr
