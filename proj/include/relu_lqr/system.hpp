#pragma once

#include <cmath>
#include <cstddef>
#include <string_view>

namespace relu_lqr {

/// Scalar plant x' = a x + b u with discounted cost q x^2 + r u^2.
///
/// `sigma_rho_sq` is the second moment of the initial-state distribution,
/// which is assumed balanced across the two half-lines. `delta0` is the
/// open-loop margin |a| <= 1 - delta0.
struct SystemSpec {
  double a = 0.9;
  double b = 0.1;
  double q = 2.0;
  double r = 0.01;
  double gamma = 0.98;
  double sigma_rho_sq = 1.0;
  double delta0 = 0.1;
};

/// Throws InvalidInputError unless b != 0, q, r > 0, 0 < gamma < 1,
/// sigma_rho_sq > 0, delta0 > 0 and |a| <= 1 - delta0.
void validate(const SystemSpec& sys);

/// The numerical-study base case: a=0.9, b=0.1, q=2, r=0.01, gamma=0.98,
/// standard normal initial state.
SystemSpec base_case();

/// Largest admissible open-loop margin, 1 - |a|.
inline double open_loop_margin(const SystemSpec& sys) { return 1.0 - std::abs(sys.a); }

/// Two-gain piecewise-linear feedback: u = k1 x on x >= 0, u = k2 x on x < 0.
struct PiecewiseGains {
  double k1 = 0.0;
  double k2 = 0.0;

  double operator()(double x) const { return x >= 0.0 ? k1 * x : k2 * x; }

  static PiecewiseGains linear(double k) { return {k, k}; }
};

/// Gradient or other quantity living in the (K1, K2) plane.
struct Vec2 {
  double x1 = 0.0;
  double x2 = 0.0;

  double norm() const { return std::hypot(x1, x2); }
};

inline Vec2 operator-(Vec2 u, Vec2 v) { return {u.x1 - v.x1, u.x2 - v.x2}; }
inline Vec2 operator-(PiecewiseGains u, PiecewiseGains v) { return {u.k1 - v.k1, u.k2 - v.k2}; }

/// How the step size follows from the scale iota and the width m.
/// kWidthScaled gives eta = iota / m, kConstant gives eta = iota.
enum class StepRule { kWidthScaled, kConstant };

inline double step_size(StepRule rule, double iota, std::size_t m) {
  return rule == StepRule::kWidthScaled ? iota / static_cast<double>(m) : iota;
}

std::string_view to_string(StepRule rule);

/// Sign pattern of the closed-loop coefficients (sgn a1, sgn a2), with
/// a_i >= 0 counted as nonnegative.
enum class Region { PP, NN, PN, NP };

Region region_of(double a1, double a2);
std::string_view to_string(Region region);

}  // namespace relu_lqr
