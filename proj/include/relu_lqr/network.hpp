#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "relu_lqr/system.hpp"

namespace relu_lqr {

/// Bias-free one-hidden-layer ReLU controller u = sum_j v_j relu(w_j x).
struct ThetaNetwork {
  std::vector<double> w;
  std::vector<double> v;

  std::size_t width() const { return w.size(); }

  friend bool operator==(const ThetaNetwork&, const ThetaNetwork&) = default;
};

/// Gaussian initialization w_j ~ N(0, beta/m), v_j ~ N(0, alpha/m).
struct InitConfig {
  std::size_t m = 1000;
  double beta = 10.0;
  std::optional<double> alpha;  // defaults to beta^-2
  std::uint64_t seed = 0;

  double alpha_value() const { return alpha ? *alpha : 1.0 / (beta * beta); }
};

/// Draws neuron j from its own counter stream keyed by (seed, j); the result
/// does not depend on evaluation order. Throws InvalidInputError for m == 0
/// or nonpositive variances.
ThetaNetwork init_network(const InitConfig& cfg);

/// K1 = sum over {w_j >= 0} of v_j w_j, K2 = sum over {w_j < 0}.
PiecewiseGains effective_gains(const ThetaNetwork& theta);

/// Network output at state x.
double forward(const ThetaNetwork& theta, double x);

/// Weight gradient J_mu(theta)^T g, laid out as [dw_1..dw_m, dv_1..dv_m].
/// Neuron j uses g1 when w_j >= 0 and g2 otherwise.
std::vector<double> grad_theta(const ThetaNetwork& theta, Vec2 g);

/// Per-step bookkeeping of sign changes and the update decomposition
/// mu_new = mu_old - eta D g + eta^2 h + e, with D = diag(G1, G2) and
/// h = (K1 g1^2, K2 g2^2). Masses are measured before the step.
struct StepDiagnostics {
  std::vector<std::size_t> crossed_pos_to_neg;
  std::vector<std::size_t> crossed_neg_to_pos;
  double xi = 0.0;  // sum of pre-step v_j^2 over crossing neurons
  Vec2 e;           // gains_after - no_cross_gains
  double g1_mass = 0.0;
  double g2_mass = 0.0;
  PiecewiseGains no_cross_gains;  // post-step products summed over pre-step sign groups
  PiecewiseGains gains_before;
  PiecewiseGains gains_after;

  std::size_t crossings() const { return crossed_pos_to_neg.size() + crossed_neg_to_pos.size(); }
};

struct StepResult {
  ThetaNetwork theta;
  StepDiagnostics diag;
};

/// One policy-gradient step theta - eta * grad_theta(theta, g).
StepResult pg_step(const ThetaNetwork& theta, double eta, Vec2 g);

/// Max-norm gap between the measured new gains and the predicted
/// mu_old - eta D g + eta^2 h + e.
double decomposition_residual(const StepDiagnostics& diag, double eta, Vec2 g);

/// Crossing-error bound 2 sqrt(2) eta |g| xi.
double crossing_error_bound(const StepDiagnostics& diag, double eta, Vec2 g);

struct Masses {
  double g1 = 0.0;  // sum over {w_j >= 0} of w_j^2 + v_j^2
  double g2 = 0.0;  // sum over {w_j < 0}
  double total = 0.0;
};

Masses masses(const ThetaNetwork& theta);

/// Thresholds defining the backbone and problematic neuron sets. Every
/// threshold is in units of 1/sqrt(m).
struct BackboneThresholds {
  double tau = 0.0;    // lower |w| edge of the backbone window
  double W = 0.0;      // upper |w| edge of the backbone window
  double V = 0.0;      // cap on |v|
  double tau_w = 0.0;  // |w| at or below which a neuron is problematic
};

struct BackboneSets {
  std::vector<std::size_t> c1_idx;  // tau <= w sqrt(m) <= W, |v| sqrt(m) <= V
  std::vector<std::size_t> c2_idx;  // -W <= w sqrt(m) <= -tau, |v| sqrt(m) <= V
  std::vector<std::size_t> sw_idx;  // |w| sqrt(m) <= tau_w
  std::vector<std::size_t> sv_idx;  // |v| sqrt(m) > V
  double m_w = 0.0;                 // mass of S_w
  double m_v = 0.0;                 // mass of S_v
};

/// Throws InvalidInputError unless 0 < tau < W, V > 0 and tau_w > 0.
BackboneSets backbone_sets(const ThetaNetwork& theta0, const BackboneThresholds& th);

struct CrossingEvent {
  std::size_t step = 0;  // the neuron changed sign between step and step + 1
  std::size_t neuron = 0;
  bool pos_to_neg = false;
};

/// Streaming record of per-neuron radii r_j = sqrt(w_j^2 + v_j^2) and sign
/// flips over a trajectory, without storing the snapshots.
class RadialTracker {
 public:
  explicit RadialTracker(const ThetaNetwork& theta0);

  /// Records snapshot `step`; snapshots must arrive with consecutive steps.
  void observe(std::size_t step, const ThetaNetwork& theta);

  /// max over s of r_{j,s} / r_{j,0} for neuron j.
  const std::vector<double>& max_growth() const { return max_growth_; }
  double max_growth_overall() const;
  const std::vector<CrossingEvent>& crossings() const { return crossings_; }
  std::size_t snapshots() const { return snapshots_; }

 private:
  std::vector<double> r0_;
  std::vector<double> max_growth_;
  std::vector<bool> nonneg_;
  std::vector<CrossingEvent> crossings_;
  std::size_t last_step_ = 0;
  std::size_t snapshots_ = 1;
};

struct RadialTrace {
  std::vector<double> max_growth;
  std::vector<CrossingEvent> crossings;
};

/// Batch form of RadialTracker over consecutive snapshots. Throws
/// InvalidInputError on an empty history.
RadialTrace radial_trace(std::span<const ThetaNetwork> history);

}  // namespace relu_lqr
