#include "relu_lqr/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "relu_lqr/errors.hpp"
#include "relu_lqr/numeric.hpp"
#include "relu_lqr/random.hpp"

namespace relu_lqr {

ThetaNetwork init_network(const InitConfig& cfg) {
  if (cfg.m == 0) throw InvalidInputError("network width must be at least 1");
  const double alpha = cfg.alpha_value();
  if (!(cfg.beta > 0.0) || !(alpha > 0.0)) {
    throw InvalidInputError("initialization variances must be positive");
  }
  const double m = static_cast<double>(cfg.m);
  const double sw = std::sqrt(cfg.beta / m);
  const double sv = std::sqrt(alpha / m);
  ThetaNetwork theta;
  theta.w.resize(cfg.m);
  theta.v.resize(cfg.m);
  for (std::size_t j = 0; j < cfg.m; ++j) {
    CounterStream stream(cfg.seed, j);
    std::normal_distribution<double> normal;
    theta.w[j] = sw * normal(stream);
    theta.v[j] = sv * normal(stream);
  }
  return theta;
}

PiecewiseGains effective_gains(const ThetaNetwork& theta) {
  CompensatedSum k1;
  CompensatedSum k2;
  for (std::size_t j = 0; j < theta.width(); ++j) {
    const double prod = theta.w[j] * theta.v[j];
    if (theta.w[j] >= 0.0) {
      k1 += prod;
    } else {
      k2 += prod;
    }
  }
  return {k1.value(), k2.value()};
}

double forward(const ThetaNetwork& theta, double x) {
  CompensatedSum u;
  for (std::size_t j = 0; j < theta.width(); ++j) {
    u += theta.v[j] * std::max(theta.w[j] * x, 0.0);
  }
  return u.value();
}

std::vector<double> grad_theta(const ThetaNetwork& theta, Vec2 g) {
  const std::size_t m = theta.width();
  std::vector<double> out(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    const double gj = theta.w[j] >= 0.0 ? g.x1 : g.x2;
    out[j] = theta.v[j] * gj;
    out[m + j] = theta.w[j] * gj;
  }
  return out;
}

Masses masses(const ThetaNetwork& theta) {
  CompensatedSum g1;
  CompensatedSum g2;
  for (std::size_t j = 0; j < theta.width(); ++j) {
    const double r2 = theta.w[j] * theta.w[j] + theta.v[j] * theta.v[j];
    if (theta.w[j] >= 0.0) {
      g1 += r2;
    } else {
      g2 += r2;
    }
  }
  return {g1.value(), g2.value(), g1.value() + g2.value()};
}

StepResult pg_step(const ThetaNetwork& theta, double eta, Vec2 g) {
  const std::size_t m = theta.width();
  StepResult out;
  out.theta.w.resize(m);
  out.theta.v.resize(m);
  StepDiagnostics& d = out.diag;

  CompensatedSum k1;
  CompensatedSum k2;
  CompensatedSum tk1;
  CompensatedSum tk2;
  CompensatedSum g1;
  CompensatedSum g2;
  CompensatedSum xi;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = theta.w[j];
    const double v = theta.v[j];
    const bool was_pos = w >= 0.0;
    const double gj = was_pos ? g.x1 : g.x2;
    const double w_new = w - eta * v * gj;
    const double v_new = v - eta * w * gj;
    out.theta.w[j] = w_new;
    out.theta.v[j] = v_new;

    const double r2 = w * w + v * v;
    (was_pos ? k1 : k2) += w * v;
    (was_pos ? g1 : g2) += r2;
    (was_pos ? tk1 : tk2) += w_new * v_new;

    const bool is_pos = w_new >= 0.0;
    if (was_pos != is_pos) {
      (was_pos ? d.crossed_pos_to_neg : d.crossed_neg_to_pos).push_back(j);
      xi += v * v;
    }
  }
  d.gains_before = {k1.value(), k2.value()};
  d.g1_mass = g1.value();
  d.g2_mass = g2.value();
  d.no_cross_gains = {tk1.value(), tk2.value()};
  d.gains_after = effective_gains(out.theta);
  d.e = {d.gains_after.k1 - d.no_cross_gains.k1, d.gains_after.k2 - d.no_cross_gains.k2};
  d.xi = xi.value();
  return out;
}

double decomposition_residual(const StepDiagnostics& d, double eta, Vec2 g) {
  const double eta2 = eta * eta;
  const double pred1 = d.gains_before.k1 - eta * d.g1_mass * g.x1 +
                       eta2 * d.gains_before.k1 * g.x1 * g.x1 + d.e.x1;
  const double pred2 = d.gains_before.k2 - eta * d.g2_mass * g.x2 +
                       eta2 * d.gains_before.k2 * g.x2 * g.x2 + d.e.x2;
  return std::max(std::abs(d.gains_after.k1 - pred1), std::abs(d.gains_after.k2 - pred2));
}

double crossing_error_bound(const StepDiagnostics& d, double eta, Vec2 g) {
  return 2.0 * std::sqrt(2.0) * eta * g.norm() * d.xi;
}

BackboneSets backbone_sets(const ThetaNetwork& theta0, const BackboneThresholds& th) {
  if (!(th.tau > 0.0 && th.tau < th.W) || !(th.V > 0.0) || !(th.tau_w > 0.0)) {
    throw InvalidInputError("backbone thresholds require 0 < tau < W, V > 0, tau_w > 0");
  }
  const double scale = std::sqrt(static_cast<double>(theta0.width()));
  const double lo = th.tau / scale;
  const double hi = th.W / scale;
  const double vcap = th.V / scale;
  const double wcap = th.tau_w / scale;
  BackboneSets out;
  CompensatedSum mw;
  CompensatedSum mv;
  for (std::size_t j = 0; j < theta0.width(); ++j) {
    const double w = theta0.w[j];
    const double v = theta0.v[j];
    const bool small_v = std::abs(v) <= vcap;
    if (small_v && w >= lo && w <= hi) out.c1_idx.push_back(j);
    if (small_v && w <= -lo && w >= -hi) out.c2_idx.push_back(j);
    const double r2 = w * w + v * v;
    if (std::abs(w) <= wcap) {
      out.sw_idx.push_back(j);
      mw += r2;
    }
    if (!small_v) {
      out.sv_idx.push_back(j);
      mv += r2;
    }
  }
  out.m_w = mw.value();
  out.m_v = mv.value();
  return out;
}

RadialTracker::RadialTracker(const ThetaNetwork& theta0)
    : r0_(theta0.width()), max_growth_(theta0.width(), 1.0), nonneg_(theta0.width()) {
  for (std::size_t j = 0; j < theta0.width(); ++j) {
    r0_[j] = std::hypot(theta0.w[j], theta0.v[j]);
    nonneg_[j] = theta0.w[j] >= 0.0;
  }
}

void RadialTracker::observe(std::size_t step, const ThetaNetwork& theta) {
  if (theta.width() != r0_.size()) throw InvalidInputError("snapshot width changed");
  for (std::size_t j = 0; j < r0_.size(); ++j) {
    if (r0_[j] > 0.0) {
      max_growth_[j] = std::max(max_growth_[j], std::hypot(theta.w[j], theta.v[j]) / r0_[j]);
    }
    const bool nonneg = theta.w[j] >= 0.0;
    if (nonneg != nonneg_[j]) {
      crossings_.push_back({last_step_, j, nonneg_[j]});
      nonneg_[j] = nonneg;
    }
  }
  last_step_ = step;
  ++snapshots_;
}

double RadialTracker::max_growth_overall() const {
  return max_growth_.empty() ? 1.0 : *std::max_element(max_growth_.begin(), max_growth_.end());
}

RadialTrace radial_trace(std::span<const ThetaNetwork> history) {
  if (history.empty()) throw InvalidInputError("radial_trace needs at least one snapshot");
  RadialTracker tracker(history.front());
  for (std::size_t s = 1; s < history.size(); ++s) tracker.observe(s, history[s]);
  return {tracker.max_growth(), tracker.crossings()};
}

}  // namespace relu_lqr
