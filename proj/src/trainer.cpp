#include "relu_lqr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "relu_lqr/errors.hpp"

namespace relu_lqr {

void validate(const TrainConfig& cfg, std::size_t width) {
  validate(cfg.sys);
  if (!(cfg.iota >= 0.0) || !std::isfinite(cfg.iota)) {
    throw InvalidInputError("iota must be finite and nonnegative");
  }
  if (cfg.max_iters == 0) throw InvalidInputError("max_iters must be at least 1");
  if (cfg.record_every == 0) throw InvalidInputError("record_every must be at least 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidInputError("delta must lie in (0,1)");
  for (std::size_t j : cfg.track_neurons) {
    if (j >= width) throw InvalidInputError("tracked neuron index out of range");
  }
}

TrainHistory train(const TrainConfig& cfg) {
  ThetaNetwork theta = cfg.theta0 ? *cfg.theta0 : init_network(cfg.init);
  const std::size_t m = theta.width();
  if (m == 0 || theta.v.size() != m) throw InvalidInputError("malformed initial network");
  validate(cfg, m);

  TrainHistory hist;
  hist.eta = cfg.eta(m);
  hist.riccati = riccati_solve(cfg.sys);
  hist.J_star = optimal_cost(cfg.sys, hist.riccati);
  hist.theta_initial = theta;
  const double delta_bar = cfg.delta / 2.0;
  const double eta = hist.eta;

  if (!in_margin_set(cfg.sys, effective_gains(theta), delta_bar)) {
    throw InvalidInputError("initial controller is outside the safe set");
  }

  RadialTracker radial(theta);
  StepInvariants& inv = hist.invariants;
  double cum_grad = 0.0;

  for (std::size_t k = 0;; ++k) {
    const PiecewiseGains mu = effective_gains(theta);
    if (!is_spectrally_stable(cfg.sys, mu)) {
      throw UnstableIterateError("iterate " + std::to_string(k) + " left the stability region",
                                 k - 1);
    }
    const double J = cost(cfg.sys, mu);
    const Vec2 g = grad_mu(cfg.sys, mu);
    cum_grad += eta * g.norm();

    HistoryRow row;
    row.k = k;
    row.K1 = mu.k1;
    row.K2 = mu.k2;
    row.J = J;
    row.gap = J - hist.J_star;
    row.grad_norm = g.norm();
    row.cum_grad = cum_grad;
    row.safe = in_margin_set(cfg.sys, mu, delta_bar);

    const bool reached = cfg.gap_tol && row.gap <= *cfg.gap_tol;
    const bool done = reached || k == cfg.max_iters;
    if (done) hist.stop_reason = reached ? "gap_tol" : "max_iters";

    std::optional<StepResult> step;
    if (!done) {
      step = pg_step(theta, eta, g);
      const StepDiagnostics& d = step->diag;
      row.xi = d.xi;
      row.crossings = d.crossings();
      row.g1_mass = d.g1_mass;
      row.g2_mass = d.g2_mass;

      const double scale = std::max({1.0, std::abs(mu.k1), std::abs(mu.k2)});
      const double resid = decomposition_residual(d, eta, g) / scale;
      inv.max_decomposition_residual = std::max(inv.max_decomposition_residual, resid);
      if (std::abs(mu.k1) > 0.5 * d.g1_mass * (1.0 + 1e-12) ||
          std::abs(mu.k2) > 0.5 * d.g2_mass * (1.0 + 1e-12)) {
        ++inv.gain_mass_violations;
      }
      bool bound_failed = false;
      if (d.crossings() > 0) {
        ++inv.crossing_steps;
        const double bound = crossing_error_bound(d, eta, g);
        const double ratio = d.e.norm() / bound;
        inv.max_crossing_ratio = std::max(inv.max_crossing_ratio, ratio);
        if (d.e.norm() > bound * (1.0 + 1e-12) + 1e-15) {
          ++inv.crossing_bound_violations;
          bound_failed = eta * g.norm() <= 1.0;
        }
        if (eta * g.norm() > 1.0) ++inv.small_step_violations;
      }
      if (cfg.assert_invariants && (resid > 1e-12 || bound_failed)) {
        throw Error("step invariant violated at iteration " + std::to_string(k));
      }
    } else {
      const Masses ms = masses(theta);
      row.g1_mass = ms.g1;
      row.g2_mass = ms.g2;
    }

    if (k % cfg.record_every == 0 || done) {
      hist.rows.push_back(row);
      for (std::size_t j : cfg.track_neurons) {
        hist.neurons.push_back({k, j, theta.w[j], theta.v[j]});
      }
    }
    if (done) {
      hist.iterations = k;
      break;
    }
    theta = std::move(step->theta);
    radial.observe(k + 1, theta);
  }

  hist.radial_growth = radial.max_growth();
  hist.crossing_events = radial.crossings();
  hist.theta_final = std::move(theta);
  return hist;
}

RateFit rate_fit(const std::vector<HistoryRow>& rows, std::size_t k_lo, std::size_t k_hi) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const HistoryRow& row : rows) {
    if (row.k < k_lo || row.k > k_hi) continue;
    if (!(row.gap > 0.0)) throw DegenerateWindowError("nonpositive gap inside the fit window");
    xs.push_back(static_cast<double>(row.k));
    ys.push_back(std::log(row.gap));
  }
  if (xs.size() < 3) throw DegenerateWindowError("fit window needs at least three rows");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateWindowError("fit window has a single k");
  const double slope = sxy / sxx;
  RateFit fit;
  fit.rho_hat = std::exp(slope);
  fit.log_intercept = my - slope * mx;
  fit.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  fit.points = xs.size();
  return fit;
}

std::vector<GainErrorRow> gain_error(const SystemSpec& sys, const std::vector<HistoryRow>& rows,
                                     const RiccatiSolution& riccati, double rho) {
  if (rows.empty()) throw InvalidInputError("gain_error needs a nonempty history");
  const double curvature = gap_curvature(sys, riccati);
  const double delta0 = rows.front().gap;
  std::vector<GainErrorRow> out;
  out.reserve(rows.size());
  for (const HistoryRow& row : rows) {
    GainErrorRow e;
    e.k = row.k;
    e.error = std::hypot(row.K1 - riccati.k_star, row.K2 - riccati.k_star);
    e.gap_envelope = std::sqrt(std::max(row.gap, 0.0) / curvature);
    e.rate_envelope = rho > 0.0 ? std::sqrt(delta0 * std::pow(rho, static_cast<double>(row.k)) /
                                            curvature)
                                : std::numeric_limits<double>::quiet_NaN();
    out.push_back(e);
  }
  return out;
}

}  // namespace relu_lqr
