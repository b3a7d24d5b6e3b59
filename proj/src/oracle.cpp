#include "relu_lqr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "relu_lqr/numeric.hpp"
#include "relu_lqr/parallel.hpp"
#include "relu_lqr/random.hpp"

namespace relu_lqr::oracle {

namespace {

// Smallest T >= 1 with scale * rate^T <= tol, for 0 < rate < 1.
std::size_t geometric_horizon(double scale, double rate, double tol) {
  if (!(tol > 0.0)) throw InvalidInputError("truncation tolerance must be positive");
  if (scale <= tol) return 1;
  double t = std::ceil(std::log(tol / scale) / std::log(rate));
  auto horizon = static_cast<std::size_t>(std::max(1.0, t));
  while (horizon > 1 && scale * std::pow(rate, static_cast<double>(horizon - 1)) <= tol) --horizon;
  while (scale * std::pow(rate, static_cast<double>(horizon)) > tol) ++horizon;
  return horizon;
}

McEstimate summarize(const std::vector<double>& values) {
  CompensatedSum sum;
  for (double v : values) sum += v;
  const double n = static_cast<double>(values.size());
  const double mean = sum.value() / n;
  CompensatedSum sq;
  for (double v : values) sq += (v - mean) * (v - mean);
  const double var = values.size() > 1 ? sq.value() / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n), values.size()};
}

double draw_initial_state(const SystemSpec& sys, std::uint64_t seed, std::size_t i) {
  CounterStream stream(seed, i);
  std::normal_distribution<double> normal;
  return std::sqrt(sys.sigma_rho_sq) * normal(stream);
}

void check_samples(const RolloutConfig& cfg) {
  if (cfg.n_samples == 0) throw InvalidInputError("n_samples must be at least 1");
  if (!(cfg.tol > 0.0)) throw InvalidInputError("tol must be positive");
}

}  // namespace

std::size_t horizon_for(const SystemSpec& sys, double tol, double x_scale, double delta_bar) {
  const SafeSetBounds bounds = safe_set_bounds(sys, delta_bar);
  const double edge = 1.0 - delta_bar;
  return geometric_horizon(bounds.p_max * x_scale * x_scale, sys.gamma * edge * edge, tol);
}

double truncation_bound(const SystemSpec& sys, std::size_t horizon, double x0, double delta_bar) {
  const SafeSetBounds bounds = safe_set_bounds(sys, delta_bar);
  const double edge = 1.0 - delta_bar;
  return std::pow(sys.gamma * edge * edge, static_cast<double>(horizon)) * bounds.p_max * x0 * x0;
}

std::size_t policy_horizon(const SystemSpec& sys, PiecewiseGains mu, double tol, double x_scale) {
  const auto [a1, a2] = closed_loop(sys, mu);
  const double rate = sys.gamma * std::max(a1 * a1, a2 * a2);
  if (!(rate < 1.0)) throw UnstableError("policy_horizon: closed loop is not contracting");
  const double kmax = std::max(std::abs(mu.k1), std::abs(mu.k2));
  const double value_bound = (sys.q + sys.r * kmax * kmax) / (1.0 - rate);
  if (rate == 0.0) return 1;
  return geometric_horizon(value_bound * x_scale * x_scale, rate, tol);
}

McEstimate mc_cost(const SystemSpec& sys, PiecewiseGains mu, const RolloutConfig& cfg) {
  check_samples(cfg);
  std::vector<double> values(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    const double x0 = draw_initial_state(sys, cfg.seed, i);
    const std::size_t horizon =
        cfg.horizon > 0 ? cfg.horizon : policy_horizon(sys, mu, cfg.tol, std::abs(x0));
    values[i] = rollout_cost(sys, mu, x0, horizon);
  });
  return summarize(values);
}

McOccupancy mc_occupancy(const SystemSpec& sys, PiecewiseGains mu, const RolloutConfig& cfg) {
  check_samples(cfg);
  std::vector<double> pos(cfg.n_samples);
  std::vector<double> neg(cfg.n_samples);
  std::vector<double> init_pos(cfg.n_samples);
  std::vector<double> init_neg(cfg.n_samples);
  parallel_for(cfg.n_samples, cfg.workers, [&](std::size_t i) {
    const double x0 = draw_initial_state(sys, cfg.seed, i);
    const std::size_t horizon =
        cfg.horizon > 0 ? cfg.horizon : policy_horizon(sys, mu, cfg.tol, std::abs(x0));
    double x = x0;
    double discount = 1.0;
    double acc_pos = 0.0;
    double acc_neg = 0.0;
    for (std::size_t t = 0; t < horizon; ++t) {
      if (!(std::abs(x) <= kDivergenceLimit)) throw DivergedError("occupancy rollout diverged");
      (x >= 0.0 ? acc_pos : acc_neg) += discount * x * x;
      x = sys.a * x + sys.b * mu(x);
      discount *= sys.gamma;
    }
    pos[i] = (1.0 - sys.gamma) * acc_pos;
    neg[i] = (1.0 - sys.gamma) * acc_neg;
    init_pos[i] = x0 >= 0.0 ? x0 * x0 : 0.0;
    init_neg[i] = x0 < 0.0 ? x0 * x0 : 0.0;
  });
  return {summarize(pos), summarize(neg), summarize(init_pos).mean, summarize(init_neg).mean};
}

double default_fd_step(double gain) { return 1e-6 * std::max(1.0, std::abs(gain)); }

Vec2 fd_grad_mu(const SystemSpec& sys, PiecewiseGains mu, double h) {
  const double h1 = h > 0.0 ? h : default_fd_step(mu.k1);
  const double h2 = h > 0.0 ? h : default_fd_step(mu.k2);
  const auto [a1, a2] = closed_loop(sys, mu);
  if (std::abs(a1) <= std::abs(sys.b) * h1 || std::abs(a2) <= std::abs(sys.b) * h2) {
    throw KinkTooCloseError("finite-difference stencil straddles the a_i = 0 switch");
  }
  const double d1 = cost(sys, PiecewiseGains{mu.k1 + h1, mu.k2}) -
                    cost(sys, PiecewiseGains{mu.k1 - h1, mu.k2});
  const double d2 = cost(sys, PiecewiseGains{mu.k1, mu.k2 + h2}) -
                    cost(sys, PiecewiseGains{mu.k1, mu.k2 - h2});
  return {d1 / (2.0 * h1), d2 / (2.0 * h2)};
}

std::vector<double> fd_grad_theta(const SystemSpec& sys, const ThetaNetwork& theta, double h) {
  if (!(h > 0.0)) throw InvalidInputError("finite-difference step must be positive");
  const std::size_t m = theta.width();
  for (double w : theta.w) {
    if (std::abs(w) <= h) throw KinkTooCloseError("hidden weight within one step of the ReLU kink");
  }
  auto objective = [&](const ThetaNetwork& t) { return cost(sys, effective_gains(t)); };
  std::vector<double> out(2 * m);
  ThetaNetwork probe = theta;
  for (std::size_t j = 0; j < m; ++j) {
    probe.w[j] = theta.w[j] + h;
    const double up = objective(probe);
    probe.w[j] = theta.w[j] - h;
    const double down = objective(probe);
    probe.w[j] = theta.w[j];
    out[j] = (up - down) / (2.0 * h);

    probe.v[j] = theta.v[j] + h;
    const double vup = objective(probe);
    probe.v[j] = theta.v[j] - h;
    const double vdown = objective(probe);
    probe.v[j] = theta.v[j];
    out[m + j] = (vup - vdown) / (2.0 * h);
  }
  return out;
}

RiccatiSolution riccati_fixed_point(const SystemSpec& sys, double damping, double tol,
                                    std::size_t max_iter) {
  const double g = sys.gamma;
  const double gab = g * sys.a * sys.b;
  const double gb2 = g * sys.b * sys.b;
  double p = sys.q;
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double mapped = sys.q + g * sys.a * sys.a * p - gab * p * gab * p / (sys.r + gb2 * p);
    const double next = (1.0 - damping) * p + damping * mapped;
    const bool done = std::abs(next - p) <= tol * std::abs(next);
    p = next;
    if (done) break;
  }
  return {-gab * p / (sys.r + gb2 * p), p};
}

double golden_section_argmin(const std::function<double(double)>& f, double lo, double hi,
                             double tol) {
  if (!(lo < hi)) throw InvalidInputError("golden section needs lo < hi");
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace relu_lqr::oracle
