#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "qadapt/quantizer.hpp"

namespace qadapt {

namespace detail {
inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(what);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Losses due to quantization, in dB.

/// L_q = -10 log10(I_q / I_c).
inline double loss_constant(double iq, double ic) {
  detail::require_positive(iq, "loss: I_q must be positive and finite");
  detail::require_positive(ic, "loss: I_c must be positive and finite");
  return -10.0 * std::log10(iq / ic);
}

/// Wiener process, small sigma_w: L_q / 2.
inline double loss_wiener(double iq, double ic) { return loss_constant(iq, ic) / 2.0; }

/// Wiener process with drift: 2 L_q / 3.
inline double loss_drift(double iq, double ic) { return loss_constant(iq, ic) * (2.0 / 3.0); }

// ---------------------------------------------------------------------------
// Asymptotic performance of the adaptive estimator.

/// sigma_inf^2 = R / h_x^2 for arbitrary positive-side levels.
inline double sigma_inf_general(std::span<const double> eta, std::span<const double> mass,
                                std::span<const double> density_drop) {
  if (eta.size() != mass.size() || eta.size() != density_drop.size()) {
    throw std::invalid_argument("sigma_inf_general: size mismatch");
  }
  const double h = mean_field_slope(eta, density_drop);
  if (h == 0.0) throw std::domain_error("sigma_inf_general: mean-field slope is zero");
  return increment_variance(eta, mass) / (h * h);
}

/// gamma* = -1 / h_x for the 1/k schedule.
inline double optimal_gamma_constant(double slope) {
  if (!(slope < 0.0)) throw std::domain_error("optimal gamma needs a negative mean-field slope");
  return -1.0 / slope;
}

/// Drift-case MSE as a function of the gain, with optimal levels
/// (R = I_q, h_x = -I_q): u^2 / (gamma^2 I_q^2) + gamma / 2.
inline double mse_drift_tradeoff(double gamma, double u, double iq) {
  detail::require_positive(gamma, "mse_drift_tradeoff: gamma must be positive");
  detail::require_positive(iq, "mse_drift_tradeoff: I_q must be positive");
  return u * u / (gamma * gamma * iq * iq) + gamma / 2.0;
}

/// Minimizer of mse_drift_tradeoff: (4 u^2 / I_q^2)^(1/3).
inline double optimal_gamma_drift(double u, double iq) {
  detail::require_positive(iq, "optimal_gamma_drift: I_q must be positive");
  return std::cbrt(4.0 * u * u / (iq * iq));
}

/// Closed-form predictions for a design with Fisher information I
/// (I_q for quantized, I_c for continuous measurements).
struct PerformancePrediction {
  double fisher;

  double sigma_inf_sq() const { return 1.0 / fisher; }
  double var_constant(std::size_t k) const { return 1.0 / (static_cast<double>(k) * fisher); }
  double mse_wiener(double sigma_w) const { return sigma_w / std::sqrt(fisher); }
  double mse_drift(double u) const { return 3.0 * std::pow(std::abs(u) / (4.0 * fisher), 2.0 / 3.0); }
};

// ---------------------------------------------------------------------------
// Cramer-Rao bounds for continuous measurements.

inline double crb_continuous(double ic, std::size_t k) {
  detail::require_positive(ic, "crb: I_c must be positive");
  if (k == 0) throw std::invalid_argument("crb: k must be >= 1");
  return 1.0 / (static_cast<double>(k) * ic);
}

/// One step of the Bayesian information recursion for a scalar Wiener
/// process, J_k = I_c + 1/s^2 - 1/(s^4 (J_{k-1} + 1/s^2)), written in the
/// algebraically equal form I_c + p J / (J + p) with p = 1/s^2 to avoid
/// cancellation for small sigma_w.
inline double bayesian_information_step(double j_prev, double ic, double sigma_w) {
  const double p = 1.0 / (sigma_w * sigma_w);
  return ic + p * j_prev / (j_prev + p);
}

/// BCRB_1..BCRB_n from J_0 = 1/sigma_w^2.
inline std::vector<double> bcrb_sequence(double ic, double sigma_w, std::size_t n) {
  detail::require_positive(ic, "bcrb: I_c must be positive");
  detail::require_positive(sigma_w, "bcrb: sigma_w must be positive");
  std::vector<double> out;
  out.reserve(n);
  double j = 1.0 / (sigma_w * sigma_w);
  for (std::size_t k = 0; k < n; ++k) {
    j = bayesian_information_step(j, ic, sigma_w);
    out.push_back(1.0 / j);
  }
  return out;
}

struct FixedPoint {
  double value;
  std::size_t iterations;
};

/// Iterates the recursion from J_0 = 1/sigma_w^2 until J stops changing
/// (relative step below 1e-16) and returns 1/J.
inline FixedPoint bcrb_fixed_point(double ic, double sigma_w, std::size_t max_iter = 100000000) {
  detail::require_positive(ic, "bcrb: I_c must be positive");
  detail::require_positive(sigma_w, "bcrb: sigma_w must be positive");
  double j = 1.0 / (sigma_w * sigma_w);
  for (std::size_t k = 1; k <= max_iter; ++k) {
    const double next = bayesian_information_step(j, ic, sigma_w);
    if (std::abs(next - j) <= 1e-16 * next) return {1.0 / next, k};
    j = next;
  }
  throw std::runtime_error("bcrb recursion did not converge");
}

/// BCRB_inf = 2 / (I_c + sqrt(I_c^2 + 4 I_c / sigma_w^2)).
inline double bcrb_asymptotic(double ic, double sigma_w) {
  detail::require_positive(ic, "bcrb: I_c must be positive");
  detail::require_positive(sigma_w, "bcrb: sigma_w must be positive");
  return 2.0 / (ic + std::sqrt(ic * ic + 4.0 * ic / (sigma_w * sigma_w)));
}

/// Small-sigma_w approximation sigma_w / sqrt(I_c).
inline double bcrb_asymptotic_approx(double ic, double sigma_w) {
  detail::require_positive(ic, "bcrb: I_c must be positive");
  return sigma_w / std::sqrt(ic);
}

/// Drift-case MSE of the continuous-measurement adaptive estimator:
/// 3 (u / (4 I_c))^(2/3).
inline double mse_drift_continuous(double u, double ic) {
  return PerformancePrediction{ic}.mse_drift(u);
}

struct BoundSet {
  double ic;
  double sigma_w;

  double crb(std::size_t k) const { return crb_continuous(ic, k); }
  double bcrb_inf() const { return bcrb_asymptotic(ic, sigma_w); }
  double bcrb_inf_approx() const { return bcrb_asymptotic_approx(ic, sigma_w); }
  std::vector<double> bcrb(std::size_t n) const { return bcrb_sequence(ic, sigma_w, n); }
};

// ---------------------------------------------------------------------------
// Mean-field ODE and stability diagnostics.

/// RK4 solution of d x_hat / dt = gamma h(x_hat - x), gamma = 1 / I_q, from
/// t = 0 to t_end with equal steps no longer than `max_dt`.
inline double ode_integrate(const QuantizerDesign& design, double x0_hat, double x, double t_end,
                            double max_dt = 0.01) {
  if (!(t_end >= 0.0) || !(max_dt > 0.0)) throw std::invalid_argument("ode_integrate: bad time span");
  const double gamma = 1.0 / design.fisher();
  auto rhs = [&](double xh) { return gamma * design.mean_field(xh - x); };
  const auto n = static_cast<std::size_t>(std::ceil(t_end / max_dt));
  if (n == 0) return x0_hat;
  const double h = t_end / static_cast<double>(n);
  double xh = x0_hat;
  for (std::size_t s = 0; s < n; ++s) {
    const double k1 = rhs(xh);
    const double k2 = rhs(xh + 0.5 * h * k1);
    const double k3 = rhs(xh + 0.5 * h * k2);
    const double k4 = rhs(xh + h * k3);
    xh += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return xh;
}

/// t_k = sum_{j<=k} 1/j.
inline double harmonic_time(std::size_t k) {
  double t = 0.0;
  for (std::size_t j = k; j >= 1; --j) t += 1.0 / static_cast<double>(j);
  return t;
}

struct OdeTrajectory {
  std::vector<double> t;      // t_k = sum_{j<=k} 1/j, t_0 = 0
  std::vector<double> x_hat;  // x_hat(t_k)
};

/// Integrates d x_hat / dt = gamma h(x_hat - x) with gamma = 1 / I_q,
/// sampling at t_0..t_horizon. Each interval [t_{k-1}, t_k] is split into
/// RK4 sub-steps no longer than `max_dt`, and further when the drift
/// gamma |h| dt would exceed a tenth of the quantizer step.
inline OdeTrajectory ode_mean_trajectory(const QuantizerDesign& design, double x0_hat, double x,
                                         std::size_t horizon, double max_dt = 0.01) {
  const double gamma = 1.0 / design.fisher();
  const double scale = design.step();
  auto rhs = [&](double xh) { return gamma * design.mean_field(xh - x); };

  OdeTrajectory out;
  out.t.reserve(horizon + 1);
  out.x_hat.reserve(horizon + 1);
  double t = 0.0;
  double xh = x0_hat;
  out.t.push_back(t);
  out.x_hat.push_back(xh);
  for (std::size_t k = 1; k <= horizon; ++k) {
    const double dt_total = 1.0 / static_cast<double>(k);
    const double speed = std::abs(rhs(xh));
    const double by_time = std::ceil(dt_total / max_dt);
    const double by_motion = std::ceil(speed * dt_total / (0.1 * scale));
    const auto n_sub = static_cast<std::size_t>(std::max({1.0, by_time, by_motion}));
    const double h = dt_total / static_cast<double>(n_sub);
    for (std::size_t s = 0; s < n_sub; ++s) {
      const double k1 = rhs(xh);
      const double k2 = rhs(xh + 0.5 * h * k1);
      const double k3 = rhs(xh + 0.5 * h * k2);
      const double k4 = rhs(xh + h * k3);
      xh += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t += dt_total;
    out.t.push_back(t);
    out.x_hat.push_back(xh);
  }
  return out;
}

struct StabilityRow {
  double eps;
  double h;
  double lyapunov_rate;  // d(eps^2)/dt = 2 eps gamma h(eps)
};

struct StabilityReport {
  bool passed = true;
  double h_at_zero = 0.0;
  std::vector<StabilityRow> rows;
  std::vector<double> violations;  // eps values breaking the sign conditions
};

/// Checks h(0) = 0 and eps h(eps) < 0 (equivalently a negative Lyapunov
/// derivative for L = eps^2) on the given grid. gamma = 1 / I_q.
inline StabilityReport check_stability(const QuantizerDesign& design, std::span<const double> eps_grid) {
  const double gamma = 1.0 / design.fisher();
  StabilityReport report;
  report.h_at_zero = design.mean_field(0.0);
  if (report.h_at_zero != 0.0) report.passed = false;
  report.rows.reserve(eps_grid.size());
  for (double eps : eps_grid) {
    const double h = design.mean_field(eps);
    const double rate = 2.0 * eps * gamma * h;
    report.rows.push_back({eps, h, rate});
    const bool ok = eps == 0.0 ? h == 0.0 : rate < 0.0;
    if (!ok) {
      report.passed = false;
      report.violations.push_back(eps);
    }
  }
  return report;
}

/// Symmetric grid of 2n+1 points on [-span, span], including 0.
inline std::vector<double> symmetric_grid(double span, std::size_t n) {
  std::vector<double> g;
  g.reserve(2 * n + 1);
  for (std::size_t i = 0; i <= 2 * n; ++i) {
    const double u = (static_cast<double>(i) - static_cast<double>(n)) / static_cast<double>(n);
    g.push_back(u * span);
  }
  return g;
}

}  // namespace qadapt
