#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string_view>

#include "qadapt/noise.hpp"
#include "qadapt/quantizer.hpp"

namespace qadapt {

enum class GainKind { Constant, Wiener, WienerDrift };

inline std::string_view gain_kind_name(GainKind k) {
  switch (k) {
    case GainKind::Constant: return "constant";
    case GainKind::Wiener: return "wiener";
    case GainKind::WienerDrift: return "drift";
  }
  return "?";
}

/// Gain sequence gamma_k for the three parameter models. `fisher` is I_q for
/// the quantized estimator and I_c for the continuous reference.
struct GainSchedule {
  GainKind kind = GainKind::Constant;
  double fisher = 1.0;
  double sigma_w = 0.0;
  double drift_gain = 1e-5;   // gamma^u of the drift smoother
  double drift_floor = 1e-8;  // |U_hat| below this is clamped when forming the gain

  static GainSchedule constant(double fisher) {
    return checked({GainKind::Constant, fisher});
  }
  static GainSchedule wiener(double fisher, double sigma_w) {
    return checked({GainKind::Wiener, fisher, sigma_w});
  }
  static GainSchedule drift(double fisher, double drift_gain = 1e-5, double drift_floor = 1e-8) {
    return checked({GainKind::WienerDrift, fisher, 0.0, drift_gain, drift_floor});
  }

  /// gamma_k for step k >= 1 given the current drift estimate.
  ///   Constant:    1 / (k I)
  ///   Wiener:      sigma_w / sqrt(I)
  ///   WienerDrift: (4 max(|U_hat|, floor)^2 / I^2)^(1/3)
  double operator()(std::size_t k, double u_hat = 0.0) const {
    if (k == 0) throw std::invalid_argument("gain index k must be >= 1");
    switch (kind) {
      case GainKind::Constant:
        return 1.0 / (static_cast<double>(k) * fisher);
      case GainKind::Wiener:
        return sigma_w / std::sqrt(fisher);
      case GainKind::WienerDrift: {
        const double u = std::max(std::abs(u_hat), drift_floor);
        return std::cbrt(4.0 * u * u / (fisher * fisher));
      }
    }
    return 0.0;
  }

 private:
  static GainSchedule checked(GainSchedule s) {
    if (!(s.fisher > 0.0) || !std::isfinite(s.fisher)) {
      throw std::invalid_argument("gain schedule needs a positive finite Fisher information");
    }
    if (s.kind == GainKind::Wiener && !(s.sigma_w > 0.0)) {
      throw std::invalid_argument("Wiener gain needs sigma_w > 0");
    }
    if (s.kind == GainKind::WienerDrift && (!(s.drift_gain > 0.0) || !(s.drift_floor > 0.0))) {
      throw std::invalid_argument("drift gain and floor must be positive");
    }
    return s;
  }
};

struct EstimatorState {
  double x_hat = 0.0;
  std::size_t k = 0;
  double u_hat = 0.0;  // drift estimate, used by WienerDrift only
  GainSchedule schedule;
};

namespace detail {

inline EstimatorState advance(const EstimatorState& s, double direction,
                              double gain) {
  EstimatorState next = s;
  const double delta_x = gain * direction;
  next.x_hat = s.x_hat + delta_x;
  if (s.schedule.kind == GainKind::WienerDrift) {
    next.u_hat = s.u_hat + s.schedule.drift_gain * (delta_x - s.u_hat);
  }
  return next;
}

}  // namespace detail

/// Update from a quantizer symbol only:
///   x_hat_k = x_hat_{k-1} + gamma_k sign(i_k) eta_|i_k|,
/// followed for the drift model by
///   U_k = U_{k-1} + gamma^u [(x_hat_k - x_hat_{k-1}) - U_{k-1}].
/// k is incremented before the gain is evaluated, so the first step uses
/// gamma_1.
inline EstimatorState apply_symbol(const EstimatorState& s, int symbol,
                                   const QuantizerDesign& design) {
  if (symbol == 0 || std::abs(symbol) > design.spec().half()) {
    throw std::invalid_argument("quantizer symbol out of range");
  }
  const std::size_t k = s.k + 1;
  const double gain = s.schedule(k, s.u_hat);
  EstimatorState next = detail::advance(s, design.level(symbol), gain);
  next.k = k;
  return next;
}

/// Quantize y with the offset at the current estimate, then update.
inline EstimatorState step_quantized(const EstimatorState& s, double y,
                                     const QuantizerDesign& design) {
  if (!std::isfinite(y)) throw std::invalid_argument("observation must be finite");
  return apply_symbol(s, design.quantize(y, s.x_hat), design);
}

/// Continuous-measurement reference: x_hat += gamma^c * score(y - x_hat)
/// with the location score -f'/f. The schedule's Fisher information should
/// be I_c.
inline EstimatorState step_continuous(const EstimatorState& s, double y, const NoiseModel& noise) {
  if (!std::isfinite(y)) throw std::invalid_argument("observation must be finite");
  if (!noise.score_defined()) {
    throw std::domain_error("continuous estimator needs a differentiable density (GG beta > 1 or ST)");
  }
  const std::size_t k = s.k + 1;
  const double gain = s.schedule(k, s.u_hat);
  EstimatorState next = detail::advance(s, -noise.log_pdf_derivative(y - s.x_hat), gain);
  next.k = k;
  return next;
}

}  // namespace qadapt
