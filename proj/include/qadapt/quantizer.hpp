#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qadapt/noise.hpp"

namespace qadapt {

/// Raised when a quantizer cannot be designed for a noise model, e.g. an
/// interval whose probability mass underflows.
class DesignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Static symmetric quantizer: `n_intervals` (even) intervals with
/// normalized positive thresholds tau_1 < ... < tau_{N/2} = +inf. tau_0 = 0
/// is implicit and the negative side mirrors the positive one. The input
/// gain is 1 / (c_delta * delta).
struct QuantizerSpec {
  int n_intervals = 2;
  std::vector<double> tau{kInf};
  double c_delta = 1.0;

  int half() const { return n_intervals / 2; }

  /// Uniform thresholds tau_i = i for i < N/2, tau_{N/2} = inf.
  static QuantizerSpec uniform(int n_intervals, double c_delta = 1.0) {
    if (n_intervals < 2 || n_intervals % 2 != 0) {
      throw std::invalid_argument("number of quantization intervals must be even and >= 2");
    }
    QuantizerSpec spec;
    spec.n_intervals = n_intervals;
    spec.c_delta = c_delta;
    spec.tau.clear();
    for (int i = 1; i < n_intervals / 2; ++i) spec.tau.push_back(static_cast<double>(i));
    spec.tau.push_back(kInf);
    spec.validate();
    return spec;
  }

  static QuantizerSpec uniform_bits(int n_bits, double c_delta = 1.0) {
    if (n_bits < 1 || n_bits > 20) throw std::invalid_argument("number of bits must be in [1, 20]");
    return uniform(1 << n_bits, c_delta);
  }

  void validate() const {
    if (n_intervals < 2 || n_intervals % 2 != 0) {
      throw std::invalid_argument("number of quantization intervals must be even and >= 2");
    }
    if (static_cast<int>(tau.size()) != half()) {
      throw std::invalid_argument("threshold vector must hold N_I/2 entries");
    }
    if (!std::isinf(tau.back()) || tau.back() < 0.0) {
      throw std::invalid_argument("last threshold must be +inf");
    }
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < tau.size(); ++i) {
      if (!std::isfinite(tau[i]) || !(tau[i] > prev)) {
        throw std::invalid_argument("finite thresholds must be positive and strictly increasing");
      }
      prev = tau[i];
    }
    if (!(c_delta > 0.0) || !std::isfinite(c_delta)) {
      throw std::invalid_argument("c_delta must be positive and finite");
    }
  }
};

/// Per-interval quantities on the positive half-line with the offset at the
/// true parameter: mass[i] = F_d[i+1], density_drop[i] = f_d[i+1].
struct IntervalStats {
  std::vector<double> mass;
  std::vector<double> density_drop;
};

inline constexpr double kDegenerateMass = 1e-300;

inline IntervalStats interval_stats(const NoiseModel& noise, const QuantizerSpec& spec) {
  spec.validate();
  const double step = spec.c_delta * noise.delta();
  IntervalStats stats;
  stats.mass.reserve(spec.tau.size());
  stats.density_drop.reserve(spec.tau.size());
  double lower = 0.0;
  for (std::size_t i = 0; i < spec.tau.size(); ++i) {
    const double upper = std::isinf(spec.tau[i]) ? kInf : spec.tau[i] * step;
    const double m = noise.mass(lower, upper);
    if (!(m >= kDegenerateMass)) {
      throw DesignError("quantization interval " + std::to_string(i + 1) +
                        " has vanishing probability mass");
    }
    stats.mass.push_back(m);
    stats.density_drop.push_back(noise.pdf(lower) - noise.pdf(upper));
    lower = upper;
  }
  return stats;
}

/// eta_i = f_d[i] / F_d[i].
inline std::vector<double> optimal_levels(std::span<const double> mass,
                                          std::span<const double> density_drop) {
  if (mass.size() != density_drop.size()) throw std::invalid_argument("size mismatch");
  std::vector<double> eta(mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (!(mass[i] >= kDegenerateMass)) {
      throw DesignError("optimal level undefined: interval " + std::to_string(i + 1) +
                        " has zero mass");
    }
    eta[i] = density_drop[i] / mass[i];
  }
  return eta;
}

/// I_q = 2 sum f_d^2 / F_d.
inline double fisher_quantized(std::span<const double> mass, std::span<const double> density_drop) {
  if (mass.size() != density_drop.size()) throw std::invalid_argument("size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    if (!(mass[i] >= kDegenerateMass)) throw DesignError("zero-mass interval in Fisher information");
    sum += density_drop[i] * density_drop[i] / mass[i];
  }
  return 2.0 * sum;
}

/// R = 2 sum eta_i^2 F_d[i], variance of the normalized increments at x_hat = x.
inline double increment_variance(std::span<const double> eta, std::span<const double> mass) {
  double sum = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) sum += eta[i] * eta[i] * mass[i];
  return 2.0 * sum;
}

/// h_x = -2 sum eta_i f_d[i], slope of the mean field at x_hat = x.
inline double mean_field_slope(std::span<const double> eta, std::span<const double> density_drop) {
  double sum = 0.0;
  for (std::size_t i = 0; i < eta.size(); ++i) sum += eta[i] * density_drop[i];
  return -2.0 * sum;
}

/// A quantizer matched to a noise model: thresholds, interval statistics,
/// output levels and the resulting Fisher information. Levels are stored
/// for positive symbols only; eta_{-i} = -eta_i.
class QuantizerDesign {
 public:
  static QuantizerDesign build(const NoiseModel& noise, const QuantizerSpec& spec) {
    IntervalStats stats = interval_stats(noise, spec);
    std::vector<double> eta = optimal_levels(stats.mass, stats.density_drop);
    const double iq = fisher_quantized(stats.mass, stats.density_drop);
    return QuantizerDesign(noise, spec, std::move(stats), std::move(eta), iq);
  }

  /// Same thresholds with caller-supplied levels (for sensitivity and
  /// stability diagnostics). I_q is unchanged since it depends on the
  /// thresholds only.
  QuantizerDesign with_levels(std::vector<double> eta) const {
    if (eta.size() != eta_.size()) throw std::invalid_argument("level vector size mismatch");
    QuantizerDesign copy = *this;
    copy.eta_ = std::move(eta);
    copy.max_level_ = max_abs(copy.eta_);
    return copy;
  }

  const NoiseModel& noise() const { return noise_; }
  const QuantizerSpec& spec() const { return spec_; }
  double step() const { return step_; }
  double c_delta() const { return spec_.c_delta; }
  int n_intervals() const { return spec_.n_intervals; }
  std::span<const double> mass() const { return stats_.mass; }
  std::span<const double> density_drop() const { return stats_.density_drop; }
  std::span<const double> levels() const { return eta_; }
  std::span<const double> thresholds() const { return thresholds_; }
  double fisher() const { return fisher_; }
  double max_level() const { return max_level_; }

  /// Quantizer symbol for observation y with offset b: +/- i for
  /// |y - b| / Delta in [tau_{i-1}, tau_i). Never 0; y == b maps to +1.
  int quantize(double y, double offset) const {
    const double r = y - offset;
    const double a = std::abs(r);
    const auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), a);
    int index = static_cast<int>(it - thresholds_.begin()) + 1;
    index = std::min(index, spec_.half());
    return r < 0.0 ? -index : index;
  }

  /// Output level for a symbol, extended oddly to negative symbols.
  double level(int symbol) const {
    const double v = eta_[static_cast<std::size_t>(std::abs(symbol) - 1)];
    return symbol < 0 ? -v : v;
  }

  /// Mean field h(eps) with estimation error eps = x_hat - x:
  ///   sum_i eta_i [P(V in interval i shifted by eps) - same for -i].
  /// The negative-symbol mass at eps equals the positive-symbol mass at -eps,
  /// so h is odd by construction and h(0) is exactly 0.
  double mean_field(double eps) const {
    double h = 0.0;
    double lower = 0.0;
    for (std::size_t i = 0; i < eta_.size(); ++i) {
      const double upper = thresholds_[i];
      const double plus = noise_.mass(lower + eps, upper + eps);
      const double minus = noise_.mass(lower - eps, upper - eps);
      h += eta_[i] * (plus - minus);
      lower = upper;
    }
    return h;
  }

  double mean_field_slope() const { return qadapt::mean_field_slope(eta_, stats_.density_drop); }
  double increment_variance() const { return qadapt::increment_variance(eta_, stats_.mass); }

 private:
  QuantizerDesign(const NoiseModel& noise, QuantizerSpec spec, IntervalStats stats,
                  std::vector<double> eta, double fisher)
      : noise_(noise),
        spec_(std::move(spec)),
        step_(spec_.c_delta * noise.delta()),
        stats_(std::move(stats)),
        eta_(std::move(eta)),
        fisher_(fisher) {
    thresholds_.reserve(spec_.tau.size());
    for (double t : spec_.tau) thresholds_.push_back(std::isinf(t) ? kInf : t * step_);
    max_level_ = max_abs(eta_);
  }

  static double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

  NoiseModel noise_;
  QuantizerSpec spec_;
  double step_;
  IntervalStats stats_;
  std::vector<double> eta_;
  std::vector<double> thresholds_;  // tau_i * Delta, last is +inf
  double fisher_;
  double max_level_ = 0.0;
};

struct CDeltaGrid {
  double min = 0.01;
  double max = 10.0;
  double step = 0.01;

  std::size_t size() const {
    if (!(min > 0.0) || !(max >= min) || !(step > 0.0) || !std::isfinite(max)) {
      throw std::invalid_argument("c_delta grid needs 0 < min <= max and step > 0");
    }
    return static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
  }
  double at(std::size_t i) const { return min + static_cast<double>(i) * step; }
};

struct CDeltaOptimum {
  double c_delta;
  double fisher;
  std::size_t evaluated = 0;   // grid points with a valid design
  std::size_t degenerate = 0;  // grid points skipped for vanishing interval mass
};

/// Grid search of c_delta maximizing I_q for uniform thresholds. Points
/// whose design is degenerate are skipped. Ties (values within 1e-12
/// relative of the maximum, e.g. the flat Laplace profile) resolve to the
/// smallest c_delta.
inline CDeltaOptimum optimize_cdelta(const NoiseModel& noise, int n_intervals,
                                     const CDeltaGrid& grid = {}) {
  const std::size_t n = grid.size();
  std::vector<double> values(n, -kInf);
  CDeltaOptimum result{0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const IntervalStats stats = interval_stats(noise, QuantizerSpec::uniform(n_intervals, grid.at(i)));
      values[i] = fisher_quantized(stats.mass, stats.density_drop);
      ++result.evaluated;
    } catch (const DesignError&) {
      ++result.degenerate;
    }
  }
  if (result.evaluated == 0) {
    throw DesignError("no c_delta grid point yields a valid quantizer design");
  }
  const double best = *std::max_element(values.begin(), values.end());
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] >= best * (1.0 - 1e-12)) {
      result.c_delta = grid.at(i);
      result.fisher = values[i];
      break;
    }
  }
  return result;
}

/// Uniform design with c_delta chosen by grid search.
inline QuantizerDesign optimal_uniform_design(const NoiseModel& noise, int n_intervals,
                                              const CDeltaGrid& grid = {}) {
  const CDeltaOptimum opt = optimize_cdelta(noise, n_intervals, grid);
  return QuantizerDesign::build(noise, QuantizerSpec::uniform(n_intervals, opt.c_delta));
}

}  // namespace qadapt
