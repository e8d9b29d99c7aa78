#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qadapt/special_functions.hpp"

namespace qadapt {

enum class Family { GeneralizedGaussian, StudentT };

inline std::string_view family_name(Family f) {
  return f == Family::GeneralizedGaussian ? "gg" : "st";
}

inline Family parse_family(std::string_view s) {
  if (s == "gg" || s == "GG") return Family::GeneralizedGaussian;
  if (s == "st" || s == "ST") return Family::StudentT;
  throw std::invalid_argument("unknown noise family '" + std::string(s) + "' (expected gg or st)");
}

/// Symmetric additive noise with shape `beta` and scale `delta`.
///
/// GG:  f(x) = beta / (2 delta Gamma(1/beta)) exp(-|x/delta|^beta)
/// ST:  Student's-t with `beta` degrees of freedom, scaled by `delta`.
///
/// Immutable; all members are const and thread-safe. Sampling takes an
/// external generator.
class NoiseModel {
 public:
  NoiseModel(Family family, double beta, double delta = 1.0)
      : family_(family), beta_(beta), delta_(delta) {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw std::invalid_argument("noise shape beta must be positive and finite");
    }
    if (!(delta > 0.0) || !std::isfinite(delta)) {
      throw std::invalid_argument("noise scale delta must be positive and finite");
    }
    if (family_ == Family::GeneralizedGaussian) {
      log_norm_ = std::log(beta_ / 2.0) - std::lgamma(1.0 / beta_);
    } else {
      log_norm_ = std::lgamma((beta_ + 1.0) / 2.0) - std::lgamma(beta_ / 2.0) -
                  0.5 * std::log(beta_ * std::numbers::pi);
    }
  }

  static NoiseModel generalized_gaussian(double beta, double delta = 1.0) {
    return {Family::GeneralizedGaussian, beta, delta};
  }
  static NoiseModel student_t(double beta, double delta = 1.0) {
    return {Family::StudentT, beta, delta};
  }

  Family family() const { return family_; }
  double beta() const { return beta_; }
  double delta() const { return delta_; }

  double pdf(double x) const {
    if (std::isinf(x)) return 0.0;
    return std::exp(log_norm_ + log_kernel(x / delta_)) / delta_;
  }

  double cdf(double x) const {
    if (x >= 0.0) return 0.5 + central_mass(x);
    return tail_mass(-x);
  }

  /// 1 - cdf(x), accurate for large x.
  double sf(double x) const { return cdf(-x); }

  /// P(lo <= V < hi) for lo <= hi (infinite bounds allowed), computed from
  /// whichever of the central or tail forms avoids cancellation.
  double mass(double lo, double hi) const {
    if (!(lo <= hi)) throw std::invalid_argument("mass: lo must not exceed hi");
    if (lo >= 0.0) return positive_mass(lo, hi);
    if (hi <= 0.0) return positive_mass(-hi, -lo);
    return central_mass(-lo) + central_mass(hi);
  }

  /// eta_c(x) = f'(x) / f(x). Undefined at x = 0 for GG with beta <= 1.
  double log_pdf_derivative(double x) const {
    if (family_ == Family::GeneralizedGaussian) {
      if (beta_ <= 1.0 && x == 0.0) {
        throw std::domain_error("GG density is not differentiable at 0 for beta <= 1");
      }
      const double z = x / delta_;
      const double sign = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
      return -beta_ * std::pow(std::abs(z), beta_ - 1.0) * sign / delta_;
    }
    return -(beta_ + 1.0) * x / (beta_ * delta_ * delta_ + x * x);
  }

  /// True when the continuous-measurement score f'/f exists everywhere.
  bool score_defined() const { return family_ == Family::StudentT || beta_ > 1.0; }

  /// Fisher information I_c for a location parameter from one continuous
  /// observation. GG beta = 1 (Laplace) gives 1/delta^2; GG beta < 1 throws.
  double fisher_information() const {
    if (family_ == Family::GeneralizedGaussian) {
      if (beta_ < 1.0) {
        throw std::domain_error("Fisher information is not finite for GG noise with beta < 1");
      }
      // beta (beta - 1) Gamma(1 - 1/beta) = beta^2 Gamma(2 - 1/beta), which
      // stays finite at beta = 1.
      const double value =
          beta_ * beta_ * std::exp(std::lgamma(2.0 - 1.0 / beta_) - std::lgamma(1.0 / beta_));
      return value / (delta_ * delta_);
    }
    return (beta_ + 1.0) / (beta_ + 3.0) / (delta_ * delta_);
  }

  /// Stateful sampler; keeps the distribution objects alive between draws.
  class Sampler {
   public:
    explicit Sampler(const NoiseModel& model)
        : family_(model.family_),
          beta_(model.beta_),
          delta_(model.delta_),
          gamma_(1.0 / model.beta_, 1.0),
          chi2_(model.beta_) {}

    template <class Rng>
    double operator()(Rng& rng) {
      if (family_ == Family::GeneralizedGaussian) {
        const double magnitude = delta_ * std::pow(gamma_(rng), 1.0 / beta_);
        return bit_(rng) ? magnitude : -magnitude;
      }
      const double z = normal_(rng);
      const double c = chi2_(rng);
      return delta_ * z / std::sqrt(c / beta_);
    }

   private:
    Family family_;
    double beta_;
    double delta_;
    std::gamma_distribution<double> gamma_;
    std::chi_squared_distribution<double> chi2_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::bernoulli_distribution bit_{0.5};
  };

  Sampler sampler() const { return Sampler(*this); }

  template <class Rng>
  double sample(Rng& rng) const {
    Sampler s(*this);
    return s(rng);
  }

 private:
  // log of the unnormalized density at normalized argument z.
  double log_kernel(double z) const {
    if (family_ == Family::GeneralizedGaussian) return -std::pow(std::abs(z), beta_);
    return -(beta_ + 1.0) / 2.0 * std::log1p(z * z / beta_);
  }

  // P(0 <= V < t), t >= 0.
  double central_mass(double t) const {
    if (t == 0.0) return 0.0;
    if (std::isinf(t)) return 0.5;
    const double z = t / delta_;
    if (family_ == Family::GeneralizedGaussian) {
      return 0.5 * special::gamma_p(1.0 / beta_, std::pow(z, beta_));
    }
    const double z2 = z * z;
    return 0.5 * special::incomplete_beta_regularized(z2 / (beta_ + z2), 0.5, beta_ / 2.0);
  }

  // P(V >= t), t >= 0.
  double tail_mass(double t) const {
    if (t == 0.0) return 0.5;
    if (std::isinf(t)) return 0.0;
    const double z = t / delta_;
    if (family_ == Family::GeneralizedGaussian) {
      return 0.5 * special::gamma_q(1.0 / beta_, std::pow(z, beta_));
    }
    const double z2 = z * z;
    return 0.5 * special::incomplete_beta_regularized(beta_ / (beta_ + z2), beta_ / 2.0, 0.5);
  }

  double positive_mass(double lo, double hi) const {
    if (lo == hi) return 0.0;
    const double tail_lo = tail_mass(lo);
    if (tail_lo < 0.25) return tail_lo - tail_mass(hi);
    return central_mass(hi) - central_mass(lo);
  }

  Family family_;
  double beta_;
  double delta_;
  double log_norm_ = 0.0;
};

/// Shapes used by the loss tables and figures: GG beta in {1.5, 2, 2.5, 3},
/// ST beta in {1, 2, 3}, unit scale.
inline std::vector<NoiseModel> standard_noises() {
  return {NoiseModel::generalized_gaussian(1.5), NoiseModel::generalized_gaussian(2.0),
          NoiseModel::generalized_gaussian(2.5), NoiseModel::generalized_gaussian(3.0),
          NoiseModel::student_t(1.0),            NoiseModel::student_t(2.0),
          NoiseModel::student_t(3.0)};
}

}  // namespace qadapt
