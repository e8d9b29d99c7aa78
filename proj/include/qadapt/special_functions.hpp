#pragma once

// Incomplete gamma and incomplete beta functions.
//
// Power series below the usual pivot (x < a + 1 for gamma, x < (a+1)/(a+b+2)
// for beta) and a modified-Lentz continued fraction above it. Complete
// gamma/log-gamma come from <cmath>.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace qadapt::special {

namespace detail {

inline constexpr double kEps = std::numeric_limits<double>::epsilon();
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIter = 100000;

// exp(a*log(x) - x - lgamma(a)), the common prefactor of P and Q.
inline double gamma_prefactor(double a, double x) {
  return std::exp(a * std::log(x) - x - std::lgamma(a));
}

// P(a, x) by series; valid and fast for x < a + 1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) {
      return sum * gamma_prefactor(a, x);
    }
  }
  throw std::runtime_error("gamma_p: series failed to converge");
}

// Q(a, x) by continued fraction; valid for x >= a + 1.
inline double gamma_q_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) {
      return gamma_prefactor(a, x) * h;
    }
  }
  throw std::runtime_error("gamma_q: continued fraction failed to converge");
}

// Continued fraction for the incomplete beta function.
inline double beta_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete_beta: continued fraction failed to converge");
}

inline void require(bool ok, const char* what) {
  if (!ok) throw std::domain_error(what);
}

}  // namespace detail

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
inline double gamma_p(double a, double x) {
  detail::require(a > 0.0 && std::isfinite(a), "gamma_p: a must be positive and finite");
  detail::require(x >= 0.0, "gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_fraction(a, x);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// without cancellation in the tail.
inline double gamma_q(double a, double x) {
  detail::require(a > 0.0 && std::isfinite(a), "gamma_q: a must be positive and finite");
  detail::require(x >= 0.0, "gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_fraction(a, x);
}

/// Raw (non-regularized) lower incomplete gamma
///   gamma(a, x) = integral_0^x t^(a-1) e^(-t) dt,
/// so that gamma(a, inf) = Gamma(a).
inline double incomplete_gamma_lower(double a, double x) {
  return gamma_p(a, x) * std::tgamma(a);
}

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta_regularized(double x, double a, double b) {
  detail::require(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b),
                  "incomplete_beta: a and b must be positive and finite");
  detail::require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_fraction(x, a, b) / a;
  }
  return 1.0 - front * detail::beta_fraction(1.0 - x, b, a) / b;
}

}  // namespace qadapt::special
