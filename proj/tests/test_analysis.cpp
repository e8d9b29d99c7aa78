#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "qadapt/analysis.hpp"
#include "support/generators.hpp"

using namespace qadapt;

TEST(Loss, AnchorValues) {
  EXPECT_NEAR(loss_constant(4.0 / std::numbers::pi, 2.0), 10.0 * std::log10(std::numbers::pi / 2.0), 1e-14);
  EXPECT_NEAR(loss_constant(4.0 / std::numbers::pi, 2.0), 1.9612, 1e-4);
  EXPECT_NEAR(loss_wiener(4.0 / std::numbers::pi, 2.0), 0.9806, 1e-4);
  EXPECT_NEAR(loss_drift(4.0 / std::numbers::pi, 2.0), 1.3075, 1e-4);
  EXPECT_NEAR(loss_constant(4.0 / (std::numbers::pi * std::numbers::pi), 0.5), 0.9121, 1e-4);
  EXPECT_EQ(loss_constant(1.0, 1.0), 0.0);
}

TEST(Loss, Ratios) {
  prop::for_all(500, 51, [](prop::Gen& g) {
    const double ic = g.log_uniform(0.01, 100.0);
    const double iq = ic * g.uniform(0.01, 1.0);
    const double lq = loss_constant(iq, ic);
    EXPECT_GE(lq, 0.0);
    EXPECT_DOUBLE_EQ(loss_wiener(iq, ic), lq / 2.0);
    EXPECT_NEAR(loss_drift(iq, ic), 2.0 * lq / 3.0, 1e-15 * lq);
  });
}

TEST(Loss, RejectsNonPositive) {
  EXPECT_THROW(loss_constant(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(loss_constant(1.0, INFINITY), std::invalid_argument);
  EXPECT_THROW(loss_constant(NAN, 1.0), std::invalid_argument);
}

TEST(SigmaInf, OptimalLevelsAttainBound) {
  const QuantizerDesign d = QuantizerDesign::build(NoiseModel::generalized_gaussian(2.0), QuantizerSpec::uniform(4, 1.0));
  EXPECT_NEAR(sigma_inf_general(d.levels(), d.mass(), d.density_drop()), 1.0 / d.fisher(), 1e-15);
  std::vector<double> twice(d.levels().begin(), d.levels().end());
  for (double& v : twice) v *= 2.0;
  EXPECT_NEAR(sigma_inf_general(twice, d.mass(), d.density_drop()), 1.0 / d.fisher(), 1e-15);
}

TEST(SigmaInf, OneBitLevelCancels) {
  const QuantizerDesign d = QuantizerDesign::build(NoiseModel::generalized_gaussian(2.0), QuantizerSpec::uniform(2));
  for (double eta : {0.01, 1.0, 37.0}) {
    const std::vector<double> levels{eta};
    EXPECT_NEAR(sigma_inf_general(levels, d.mass(), d.density_drop()), std::numbers::pi / 4.0, 1e-15);
  }
}

TEST(SigmaInf, RandomLevelsNeverBeatOptimum) {
  prop::for_all(100, 52, [](prop::Gen& g) {
    const QuantizerDesign d = g.design(5, 0.1, 2.0);
    const auto levels = g.positive_vector(d.levels().size(), 1e-3, 5.0);
    EXPECT_GE(sigma_inf_general(levels, d.mass(), d.density_drop()) - 1.0 / d.fisher(), -1e-12);
  });
}

TEST(SigmaInf, ZeroSlopeRejected) {
  const std::vector<double> zero{0.0};
  const std::vector<double> mass{0.5};
  const std::vector<double> drop{0.3};
  EXPECT_THROW(sigma_inf_general(zero, mass, drop), std::domain_error);
  EXPECT_THROW(sigma_inf_general(zero, std::vector<double>{0.5, 0.1}, drop), std::invalid_argument);
}

TEST(OptimalGamma, Values) {
  EXPECT_DOUBLE_EQ(optimal_gamma_constant(-2.0), 0.5);
  const QuantizerDesign gauss = QuantizerDesign::build(NoiseModel::generalized_gaussian(2.0), QuantizerSpec::uniform(2));
  EXPECT_NEAR(optimal_gamma_constant(gauss.mean_field_slope()), std::numbers::pi / 4.0, 1e-15);
  const QuantizerDesign laplace = QuantizerDesign::build(NoiseModel::generalized_gaussian(1.0), QuantizerSpec::uniform(8, 0.3));
  EXPECT_NEAR(optimal_gamma_constant(laplace.mean_field_slope()), 1.0, 1e-12);
  EXPECT_THROW(optimal_gamma_constant(0.0), std::domain_error);
  prop::for_all(100, 53, [](prop::Gen& g) {
    const QuantizerDesign d = g.design(5, 0.1, 2.0);
    EXPECT_NEAR(optimal_gamma_constant(d.mean_field_slope()), 1.0 / d.fisher(), 1e-13 / d.fisher());
  });
}

TEST(Prediction, Identities) {
  prop::for_all(200, 54, [](prop::Gen& g) {
    const double iq = g.log_uniform(0.05, 20.0);
    const double sw = g.log_uniform(1e-5, 1.0);
    const PerformancePrediction p{iq};
    EXPECT_NEAR(p.sigma_inf_sq() * iq, 1.0, 1e-15);
    EXPECT_NEAR(p.mse_wiener(sw), sw * std::sqrt(p.sigma_inf_sq()), 1e-15 * sw);
    EXPECT_NEAR(p.mse_wiener(sw) * p.mse_wiener(sw) * iq, sw * sw, 1e-14 * sw * sw);
    EXPECT_NEAR(p.var_constant(7), 1.0 / (7 * iq), 1e-15 / iq);
  });
}

TEST(DriftTradeoff, OptimumMatchesClosedForm) {
  prop::for_all(100, 55, [](prop::Gen& g) {
    const double iq = g.log_uniform(0.1, 10.0);
    const double u = g.log_uniform(1e-6, 1e-2);
    const double gamma = optimal_gamma_drift(u, iq);
    EXPECT_NEAR(mse_drift_tradeoff(gamma, u, iq), PerformancePrediction{iq}.mse_drift(u),
                1e-12 * PerformancePrediction{iq}.mse_drift(u));
  });
}

TEST(DriftTradeoff, GridScanFindsInteriorMinimum) {
  const double iq = 1.765, u = 1e-4;
  const double gamma_star = optimal_gamma_drift(u, iq);
  double best = INFINITY, best_gamma = 0.0;
  const int n = 20001;
  for (int i = 0; i < n; ++i) {
    const double gamma = std::pow(10.0, -5.0 + 5.0 * i / (n - 1));
    const double v = mse_drift_tradeoff(gamma, u, iq);
    if (v < best) {
      best = v;
      best_gamma = gamma;
    }
  }
  EXPECT_NEAR(best_gamma / gamma_star, 1.0, 1e-3);
  EXPECT_GT(best_gamma, 1e-5);
  EXPECT_LT(best_gamma, 1.0);
}

TEST(DriftTradeoff, NoDriftPrefersSmallGain) {
  EXPECT_LT(mse_drift_tradeoff(1e-6, 0.0, 1.0), mse_drift_tradeoff(1e-3, 0.0, 1.0));
  EXPECT_THROW(mse_drift_tradeoff(0.0, 1e-4, 1.0), std::invalid_argument);
}

TEST(Bcrb, ClosedFormValue) {
  EXPECT_NEAR(bcrb_asymptotic(2.0, 1e-3), 7.06607e-4, 5e-9);
  EXPECT_NEAR(bcrb_asymptotic_approx(2.0, 1e-3), 7.07107e-4, 5e-9);
}

TEST(Bcrb, ClosedFormIsFixedPoint) {
  for (double ic : {0.5, 1.0, 2.0}) {
    for (double sw : {1e-4, 1e-3, 1e-1}) {
      const double closed = bcrb_asymptotic(ic, sw);
      const FixedPoint fp = bcrb_fixed_point(ic, sw);
      EXPECT_NEAR(fp.value, closed, 1e-10 * closed) << ic << " " << sw;
      const double j = 1.0 / closed;
      EXPECT_NEAR(bayesian_information_step(j, ic, sw), j, 1e-12 * j);
    }
  }
}

TEST(Bcrb, IterationConvergesQuickly) {
  const double closed = bcrb_asymptotic(2.0, 1e-3);
  const std::vector<double> seq = bcrb_sequence(2.0, 1e-3, 10000);
  EXPECT_NEAR(seq.back(), closed, 1e-10 * closed);
  for (std::size_t k = 1; k < seq.size(); ++k) {
    EXPECT_GE(seq[k], seq[k - 1] * (1 - 1e-15));  // J_k falls from the prior 1/sigma_w^2
    EXPECT_GT(seq[k], 0.0);
  }
}

TEST(Bcrb, RecursionMatchesTextbookForm) {
  const double ic = 1.3, sw = 0.2;
  const double p = 1.0 / (sw * sw);
  double j = p;
  for (int k = 0; k < 50; ++k) {
    const double textbook = ic + p - p * p / (j + p);
    const double stable = bayesian_information_step(j, ic, sw);
    EXPECT_NEAR(stable, textbook, 1e-12 * textbook);
    j = stable;
  }
}

TEST(Bcrb, Limits) {
  EXPECT_NEAR(bcrb_asymptotic(2.0, 1e6), 0.5, 1e-9);
  for (double sw : {1e-3, 1e-4, 1e-5}) {
    for (double ic : {0.5, 1.0, 2.0, 3.0}) {
      EXPECT_LT(std::abs(bcrb_asymptotic(ic, sw) / bcrb_asymptotic_approx(ic, sw) - 1.0), 1e-3);
    }
  }
  EXPECT_THROW(bcrb_asymptotic(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(bcrb_asymptotic(1.0, 0.0), std::invalid_argument);
}

TEST(Bcrb, BoundSetForwarding) {
  const BoundSet b{2.0, 1e-3};
  EXPECT_DOUBLE_EQ(b.crb(10), 0.05);
  EXPECT_DOUBLE_EQ(b.bcrb_inf(), bcrb_asymptotic(2.0, 1e-3));
  EXPECT_EQ(b.bcrb(5).size(), 5u);
  EXPECT_THROW(b.crb(0), std::invalid_argument);
  EXPECT_NEAR(mse_drift_continuous(1e-4, 2.0), 3.0 * std::pow(1e-4 / 8.0, 2.0 / 3.0), 1e-18);
}

TEST(Ode, StartingAtTruthStaysThere) {
  const QuantizerDesign d = QuantizerDesign::build(NoiseModel::student_t(2.0), QuantizerSpec::uniform(8, 0.43));
  const OdeTrajectory t = ode_mean_trajectory(d, 1.25, 1.25, 100);
  for (double x : t.x_hat) EXPECT_EQ(x, 1.25);
  EXPECT_NEAR(t.t[100], 5.187377517639621, 1e-12);  // H_100
}

TEST(Ode, ErrorDecaysMonotonically) {
  for (const NoiseModel& n : standard_noises()) {
    const QuantizerDesign d = optimal_uniform_design(n, 4);
    const OdeTrajectory t = ode_mean_trajectory(d, 5.0, 0.0, 2000);
    for (std::size_t k = 1; k < t.x_hat.size(); ++k) {
      EXPECT_LE(std::abs(t.x_hat[k]), std::abs(t.x_hat[k - 1]));
      EXPECT_GE(t.x_hat[k], 0.0);
    }
  }
}

TEST(Ode, MatchesLinearSolutionNearTruth) {
  // Near the truth h(e) = -I_q e, so e(t) = e0 exp(-t).
  const QuantizerDesign d = QuantizerDesign::build(NoiseModel::generalized_gaussian(2.0), QuantizerSpec::uniform(16, 0.23));
  const double e0 = 1e-6;
  const OdeTrajectory t = ode_mean_trajectory(d, e0, 0.0, 1000);
  for (std::size_t k : {10u, 100u, 1000u}) {
    EXPECT_NEAR(t.x_hat[k], e0 * std::exp(-t.t[k]), 1e-6 * e0 * std::exp(-t.t[k]));
  }
}

TEST(Ode, OneBitGaussianReachesTruth) {
  const QuantizerDesign d = QuantizerDesign::build(NoiseModel::generalized_gaussian(2.0), QuantizerSpec::uniform(2));
  const OdeTrajectory t10k = ode_mean_trajectory(d, 5.0, 0.0, 10000);
  EXPECT_LT(t10k.x_hat.back(), 1e-2);
  const OdeTrajectory t100k = ode_mean_trajectory(d, 5.0, 0.0, 100000);
  EXPECT_LT(t100k.x_hat.back(), 1e-3);
}

TEST(Stability, PassesForStandardDesigns) {
  const std::vector<double> grid = symmetric_grid(10.0, 200);
  for (const NoiseModel& n : standard_noises()) {
    for (int nb = 1; nb <= 5; ++nb) {
      const StabilityReport r = check_stability(optimal_uniform_design(n, 1 << nb), grid);
      EXPECT_TRUE(r.passed) << family_name(n.family()) << n.beta() << " nb=" << nb;
      EXPECT_EQ(r.h_at_zero, 0.0);
    }
  }
}

TEST(Stability, FlippedLevelsFail) {
  const QuantizerDesign d = QuantizerDesign::build(NoiseModel::generalized_gaussian(2.0), QuantizerSpec::uniform(4, 0.69));
  std::vector<double> flipped(d.levels().begin(), d.levels().end());
  for (double& v : flipped) v = -v;
  const StabilityReport r = check_stability(d.with_levels(flipped), symmetric_grid(10.0, 20));
  EXPECT_FALSE(r.passed);
  EXPECT_EQ(r.violations.size(), 40u);
  for (const StabilityRow& row : r.rows) {
    if (row.eps != 0.0) {
      EXPECT_GT(row.lyapunov_rate, 0.0);
    }
  }
}

TEST(Stability, ZeroRowIsExact) {
  const QuantizerDesign d = optimal_uniform_design(NoiseModel::student_t(1.0), 8);
  const StabilityReport r = check_stability(d, symmetric_grid(10.0, 5));
  ASSERT_EQ(r.rows.size(), 11u);
  EXPECT_EQ(r.rows[5].eps, 0.0);
  EXPECT_EQ(r.rows[5].h, 0.0);
  EXPECT_EQ(r.rows[5].lyapunov_rate, 0.0);
}
