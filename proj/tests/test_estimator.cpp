#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "qadapt/analysis.hpp"
#include "qadapt/estimator.hpp"
#include "qadapt/random.hpp"
#include "support/generators.hpp"

using namespace qadapt;

namespace {

QuantizerDesign one_bit_gauss() {
  return QuantizerDesign::build(NoiseModel::generalized_gaussian(2.0), QuantizerSpec::uniform(2));
}

}  // namespace

TEST(Gain, ClosedForms) {
  EXPECT_DOUBLE_EQ(GainSchedule::constant(2.0)(4), 0.125);
  EXPECT_NEAR(GainSchedule::wiener(4.0 / std::numbers::pi, 1e-3)(1), 8.8623e-4, 5e-8);
  EXPECT_NEAR(GainSchedule::drift(4.0 / std::numbers::pi)(1, 1e-4), 2.9109e-3, 5e-7);
  EXPECT_NEAR(GainSchedule::drift(4.0 / std::numbers::pi)(1, -1e-4), 2.9109e-3, 5e-7);
  EXPECT_THROW(GainSchedule::constant(2.0)(0), std::invalid_argument);
}

TEST(Gain, ConstantScheduleDecreases) {
  const GainSchedule g = GainSchedule::constant(1.3);
  for (std::size_t k = 1; k < 1000; ++k) {
    EXPECT_GT(g(k), g(k + 1));
    EXPECT_GT(g(k + 1), 0.0);
  }
}

TEST(Gain, DriftFloorKeepsGainPositive) {
  const GainSchedule g = GainSchedule::drift(2.0, 1e-5, 1e-8);
  EXPECT_DOUBLE_EQ(g(1, 0.0), std::cbrt(4.0 * 1e-16 / 4.0));
  EXPECT_GT(g(1, 0.0), 0.0);
}

TEST(Gain, RejectsBadParameters) {
  EXPECT_THROW(GainSchedule::constant(0.0), std::invalid_argument);
  EXPECT_THROW(GainSchedule::constant(INFINITY), std::invalid_argument);
  EXPECT_THROW(GainSchedule::wiener(1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(GainSchedule::drift(1.0, 0.0), std::invalid_argument);
}

TEST(StepQuantized, FirstStepOneBitGaussian) {
  const QuantizerDesign d = one_bit_gauss();
  EstimatorState s;
  s.schedule = GainSchedule::constant(d.fisher());
  const EstimatorState next = step_quantized(s, 3.0, d);
  EXPECT_EQ(next.k, 1u);
  EXPECT_NEAR(next.x_hat, std::sqrt(std::numbers::pi) / 2.0, 1e-15);
}

TEST(StepQuantized, TieMovesUp) {
  const QuantizerDesign d = one_bit_gauss();
  EstimatorState s;
  s.x_hat = 1.5;
  s.k = 9;
  s.schedule = GainSchedule::constant(d.fisher());
  const EstimatorState next = step_quantized(s, 1.5, d);
  EXPECT_NEAR(next.x_hat - 1.5, s.schedule(10) * d.levels()[0], 1e-16);
}

TEST(StepQuantized, SymmetricInputsGiveOppositeUpdates) {
  prop::for_all(300, 41, [](prop::Gen& g) {
    const QuantizerDesign d = g.design(5, 0.1, 2.0);
    EstimatorState s;
    s.x_hat = g.uniform(-3.0, 3.0);
    s.k = static_cast<std::size_t>(g.integer(0, 100));
    s.schedule = GainSchedule::constant(d.fisher());
    const double a = g.uniform(1e-3, 10.0);
    const double up = step_quantized(s, s.x_hat + a, d).x_hat - s.x_hat;
    const double down = step_quantized(s, s.x_hat - a, d).x_hat - s.x_hat;
    EXPECT_NEAR(up, -down, 1e-14);
    EXPECT_GT(up, 0.0);
  });
}

TEST(StepQuantized, UpdateDependsOnlyOnSymbol) {
  const QuantizerDesign d = QuantizerDesign::build(NoiseModel::student_t(2.0), QuantizerSpec::uniform(8, 0.4));
  EstimatorState s;
  s.schedule = GainSchedule::wiener(d.fisher(), 0.01);
  prop::for_all(300, 42, [&](prop::Gen& g) {
    const double y = g.uniform(-5.0, 5.0);
    EXPECT_EQ(step_quantized(s, y, d).x_hat, apply_symbol(s, d.quantize(y, s.x_hat), d).x_hat);
  });
  EXPECT_THROW(apply_symbol(s, 0, d), std::invalid_argument);
  EXPECT_THROW(apply_symbol(s, 5, d), std::invalid_argument);
  EXPECT_THROW(step_quantized(s, NAN, d), std::invalid_argument);
}

TEST(StepQuantized, DriftSmootherUpdate) {
  const QuantizerDesign d = one_bit_gauss();
  EstimatorState s;
  s.schedule = GainSchedule::drift(d.fisher(), 0.1);
  s.u_hat = 1e-4;
  const EstimatorState next = step_quantized(s, 10.0, d);
  const double dx = next.x_hat - s.x_hat;
  EXPECT_NEAR(dx, s.schedule(1, 1e-4) * d.levels()[0], 1e-18);
  EXPECT_NEAR(next.u_hat, 1e-4 + 0.1 * (dx - 1e-4), 1e-18);
}

TEST(StepContinuous, GaussianScore) {
  const NoiseModel n = NoiseModel::generalized_gaussian(2.0);
  EstimatorState s;
  s.schedule = GainSchedule::constant(n.fisher_information());
  const EstimatorState next = step_continuous(s, 1.0, n);
  // gamma_1 = 1/2, score at 1 is 2.
  EXPECT_DOUBLE_EQ(next.x_hat, 1.0);
  EXPECT_THROW(step_continuous(s, 1.0, NoiseModel::generalized_gaussian(1.0)), std::domain_error);
}

TEST(StepContinuous, CauchyScoreIsBounded) {
  const NoiseModel n = NoiseModel::student_t(1.0);
  EstimatorState s;
  s.schedule = GainSchedule::constant(n.fisher_information());
  // gamma_1 = 1 / I_c = 2, score at 1 is 2y / (1 + y^2) = 1.
  EXPECT_NEAR(step_continuous(s, 1.0, n).x_hat, 2.0, 1e-15);
  EXPECT_LT(std::abs(step_continuous(s, 1e12, n).x_hat), 1e-9);
}

TEST(Estimator, ConstantCaseMeanErrorShrinks) {
  // Mean of X_hat_k - x over replications from a 5 delta start.
  const NoiseModel n = NoiseModel::generalized_gaussian(2.0);
  const QuantizerDesign d = QuantizerDesign::build(n, QuantizerSpec::uniform(4, 0.69));
  const int reps = 400;
  std::vector<double> mean_err(10001, 0.0);
  for (int r = 0; r < reps; ++r) {
    Philox4x32 rng(3, static_cast<std::uint64_t>(r));
    auto noise = n.sampler();
    EstimatorState s;
    s.x_hat = 5.0;
    s.schedule = GainSchedule::constant(d.fisher());
    for (int k = 1; k <= 10000; ++k) {
      s = step_quantized(s, noise(rng), d);
      mean_err[static_cast<std::size_t>(k)] += s.x_hat / reps;
    }
  }
  EXPECT_GT(std::abs(mean_err[100]), std::abs(mean_err[1000]));
  EXPECT_GT(std::abs(mean_err[1000]) + 2e-3, std::abs(mean_err[10000]));
  EXPECT_LT(std::abs(mean_err[10000]), 0.01);
}

TEST(Estimator, MeanTrajectoryFollowsOde) {
  const NoiseModel n = NoiseModel::student_t(3.0);
  const QuantizerDesign d = optimal_uniform_design(n, 4);
  const std::size_t horizon = 200;
  const int reps = 4000;
  const double x0 = 4.0;
  std::vector<double> sum(horizon + 1, 0.0), sum_sq(horizon + 1, 0.0);
  for (int r = 0; r < reps; ++r) {
    Philox4x32 rng(17, static_cast<std::uint64_t>(r));
    auto noise = n.sampler();
    EstimatorState s;
    s.x_hat = x0;
    s.schedule = GainSchedule::constant(d.fisher());
    for (std::size_t k = 1; k <= horizon; ++k) {
      s = step_quantized(s, noise(rng), d);
      sum[k] += s.x_hat;
      sum_sq[k] += s.x_hat * s.x_hat;
    }
  }
  const OdeTrajectory ode = ode_mean_trajectory(d, x0, 0.0, horizon);
  // The ODE describes the mean once the gains are small; compare from k=20.
  for (std::size_t k : {20u, 50u, 100u, 200u}) {
    const double mean = sum[k] / reps;
    const double se = std::sqrt((sum_sq[k] / reps - mean * mean) / reps);
    EXPECT_NEAR(mean, ode.x_hat[k], 3.0 * se + 0.02 * std::abs(ode.x_hat[k])) << "k=" << k;
  }
}

TEST(Estimator, DriftEstimateSettlesAtTrueDrift) {
  const NoiseModel n = NoiseModel::generalized_gaussian(2.0);
  const QuantizerDesign d = QuantizerDesign::build(n, QuantizerSpec::uniform(4, 0.69));
  const double u = 1e-3;
  const int reps = 50;
  double mean_u = 0.0;
  for (int r = 0; r < reps; ++r) {
    Philox4x32 rng(23, static_cast<std::uint64_t>(r));
    auto noise = n.sampler();
    EstimatorState s;
    s.schedule = GainSchedule::drift(d.fisher(), 1e-3);
    s.u_hat = u;
    double x = 0.0;
    for (int k = 1; k <= 20000; ++k) {
      x += u;
      s = step_quantized(s, x + noise(rng), d);
    }
    mean_u += s.u_hat / reps;
  }
  EXPECT_NEAR(mean_u, u, 0.1 * u);
}
