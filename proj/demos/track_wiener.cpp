// Tracks one Wiener path from 2-bit measurements under Cauchy noise and
// compares the time-averaged squared error with the closed-form prediction.

#include <cstdio>

#include "qadapt/qadapt.hpp"

int main() {
  using namespace qadapt;

  const NoiseModel noise = NoiseModel::student_t(1.0);
  const QuantizerDesign design = optimal_uniform_design(noise, 4);
  const double sigma_w = 1e-3;

  EstimatorState state;
  state.schedule = GainSchedule::wiener(design.fisher(), sigma_w);

  Philox4x32 rng(7, 0);
  auto sample_noise = noise.sampler();
  SignalPath path(SignalModel::wiener(sigma_w));

  const int steps = 200000;
  const int burn_in = 1000;
  double sum_sq = 0.0;
  for (int k = 1; k <= steps; ++k) {
    const double x = path.next(rng);
    state = step_quantized(state, x + sample_noise(rng), design);
    if (k > burn_in) sum_sq += (state.x_hat - x) * (state.x_hat - x);
  }

  const double mse = sum_sq / (steps - burn_in);
  const double theory = PerformancePrediction{design.fisher()}.mse_wiener(sigma_w);
  std::printf("c_delta   %.2f\n", design.c_delta());
  std::printf("I_q       %.6f (I_c %.6f)\n", design.fisher(), noise.fisher_information());
  std::printf("MSE       %.4e simulated, %.4e predicted\n", mse, theory);
  std::printf("L_q^W     %.4f dB\n", loss_wiener(design.fisher(), noise.fisher_information()));
  return 0;
}
