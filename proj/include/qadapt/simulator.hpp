#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qadapt/analysis.hpp"
#include "qadapt/estimator.hpp"
#include "qadapt/noise.hpp"
#include "qadapt/quantizer.hpp"
#include "qadapt/random.hpp"

namespace qadapt {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using SignalKind = GainKind;

/// X_k = X_{k-1} + W_k with W_k ~ N(u_k, sigma_w^2).
struct SignalModel {
  SignalKind kind = SignalKind::Constant;
  double x0 = 0.0;
  double sigma_w = 0.0;
  double u = 0.0;                 // constant drift
  std::vector<double> u_sequence;  // per-step drift u_1..u_K; overrides `u` when non-empty

  static SignalModel constant(double x0) { return checked(SignalKind::Constant, x0, 0.0, 0.0); }
  static SignalModel wiener(double sigma_w, double x0 = 0.0) {
    return checked(SignalKind::Wiener, x0, sigma_w, 0.0);
  }
  static SignalModel drift(double u, double sigma_w, double x0 = 0.0) {
    return checked(SignalKind::WienerDrift, x0, sigma_w, u);
  }

  /// u_k for k >= 1; the last entry of a drift sequence is held past its end.
  double drift_at(std::size_t k) const {
    if (u_sequence.empty()) return u;
    return u_sequence[std::min(k, u_sequence.size()) - 1];
  }

  void validate() const {
    if (!std::isfinite(x0)) throw ConfigError("signal x0 must be finite");
    if (!(sigma_w >= 0.0) || !std::isfinite(sigma_w)) throw ConfigError("sigma_w must be >= 0");
    const bool has_drift =
        u != 0.0 || std::any_of(u_sequence.begin(), u_sequence.end(), [](double v) { return v != 0.0; });
    switch (kind) {
      case SignalKind::Constant:
        if (sigma_w != 0.0 || has_drift) throw ConfigError("constant signal needs sigma_w = 0 and u = 0");
        break;
      case SignalKind::Wiener:
        if (!(sigma_w > 0.0) || has_drift) throw ConfigError("Wiener signal needs sigma_w > 0 and u = 0");
        break;
      case SignalKind::WienerDrift:
        if (!(sigma_w > 0.0) || !has_drift) throw ConfigError("drift signal needs sigma_w > 0 and u != 0");
        break;
    }
  }

 private:
  static SignalModel checked(SignalKind kind, double x0, double sigma_w, double u) {
    SignalModel s;
    s.kind = kind;
    s.x0 = x0;
    s.sigma_w = sigma_w;
    s.u = u;
    s.validate();
    return s;
  }
};

/// Stepwise generator of one signal path. Owns a copy of the model, so
/// temporaries are safe to pass.
class SignalPath {
 public:
  explicit SignalPath(SignalModel model) : model_(std::move(model)), x_(model_.x0) {}

  double current() const { return x_; }

  template <class Rng>
  double next(Rng& rng) {
    ++k_;
    if (model_.kind != SignalKind::Constant) {
      x_ += model_.drift_at(k_) + model_.sigma_w * normal_(rng);
    }
    return x_;
  }

 private:
  SignalModel model_;
  double x_;
  std::size_t k_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// X_1..X_K.
template <class Rng>
std::vector<double> generate_path(const SignalModel& signal, std::size_t horizon, Rng& rng) {
  signal.validate();
  SignalPath path(signal);
  std::vector<double> xs(horizon);
  for (auto& x : xs) x = path.next(rng);
  return xs;
}

struct DriftEstimatorConfig {
  double gain = 1e-5;         // gamma^u
  std::optional<double> u0;   // initial U_hat; empty means 0
  bool oracle_u0 = false;     // start from the true u_1 instead
};

struct ExperimentConfig {
  SignalModel signal;
  NoiseModel noise = NoiseModel::generalized_gaussian(2.0);
  QuantizerSpec quantizer = QuantizerSpec::uniform(2);
  bool continuous = false;  // run the continuous-measurement reference instead
  std::optional<GainKind> gain_kind;  // must match signal.kind when set
  std::size_t replications = 10000;
  std::size_t horizon = 2000;
  std::size_t burn_in = 0;
  std::uint64_t seed = 1;
  double initial_offset = 0.0;  // X_hat_0 = x0 + offset (+ uniform spread)
  double initial_spread = 0.0;  // half-width of a uniform perturbation of X_hat_0
  DriftEstimatorConfig drift;
  double divergence_threshold = 1e6;  // in units of delta, applied to |X_hat_k - X_k|
  unsigned threads = 0;               // 0: hardware concurrency

  void validate() const {
    signal.validate();
    quantizer.validate();
    if (gain_kind && *gain_kind != signal.kind) {
      throw ConfigError("gain schedule kind '" + std::string(gain_kind_name(*gain_kind)) +
                        "' does not match signal kind '" + std::string(gain_kind_name(signal.kind)) + "'");
    }
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (!(horizon > burn_in)) throw ConfigError("horizon must exceed burn_in");
    if (!std::isfinite(initial_offset) || !(initial_spread >= 0.0) || !std::isfinite(initial_spread)) {
      throw ConfigError("initial estimate offset/spread must be finite, spread >= 0");
    }
    if (!(drift.gain > 0.0) || !(drift.gain <= 1.0)) throw ConfigError("drift gain must be in (0, 1]");
    if (!(divergence_threshold > 0.0)) throw ConfigError("divergence threshold must be positive");
    if (continuous && !noise.score_defined()) {
      throw ConfigError("continuous reference needs GG beta > 1 or Student-t noise");
    }
  }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<double> mse_curve;   // index k-1: mean over replications of (X_hat_k - X_k)^2
  std::vector<double> theory_mse;  // closed-form prediction at k
  double asymptotic_mse = 0.0;     // K * MSE_K (constant) or mean of MSE_k over k > burn_in
  double asymptotic_mse_se = 0.0;  // standard error across replications
  double theory_asymptotic_mse = 0.0;
  double reference_mse = 0.0;  // continuous-measurement optimum for the same model
  double simulated_loss_db = 0.0;
  double theory_loss_db = 0.0;
  double fisher_quantized = 0.0;  // equals fisher_continuous for the reference run
  double fisher_continuous = 0.0;
  double c_delta = 0.0;
  std::vector<double> levels;
  GainSchedule schedule;
  std::size_t replications_used = 0;
  std::vector<std::size_t> diverged;  // replication indices, ascending
  double wall_seconds = 0.0;

  /// 10 log10(MSE_k / CRB_k) for the constant model.
  std::vector<double> loss_curve() const {
    std::vector<double> out(mse_curve.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double k = static_cast<double>(i + 1);
      out[i] = 10.0 * std::log10(mse_curve[i] * k * fisher_continuous);
    }
    return out;
  }
};

namespace detail {

inline constexpr std::size_t kChunk = 64;

struct Accumulator {
  std::vector<double> sq_error;
  double stat_sum = 0.0;
  double stat_sq_sum = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> diverged;

  void merge(Accumulator&& right) {
    if (sq_error.empty()) {
      sq_error = std::move(right.sq_error);
    } else if (!right.sq_error.empty()) {
      for (std::size_t i = 0; i < sq_error.size(); ++i) sq_error[i] += right.sq_error[i];
    }
    stat_sum += right.stat_sum;
    stat_sq_sum += right.stat_sq_sum;
    count += right.count;
    diverged.insert(diverged.end(), right.diverged.begin(), right.diverged.end());
  }
};

/// Pairwise reduction over chunks pushed in index order. The summation tree
/// depends only on the number of chunks.
class PairwiseReducer {
 public:
  void push(Accumulator acc) {
    std::size_t level = 0;
    while (!stack_.empty() && stack_.back().first == level) {
      Accumulator left = std::move(stack_.back().second);
      stack_.pop_back();
      left.merge(std::move(acc));
      acc = std::move(left);
      ++level;
    }
    stack_.emplace_back(level, std::move(acc));
  }

  Accumulator finish() {
    if (stack_.empty()) return {};
    Accumulator acc = std::move(stack_.back().second);
    stack_.pop_back();
    while (!stack_.empty()) {
      Accumulator left = std::move(stack_.back().second);
      stack_.pop_back();
      left.merge(std::move(acc));
      acc = std::move(left);
    }
    return acc;
  }

 private:
  std::vector<std::pair<std::size_t, Accumulator>> stack_;
};

struct Prepared {
  std::optional<QuantizerDesign> design;
  GainSchedule schedule;
};

inline Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  double fisher;
  if (cfg.continuous) {
    fisher = cfg.noise.fisher_information();
  } else {
    p.design = QuantizerDesign::build(cfg.noise, cfg.quantizer);
    fisher = p.design->fisher();
  }
  switch (cfg.signal.kind) {
    case SignalKind::Constant: p.schedule = GainSchedule::constant(fisher); break;
    case SignalKind::Wiener: p.schedule = GainSchedule::wiener(fisher, cfg.signal.sigma_w); break;
    case SignalKind::WienerDrift: p.schedule = GainSchedule::drift(fisher, cfg.drift.gain); break;
  }
  return p;
}

inline void run_replication(const ExperimentConfig& cfg, const Prepared& p, std::size_t rep,
                            std::vector<double>& scratch, Accumulator& acc) {
  Philox4x32 rng(cfg.seed, rep);
  NoiseModel::Sampler noise = cfg.noise.sampler();
  SignalPath path(cfg.signal);

  EstimatorState state;
  state.schedule = p.schedule;
  state.x_hat = cfg.signal.x0 + cfg.initial_offset;
  if (cfg.initial_spread > 0.0) {
    std::uniform_real_distribution<double> spread(-cfg.initial_spread, cfg.initial_spread);
    state.x_hat += spread(rng);
  }
  if (cfg.signal.kind == SignalKind::WienerDrift) {
    state.u_hat = cfg.drift.oracle_u0 ? cfg.signal.drift_at(1) : cfg.drift.u0.value_or(0.0);
  }

  const double limit = cfg.divergence_threshold * cfg.noise.delta();
  double tail_sum = 0.0;
  for (std::size_t k = 1; k <= cfg.horizon; ++k) {
    const double x = path.next(rng);
    const double y = x + noise(rng);
    state = cfg.continuous ? step_continuous(state, y, cfg.noise) : step_quantized(state, y, *p.design);
    const double err = state.x_hat - x;
    if (!std::isfinite(err) || std::abs(err) > limit) {
      acc.diverged.push_back(rep);
      return;
    }
    scratch[k - 1] = err * err;
    if (k > cfg.burn_in) tail_sum += err * err;
  }

  const double stat = cfg.signal.kind == SignalKind::Constant
                          ? static_cast<double>(cfg.horizon) * scratch[cfg.horizon - 1]
                          : tail_sum / static_cast<double>(cfg.horizon - cfg.burn_in);
  if (acc.sq_error.empty()) acc.sq_error.assign(cfg.horizon, 0.0);
  for (std::size_t i = 0; i < cfg.horizon; ++i) acc.sq_error[i] += scratch[i];
  acc.stat_sum += stat;
  acc.stat_sq_sum += stat * stat;
  ++acc.count;
}

inline Accumulator run_chunk(const ExperimentConfig& cfg, const Prepared& p, std::size_t chunk) {
  Accumulator acc;
  std::vector<double> scratch(cfg.horizon);
  const std::size_t first = chunk * kChunk;
  const std::size_t last = std::min(first + kChunk, cfg.replications);
  for (std::size_t rep = first; rep < last; ++rep) run_replication(cfg, p, rep, scratch, acc);
  return acc;
}

inline Accumulator run_all(const ExperimentConfig& cfg, const Prepared& p) {
  const std::size_t n_chunks = (cfg.replications + kChunk - 1) / kChunk;
  unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_chunks));
  PairwiseReducer reducer;

  if (threads <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) reducer.push(run_chunk(cfg, p, c));
    return reducer.finish();
  }

  // Chunks are computed in batches and pushed in index order, so the
  // reduction is the same as the sequential one.
  const std::size_t batch = static_cast<std::size_t>(threads) * 4;
  for (std::size_t begin = 0; begin < n_chunks; begin += batch) {
    const std::size_t end = std::min(begin + batch, n_chunks);
    std::vector<Accumulator> slots(end - begin);
    std::atomic<std::size_t> next{begin};
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          try {
            for (std::size_t c = next++; c < end; c = next++) slots[c - begin] = run_chunk(cfg, p, c);
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    for (auto& s : slots) reducer.push(std::move(s));
  }
  return reducer.finish();
}

inline double safe_fisher_continuous(const NoiseModel& noise) {
  try {
    return noise.fisher_information();
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Closed-form MSE of the adaptive estimator with Fisher information `fisher`.
inline double model_mse(const SignalModel& s, double fisher, std::size_t k) {
  const PerformancePrediction pred{fisher};
  switch (s.kind) {
    case SignalKind::Constant: return pred.var_constant(k);
    case SignalKind::Wiener: return pred.mse_wiener(s.sigma_w);
    case SignalKind::WienerDrift: return pred.mse_drift(s.drift_at(k));
  }
  return 0.0;
}

inline double model_asymptotic_mse(const SignalModel& s, double fisher, std::size_t horizon) {
  // The constant model reports k MSE_k, so its asymptote is sigma_inf^2.
  if (s.kind == SignalKind::Constant) return 1.0 / fisher;
  return model_mse(s, fisher, horizon);
}

inline double model_loss(SignalKind kind, double iq, double ic) {
  switch (kind) {
    case SignalKind::Constant: return loss_constant(iq, ic);
    case SignalKind::Wiener: return loss_wiener(iq, ic);
    case SignalKind::WienerDrift: return loss_drift(iq, ic);
  }
  return 0.0;
}

inline ExperimentResult run(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const Prepared p = prepare(cfg);
  Accumulator acc = run_all(cfg, p);

  ExperimentResult r;
  r.config = cfg;
  r.schedule = p.schedule;
  r.fisher_continuous = safe_fisher_continuous(cfg.noise);
  r.fisher_quantized = p.schedule.fisher;
  if (p.design) {
    r.c_delta = p.design->c_delta();
    r.levels.assign(p.design->levels().begin(), p.design->levels().end());
  }
  r.diverged = std::move(acc.diverged);
  r.replications_used = acc.count;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.mse_curve.assign(cfg.horizon, nan);
  if (acc.count > 0) {
    const double n = static_cast<double>(acc.count);
    for (std::size_t i = 0; i < cfg.horizon; ++i) r.mse_curve[i] = acc.sq_error[i] / n;
    r.asymptotic_mse = acc.stat_sum / n;
    if (acc.count > 1) {
      const double var = std::max(0.0, (acc.stat_sq_sum - acc.stat_sum * acc.stat_sum / n) / (n - 1.0));
      r.asymptotic_mse_se = std::sqrt(var / n);
    }
  } else {
    r.asymptotic_mse = nan;
    r.asymptotic_mse_se = nan;
  }

  r.theory_mse.resize(cfg.horizon);
  for (std::size_t k = 1; k <= cfg.horizon; ++k) {
    r.theory_mse[k - 1] = model_mse(cfg.signal, r.fisher_quantized, k);
  }
  r.theory_asymptotic_mse = model_asymptotic_mse(cfg.signal, r.fisher_quantized, cfg.horizon);
  if (std::isfinite(r.fisher_continuous)) {
    r.reference_mse = model_asymptotic_mse(cfg.signal, r.fisher_continuous, cfg.horizon);
    r.simulated_loss_db = 10.0 * std::log10(r.asymptotic_mse / r.reference_mse);
    r.theory_loss_db = model_loss(cfg.signal.kind, r.fisher_quantized, r.fisher_continuous);
  } else {
    r.reference_mse = r.simulated_loss_db = r.theory_loss_db = nan;
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace detail

/// Replicated quantized-estimator run. Replication r draws from Philox
/// stream (seed, r); results do not depend on the thread count.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.continuous) throw ConfigError("run_experiment needs a quantizer; use run_continuous_reference");
  return detail::run(config);
}

/// Same protocol with the continuous-measurement score update.
inline ExperimentResult run_continuous_reference(ExperimentConfig config) {
  config.continuous = true;
  return detail::run(config);
}

}  // namespace qadapt
