#pragma once

// Subcommand implementations for the qadapt tool. Each command writes its
// outputs under an output directory together with a manifest that records
// everything needed to repeat the run.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qadapt/config.hpp"
#include "qadapt/io.hpp"
#include "qadapt/qadapt.hpp"

namespace qadapt::cli {

namespace fs = std::filesystem;

struct RunInfo {
  std::string subcommand;
  std::string command_line;
  fs::path out = ".";
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

inline void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");
}

/// [run] section first, then an optional experiment config that `simulate
/// --config` accepts as is.
inline fs::path write_manifest(const RunInfo& run, const std::string& stem,
                               const std::map<std::string, std::string>& extra = {},
                               const ExperimentConfig* experiment = nullptr) {
  const fs::path path = run.out / (stem + "_manifest.ini");
  std::ofstream os = io::open_output(path.string());
  os << "[run]\n";
  os << "subcommand = " << run.subcommand << '\n';
  os << "command_line = " << run.command_line << '\n';
  os << "seed = " << run.seed << '\n';
  os << "threads = " << run.threads << '\n';
  os << "qadapt_version = " << version << '\n';
  os << "compiler = " << compiler << '\n';
  for (const auto& [k, v] : extra) os << k << " = " << v << '\n';
  if (experiment) {
    os << '\n';
    config::write(os, *experiment);
  }
  return path;
}

inline std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return io::format_number(v);
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << v;
  return os.str();
}

inline double fisher_or_nan(const NoiseModel& noise) {
  try {
    return noise.fisher_information();
  } catch (const std::domain_error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline double loss_or_nan(double iq, double ic) {
  return std::isfinite(ic) ? loss_constant(iq, ic) : std::numeric_limits<double>::quiet_NaN();
}

inline std::string noise_label(const NoiseModel& n) {
  return std::string(family_name(n.family())) + " beta=" + io::format_number(n.beta());
}

// ---------------------------------------------------------------------------
// design

struct DesignRequest {
  NoiseModel noise = NoiseModel::generalized_gaussian(2.0);
  int n_bits = 1;
  CDeltaGrid grid;
};

inline fs::path design_table_path(const fs::path& out, const DesignRequest& req) {
  return out / ("design_" + std::string(family_name(req.noise.family())) + "_beta" +
                io::format_number(req.noise.beta()) + "_nb" + std::to_string(req.n_bits) + ".txt");
}

inline int cmd_design(const DesignRequest& req, const RunInfo& run, std::ostream& log, std::ostream& err) {
  ensure_directory(run.out);
  const int n_intervals = 1 << req.n_bits;
  const CDeltaOptimum opt = optimize_cdelta(req.noise, n_intervals, req.grid);
  const QuantizerDesign d = QuantizerDesign::build(req.noise, QuantizerSpec::uniform(n_intervals, opt.c_delta));
  const double ic = fisher_or_nan(req.noise);

  log << "noise        " << noise_label(req.noise) << " delta=" << io::format_number(req.noise.delta()) << '\n';
  log << "n_intervals  " << n_intervals << " (" << req.n_bits << " bits)\n";
  log << "c_delta*     " << io::format_number(opt.c_delta) << "  (grid points " << opt.evaluated << ", degenerate "
      << opt.degenerate << ")\n";
  log << "thresholds   " << io::join_numbers({d.thresholds().begin(), d.thresholds().end()}, io::kCsvDigits) << '\n';
  log << "levels eta*  " << io::join_numbers({d.levels().begin(), d.levels().end()}, io::kCsvDigits) << '\n';
  log << "I_q          " << io::format_number(d.fisher()) << '\n';
  log << "I_c          " << io::format_number(ic) << '\n';
  if (std::isfinite(ic)) {
    log << "L_q          " << fixed(loss_constant(d.fisher(), ic), 4) << " dB\n";
  } else {
    err << "warning: continuous Fisher information is not finite for GG noise with beta < 1; loss undefined\n";
  }

  const fs::path table = design_table_path(run.out, req);
  {
    std::ofstream os = io::open_output(table.string());
    io::write_design_table(os, d);
  }
  log << "design table " << table.string() << '\n';
  const fs::path manifest = write_manifest(
      run, "design",
      {{"noise", std::string(family_name(req.noise.family()))},
       {"beta", io::format_number(req.noise.beta(), io::kExactDigits)},
       {"delta", io::format_number(req.noise.delta(), io::kExactDigits)},
       {"nbits", std::to_string(req.n_bits)},
       {"grid", io::join_numbers({req.grid.min, req.grid.max, req.grid.step}, io::kExactDigits)}});
  log << "manifest     " << manifest.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// loss-table

struct LossRow {
  Family family;
  double beta;
  int n_bits;
  double c_delta;
  double iq;
  double ic;
  double lq;
  double lq_w;
  double lq_wd;
};

inline std::vector<LossRow> loss_table(const std::vector<NoiseModel>& noises, const std::vector<int>& n_bits,
                                       const CDeltaGrid& grid = {}) {
  std::vector<LossRow> rows;
  for (const NoiseModel& n : noises) {
    const double ic = fisher_or_nan(n);
    for (int nb : n_bits) {
      const CDeltaOptimum opt = optimize_cdelta(n, 1 << nb, grid);
      const double lq = loss_or_nan(opt.fisher, ic);
      rows.push_back({n.family(), n.beta(), nb, opt.c_delta, opt.fisher, ic, lq, lq / 2.0, lq * 2.0 / 3.0});
    }
  }
  return rows;
}

inline void write_loss_table(std::ostream& os, const std::vector<LossRow>& rows, const CDeltaGrid& grid) {
  io::CsvWriter w(os);
  w.meta("table", "quantization loss, uniform thresholds, c_delta by grid search");
  w.meta("grid", io::join_numbers({grid.min, grid.max, grid.step}, io::kCsvDigits));
  w.header({"family", "beta", "n_bits", "c_delta", "iq", "ic", "lq_db", "lq_wiener_db", "lq_drift_db"});
  for (const LossRow& r : rows) {
    w.row({std::string(family_name(r.family))},
          {r.beta, static_cast<double>(r.n_bits), r.c_delta, r.iq, r.ic, r.lq, r.lq_w, r.lq_wd});
  }
}

inline int cmd_loss_table(const std::vector<NoiseModel>& noises, const std::vector<int>& n_bits,
                          const CDeltaGrid& grid, const RunInfo& run, std::ostream& log) {
  ensure_directory(run.out);
  const std::vector<LossRow> rows = loss_table(noises, n_bits, grid);
  const fs::path path = run.out / "loss_table.csv";
  {
    std::ofstream os = io::open_output(path.string());
    write_loss_table(os, rows, grid);
  }
  log << std::left << std::setw(14) << "noise" << std::setw(6) << "N_B" << std::setw(10) << "c_delta"
      << std::setw(12) << "L_q [dB]" << std::setw(12) << "L_q^W" << "L_q^WD\n";
  for (const LossRow& r : rows) {
    log << std::setw(14) << (std::string(family_name(r.family)) + " " + io::format_number(r.beta)) << std::setw(6)
        << r.n_bits << std::setw(10) << io::format_number(r.c_delta) << std::setw(12) << fixed(r.lq, 4)
        << std::setw(12) << fixed(r.lq_w, 4) << fixed(r.lq_wd, 4) << '\n';
  }
  std::string nb_list;
  for (int nb : n_bits) nb_list += (nb_list.empty() ? "" : ", ") + std::to_string(nb);
  std::string noise_list;
  for (const auto& n : noises) noise_list += (noise_list.empty() ? "" : "; ") + noise_label(n);
  log << "table        " << path.string() << '\n';
  log << "manifest     "
      << write_manifest(run, "loss_table",
                        {{"noises", noise_list},
                         {"nbits", nb_list},
                         {"grid", io::join_numbers({grid.min, grid.max, grid.step}, io::kExactDigits)}})
             .string()
      << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

inline constexpr int kExitDiverged = 3;

inline int cmd_simulate(const ExperimentConfig& cfg, const std::string& stem, const RunInfo& run, std::ostream& log,
                        std::ostream& err) {
  ensure_directory(run.out);
  const ExperimentResult r = cfg.continuous ? run_continuous_reference(cfg) : run_experiment(cfg);
  const fs::path csv = run.out / (stem + ".csv");
  {
    std::ofstream os = io::open_output(csv.string());
    io::write_mse_csv(os, r);
  }
  const fs::path summary = run.out / (stem + "_summary.json");
  {
    std::ofstream os = io::open_output(summary.string());
    os << io::summary_json(r).dump(2) << '\n';
  }
  const fs::path manifest = write_manifest(run, stem, {}, &cfg);

  log << "signal       " << io::signal_kind_name(cfg.signal.kind) << ", " << noise_label(cfg.noise)
      << (cfg.continuous ? ", continuous measurements" : ", N_I=" + std::to_string(cfg.quantizer.n_intervals) +
                                                             " c_delta=" + io::format_number(r.c_delta))
      << '\n';
  log << "replications " << r.replications_used << " of " << cfg.replications << " (" << r.diverged.size()
      << " diverged), horizon " << cfg.horizon << ", burn-in " << cfg.burn_in << '\n';
  log << "asympt. MSE  " << io::format_number(r.asymptotic_mse) << " +/- " << io::format_number(r.asymptotic_mse_se)
      << "  (theory " << io::format_number(r.theory_asymptotic_mse) << ")\n";
  log << "loss         simulated " << fixed(r.simulated_loss_db, 4) << " dB, theory " << fixed(r.theory_loss_db, 4)
      << " dB\n";
  log << "wall time    " << fixed(r.wall_seconds, 2) << " s\n";
  log << "outputs      " << csv.string() << ", " << summary.string() << ", " << manifest.string() << '\n';

  if (!r.diverged.empty()) {
    err << "warning: " << r.diverged.size() << " replication(s) diverged, first index " << r.diverged.front() << '\n';
  }
  if (2 * r.diverged.size() > cfg.replications) {
    err << "error: more than half of the replications diverged\n";
    return kExitDiverged;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// figures

struct FiguresRequest {
  std::size_t replications_constant = 2000;
  std::size_t replications_tracking = 200;
  std::size_t horizon_constant = 2000;
  std::size_t horizon_tracking = 20000;
  std::size_t burn_in = 1000;
  CDeltaGrid grid;
};

/// Roughly log-spaced sample of 1..horizon, always including both ends.
inline std::vector<std::size_t> log_sample(std::size_t horizon, std::size_t points) {
  std::vector<std::size_t> ks;
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    const auto k = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(horizon), t)));
    if (ks.empty() || k > ks.back()) ks.push_back(k);
  }
  if (ks.back() != horizon) ks.push_back(horizon);
  return ks;
}

inline ExperimentConfig figure_config(const NoiseModel& noise, int n_bits, const CDeltaGrid& grid,
                                      const SignalModel& signal, std::size_t reps, std::size_t horizon,
                                      std::size_t burn_in, const RunInfo& run) {
  ExperimentConfig c;
  c.signal = signal;
  c.noise = noise;
  const int n = 1 << n_bits;
  c.quantizer = QuantizerSpec::uniform(n, optimize_cdelta(noise, n, grid).c_delta);
  c.replications = reps;
  c.horizon = horizon;
  c.burn_in = burn_in;
  c.seed = run.seed;
  c.threads = run.threads;
  if (signal.kind == SignalKind::WienerDrift) {
    c.drift.gain = 1e-5;
    c.drift.oracle_u0 = true;
  }
  return c;
}

inline void tracking_columns(io::CsvWriter& w) {
  w.header({"family", "beta", "n_bits", "sigma_w", "u", "c_delta", "asymptotic_mse", "asymptotic_mse_se",
            "theory_mse", "simulated_loss_db", "theory_loss_db", "diverged"});
}

inline void tracking_row(io::CsvWriter& w, const ExperimentResult& r, int n_bits) {
  const ExperimentConfig& c = r.config;
  w.row({std::string(family_name(c.noise.family()))},
        {c.noise.beta(), static_cast<double>(n_bits), c.signal.sigma_w, c.signal.u, r.c_delta, r.asymptotic_mse,
         r.asymptotic_mse_se, r.theory_asymptotic_mse, r.simulated_loss_db, r.theory_loss_db,
         static_cast<double>(r.diverged.size())});
}

inline int cmd_figures(const FiguresRequest& req, const RunInfo& run, std::ostream& log) {
  ensure_directory(run.out);
  const std::vector<NoiseModel> noises = standard_noises();
  const std::vector<NoiseModel> gauss_cauchy{NoiseModel::generalized_gaussian(2.0), NoiseModel::student_t(1.0)};
  std::size_t diverged = 0;

  {  // fig3: theoretical losses
    std::ofstream os = io::open_output((run.out / "fig3.csv").string());
    write_loss_table(os, loss_table(noises, {1, 2, 3, 4, 5}, req.grid), req.grid);
    log << "fig3.csv     loss table\n";
  }

  {  // fig4: constant parameter, loss versus k
    std::ofstream os = io::open_output((run.out / "fig4.csv").string());
    io::CsvWriter w(os);
    w.meta("figure", "constant parameter, simulated loss 10 log10(k MSE_k I_c) and theory L_q");
    w.meta("replications", static_cast<double>(req.replications_constant));
    w.meta("horizon", static_cast<double>(req.horizon_constant));
    w.meta("seed", std::to_string(run.seed));
    w.header({"family", "beta", "n_bits", "k", "simulated_loss_db", "theory_loss_db"});
    const auto ks = log_sample(req.horizon_constant, 60);
    for (const NoiseModel& n : noises) {
      for (int nb : {2, 3, 4, 5}) {
        const ExperimentResult r = run_experiment(figure_config(n, nb, req.grid, SignalModel::constant(0.0),
                                                                req.replications_constant, req.horizon_constant, 0, run));
        diverged += r.diverged.size();
        const std::vector<double> loss = r.loss_curve();
        for (std::size_t k : ks) {
          w.row({std::string(family_name(n.family()))},
                {n.beta(), static_cast<double>(nb), static_cast<double>(k), loss[k - 1], r.theory_loss_db});
        }
      }
      log << "fig4.csv     " << noise_label(n) << '\n';
    }
  }

  auto tracking_figure = [&](const std::string& name, const std::string& title,
                             const std::vector<NoiseModel>& ns, const std::vector<SignalModel>& signals) {
    std::ofstream os = io::open_output((run.out / name).string());
    io::CsvWriter w(os);
    w.meta("figure", title);
    w.meta("replications", static_cast<double>(req.replications_tracking));
    w.meta("horizon", static_cast<double>(req.horizon_tracking));
    w.meta("burn_in", static_cast<double>(req.burn_in));
    w.meta("seed", std::to_string(run.seed));
    tracking_columns(w);
    for (const SignalModel& s : signals) {
      for (const NoiseModel& n : ns) {
        for (int nb : {1, 2, 3, 4, 5}) {
          const ExperimentResult r = run_experiment(figure_config(n, nb, req.grid, s, req.replications_tracking,
                                                                  req.horizon_tracking, req.burn_in, run));
          diverged += r.diverged.size();
          tracking_row(w, r, nb);
        }
        log << name << "     " << noise_label(n) << " sigma_w=" << io::format_number(s.sigma_w) << '\n';
      }
    }
  };

  tracking_figure("fig5.csv", "Wiener process, sigma_w = 0.001", noises, {SignalModel::wiener(1e-3)});
  tracking_figure("fig6.csv", "Wiener process, sigma_w in {0.1, 0.001}", gauss_cauchy,
                  {SignalModel::wiener(0.1), SignalModel::wiener(1e-3)});
  tracking_figure("fig7.csv", "Wiener process with drift, u = sigma_w = 1e-4, drift gain 1e-5, U_0 = u",
                  gauss_cauchy, {SignalModel::drift(1e-4, 1e-4)});

  const fs::path manifest = write_manifest(
      run, "figures",
      {{"replications_constant", std::to_string(req.replications_constant)},
       {"replications_tracking", std::to_string(req.replications_tracking)},
       {"horizon_constant", std::to_string(req.horizon_constant)},
       {"horizon_tracking", std::to_string(req.horizon_tracking)},
       {"burn_in", std::to_string(req.burn_in)},
       {"grid", io::join_numbers({req.grid.min, req.grid.max, req.grid.step}, io::kExactDigits)},
       {"diverged_total", std::to_string(diverged)}});
  log << "manifest     " << manifest.string() << '\n';
  return 0;
}

}  // namespace qadapt::cli
