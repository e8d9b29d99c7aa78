#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

#ifndef QADAPT_CONFIG_DIR
#define QADAPT_CONFIG_DIR "configs"
#endif

namespace {

using namespace qadapt;
namespace fs = std::filesystem;

struct NoiseFlags {
  std::optional<std::string> family;
  std::optional<double> beta;
  std::optional<double> delta;

  void attach(CLI::App* app) {
    app->add_option("--noise", family, "noise family")->check(CLI::IsMember({"gg", "st"}));
    app->add_option("--beta", beta, "shape parameter (GG exponent or ST degrees of freedom)");
    app->add_option("--delta", delta, "noise scale")->check(CLI::PositiveNumber);
  }

  bool any() const { return family || beta || delta; }

  NoiseModel apply(const NoiseModel& base) const {
    return NoiseModel(family ? parse_family(*family) : base.family(), beta.value_or(base.beta()),
                      delta.value_or(base.delta()));
  }
};

struct GridFlags {
  CDeltaGrid grid;
  bool set = false;

  void attach(CLI::App* app) {
    auto mark = [this](double) { set = true; };
    app->add_option_function<double>("--grid-min", [this, mark](double v) { grid.min = v; mark(v); }, "c_delta grid start");
    app->add_option_function<double>("--grid-max", [this, mark](double v) { grid.max = v; mark(v); }, "c_delta grid end");
    app->add_option_function<double>("--grid-step", [this, mark](double v) { grid.step = v; mark(v); }, "c_delta grid step");
  }
};

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

fs::path find_config(const std::string& name) {
  if (fs::exists(name)) return name;
  for (const fs::path& candidate : {fs::path(QADAPT_CONFIG_DIR) / (name + ".ini"), fs::path(QADAPT_CONFIG_DIR) / name}) {
    if (fs::exists(candidate)) return candidate;
  }
  throw ConfigError("config '" + name + "' not found (neither a file nor a bundled config name)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive estimation from quantized measurements: quantizer design, loss tables and Monte Carlo runs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qadapt::version));

  cli::RunInfo run;
  run.command_line = command_line(argc, argv);
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out = ".";
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "64-bit seed");
    sub->add_option("--threads", threads, "worker threads (0: all cores)");
  };

  // design
  auto* design = app.add_subcommand("design", "optimal uniform quantizer for one noise model");
  NoiseFlags design_noise;
  GridFlags design_grid;
  int design_bits = 1;
  design_noise.attach(design);
  design_grid.attach(design);
  design->add_option("--nbits", design_bits, "number of quantizer bits")->check(CLI::Range(1, 20))->capture_default_str();
  add_common(design);

  // loss-table
  auto* losses = app.add_subcommand("loss-table", "quantization losses for a set of noises and bit counts");
  NoiseFlags loss_noise;
  GridFlags loss_grid;
  std::vector<int> loss_bits{1, 2, 3, 4, 5};
  loss_noise.attach(losses);
  loss_grid.attach(losses);
  losses->add_option("--nbits", loss_bits, "bit counts")->check(CLI::Range(1, 20))->capture_default_str();
  add_common(losses);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo run from a config file");
  NoiseFlags sim_noise;
  GridFlags sim_grid;
  std::string config_name;
  std::optional<int> sim_bits;
  std::optional<std::size_t> sim_reps;
  std::optional<std::size_t> sim_horizon;
  simulate->add_option("--config", config_name, "config file or bundled config name")->required();
  sim_noise.attach(simulate);
  sim_grid.attach(simulate);
  simulate->add_option("--nbits", sim_bits, "number of quantizer bits")->check(CLI::Range(1, 20));
  simulate->add_option("--replications", sim_reps, "replication count")->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", sim_horizon, "steps per replication")->check(CLI::PositiveNumber);
  add_common(simulate);

  // figures
  auto* figures = app.add_subcommand("figures", "CSV data for the loss and MSE figures");
  cli::FiguresRequest fig;
  GridFlags fig_grid;
  std::optional<std::size_t> fig_reps;
  fig_grid.attach(figures);
  figures->add_option("--replications", fig_reps, "replications for every Monte Carlo panel")
      ->check(CLI::PositiveNumber);
  add_common(figures);

  CLI11_PARSE(app, argc, argv);

  try {
    run.out = out;
    run.seed = seed.value_or(1);
    run.threads = threads.value_or(0);

    if (*design) {
      run.subcommand = "design";
      cli::DesignRequest req;
      req.noise = design_noise.apply(req.noise);
      req.n_bits = design_bits;
      req.grid = design_grid.grid;
      return cli::cmd_design(req, run, std::cout, std::cerr);
    }
    if (*losses) {
      run.subcommand = "loss-table";
      std::vector<NoiseModel> noises = standard_noises();
      if (loss_noise.any()) noises = {loss_noise.apply(NoiseModel::generalized_gaussian(2.0))};
      return cli::cmd_loss_table(noises, loss_bits, loss_grid.grid, run, std::cout);
    }
    if (*simulate) {
      run.subcommand = "simulate";
      const fs::path path = find_config(config_name);
      std::ifstream is(path);
      if (!is) throw ConfigError("cannot read config '" + path.string() + "'");
      config::LoadedConfig loaded = config::parse(is);
      ExperimentConfig& c = loaded.experiment;
      c.noise = sim_noise.apply(c.noise);
      if (sim_bits) c.quantizer = QuantizerSpec::uniform(1 << *sim_bits, c.quantizer.c_delta);
      if (sim_grid.set) {
        loaded.grid = sim_grid.grid;
        loaded.auto_c_delta = true;
      }
      // A different noise or resolution invalidates a fixed c_delta from the file.
      if (sim_noise.any() || sim_bits) loaded.auto_c_delta = true;
      if (sim_reps) c.replications = *sim_reps;
      if (sim_horizon) c.horizon = *sim_horizon;
      if (seed) c.seed = *seed;
      if (threads) c.threads = *threads;
      const ExperimentConfig resolved = config::resolve(std::move(loaded));
      run.seed = resolved.seed;
      run.threads = resolved.threads;
      return cli::cmd_simulate(resolved, path.stem().string(), run, std::cout, std::cerr);
    }
    if (*figures) {
      run.subcommand = "figures";
      fig.grid = fig_grid.grid;
      if (fig_reps) fig.replications_constant = fig.replications_tracking = *fig_reps;
      return cli::cmd_figures(fig, run, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
