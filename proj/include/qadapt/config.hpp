#pragma once

// Experiment configuration files (INI). Schema, all keys optional unless
// noted:
//
//   [signal]          kind = constant | wiener | drift      (required)
//                     x0, sigma_w, u
//   [noise]           family = gg | st, beta, delta
//   [quantizer]       measurement = quantized | continuous
//                     nbits or n_intervals, c_delta = <value> | auto
//                     grid_min, grid_max, grid_step        (for c_delta = auto)
//   [experiment]      replications, horizon, burn_in, seed, initial_offset,
//                     initial_spread, divergence_threshold, threads
//   [drift_estimator] gain, u0 = <value> | oracle
//   [run]             ignored on input; written by manifests
//
// Unknown sections or keys are rejected.

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "qadapt/io.hpp"
#include "qadapt/quantizer.hpp"
#include "qadapt/simulator.hpp"

namespace qadapt::config {

struct LoadedConfig {
  ExperimentConfig experiment;
  CDeltaGrid grid;
  bool auto_c_delta = true;
};

inline SignalKind parse_signal_kind(const std::string& s) {
  if (s == "constant") return SignalKind::Constant;
  if (s == "wiener") return SignalKind::Wiener;
  if (s == "drift") return SignalKind::WienerDrift;
  throw ConfigError("unknown signal kind '" + s + "' (expected constant, wiener or drift)");
}

namespace detail {

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"signal", {"kind", "x0", "sigma_w", "u"}},
      {"noise", {"family", "beta", "delta"}},
      {"quantizer", {"measurement", "nbits", "n_intervals", "c_delta", "grid_min", "grid_max", "grid_step"}},
      {"experiment",
       {"replications", "horizon", "burn_in", "seed", "initial_offset", "initial_spread",
        "divergence_threshold", "threads"}},
      {"drift_estimator", {"gain", "u0"}},
      {"run", {}},
  };
  return s;
}

inline void check_schema(const boost::property_tree::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown config section [" + section + "]");
    if (section == "run") continue;
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!it->second.contains(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
  }
}

template <class T>
T get_integer(const boost::property_tree::ptree& t, const std::string& path, T fallback) {
  const auto v = t.get_optional<std::string>(path);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const unsigned long long parsed = std::stoull(*v, &used);
    if (used != v->size() || v->front() == '-') throw std::invalid_argument("bad");
    return static_cast<T>(parsed);
  } catch (const std::exception&) {
    throw ConfigError("'" + path + "' must be a non-negative integer, got '" + *v + "'");
  }
}

inline double get_number(const boost::property_tree::ptree& t, const std::string& path, double fallback) {
  const auto v = t.get_optional<std::string>(path);
  if (!v) return fallback;
  try {
    return io::parse_number(*v);
  } catch (const std::invalid_argument&) {
    throw ConfigError("'" + path + "' must be a number, got '" + *v + "'");
  }
}

}  // namespace detail

inline LoadedConfig parse(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree t;
  try {
    pt::read_ini(is, t);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  detail::check_schema(t);

  LoadedConfig out;
  ExperimentConfig& c = out.experiment;

  const auto kind = t.get_optional<std::string>("signal.kind");
  if (!kind) throw ConfigError("config needs [signal] kind");
  c.signal.kind = parse_signal_kind(*kind);
  c.signal.x0 = detail::get_number(t, "signal.x0", 0.0);
  c.signal.sigma_w = detail::get_number(t, "signal.sigma_w", 0.0);
  c.signal.u = detail::get_number(t, "signal.u", 0.0);

  try {
    c.noise = NoiseModel(parse_family(t.get<std::string>("noise.family", "gg")),
                         detail::get_number(t, "noise.beta", 2.0), detail::get_number(t, "noise.delta", 1.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const std::string measurement = t.get<std::string>("quantizer.measurement", "quantized");
  if (measurement != "quantized" && measurement != "continuous") {
    throw ConfigError("quantizer.measurement must be quantized or continuous");
  }
  c.continuous = measurement == "continuous";
  int n_intervals = 2;
  if (t.get_optional<std::string>("quantizer.n_intervals")) {
    if (t.get_optional<std::string>("quantizer.nbits")) throw ConfigError("give nbits or n_intervals, not both");
    n_intervals = detail::get_integer<int>(t, "quantizer.n_intervals", 2);
  } else {
    const int nbits = detail::get_integer<int>(t, "quantizer.nbits", 1);
    if (nbits < 1 || nbits > 20) throw ConfigError("quantizer.nbits must be in [1, 20]");
    n_intervals = 1 << nbits;
  }
  out.grid.min = detail::get_number(t, "quantizer.grid_min", out.grid.min);
  out.grid.max = detail::get_number(t, "quantizer.grid_max", out.grid.max);
  out.grid.step = detail::get_number(t, "quantizer.grid_step", out.grid.step);
  const std::string cd = t.get<std::string>("quantizer.c_delta", "auto");
  out.auto_c_delta = cd == "auto";
  try {
    c.quantizer = QuantizerSpec::uniform(n_intervals, out.auto_c_delta ? 1.0 : io::parse_number(cd));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("quantizer: ") + e.what());
  }

  c.replications = detail::get_integer<std::size_t>(t, "experiment.replications", c.replications);
  c.horizon = detail::get_integer<std::size_t>(t, "experiment.horizon", c.horizon);
  c.burn_in = detail::get_integer<std::size_t>(t, "experiment.burn_in", c.burn_in);
  c.seed = detail::get_integer<std::uint64_t>(t, "experiment.seed", c.seed);
  c.initial_offset = detail::get_number(t, "experiment.initial_offset", c.initial_offset);
  c.initial_spread = detail::get_number(t, "experiment.initial_spread", c.initial_spread);
  c.divergence_threshold = detail::get_number(t, "experiment.divergence_threshold", c.divergence_threshold);
  c.threads = detail::get_integer<unsigned>(t, "experiment.threads", c.threads);

  c.drift.gain = detail::get_number(t, "drift_estimator.gain", c.drift.gain);
  const std::string u0 = t.get<std::string>("drift_estimator.u0", "0");
  if (u0 == "oracle") {
    c.drift.oracle_u0 = true;
  } else {
    c.drift.u0 = detail::get_number(t, "drift_estimator.u0", 0.0);
  }
  return out;
}

/// Picks c_delta by grid search when the file asked for `auto`, then
/// validates the whole configuration.
inline ExperimentConfig resolve(LoadedConfig loaded) {
  ExperimentConfig c = std::move(loaded.experiment);
  if (loaded.auto_c_delta && !c.continuous) {
    c.quantizer.c_delta = optimize_cdelta(c.noise, c.quantizer.n_intervals, loaded.grid).c_delta;
  }
  c.validate();
  return c;
}

/// Writes a configuration that `parse` reads back to the same experiment,
/// with c_delta fixed to its resolved value.
inline void write(std::ostream& os, const ExperimentConfig& c) {
  auto num = [](double v) { return io::format_number(v, io::kExactDigits); };
  os << "[signal]\n";
  os << "kind = " << io::signal_kind_name(c.signal.kind) << '\n';
  os << "x0 = " << num(c.signal.x0) << '\n';
  os << "sigma_w = " << num(c.signal.sigma_w) << '\n';
  os << "u = " << num(c.signal.u) << '\n';
  os << "\n[noise]\n";
  os << "family = " << family_name(c.noise.family()) << '\n';
  os << "beta = " << num(c.noise.beta()) << '\n';
  os << "delta = " << num(c.noise.delta()) << '\n';
  os << "\n[quantizer]\n";
  os << "measurement = " << (c.continuous ? "continuous" : "quantized") << '\n';
  os << "n_intervals = " << c.quantizer.n_intervals << '\n';
  os << "c_delta = " << num(c.quantizer.c_delta) << '\n';
  os << "\n[experiment]\n";
  os << "replications = " << c.replications << '\n';
  os << "horizon = " << c.horizon << '\n';
  os << "burn_in = " << c.burn_in << '\n';
  os << "seed = " << c.seed << '\n';
  os << "initial_offset = " << num(c.initial_offset) << '\n';
  os << "initial_spread = " << num(c.initial_spread) << '\n';
  os << "divergence_threshold = " << num(c.divergence_threshold) << '\n';
  os << "threads = " << c.threads << '\n';
  os << "\n[drift_estimator]\n";
  os << "gain = " << num(c.drift.gain) << '\n';
  os << "u0 = " << (c.drift.oracle_u0 ? std::string("oracle") : num(c.drift.u0.value_or(0.0))) << '\n';
}

}  // namespace qadapt::config
