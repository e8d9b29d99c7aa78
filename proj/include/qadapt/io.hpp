#pragma once

// Text output: CSV with '#' metadata lines, JSON summaries and the design
// table. Numbers are written with the C locale.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "qadapt/analysis.hpp"
#include "qadapt/quantizer.hpp"
#include "qadapt/simulator.hpp"

namespace qadapt::io {

inline constexpr int kCsvDigits = 12;
inline constexpr int kExactDigits = 17;

/// %.{digits}g; infinities as "inf"/"-inf", NaN as "nan".
inline std::string format_number(double v, int digits = kCsvDigits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline double parse_number(const std::string& s) {
  std::string t;
  for (char c : s) {
    if (c != ' ' && c != '\t' && c != '\r') t += c;
  }
  if (t == "inf" || t == "+inf") return kInf;
  if (t == "-inf") return -kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != t.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

inline std::string join_numbers(const std::vector<double>& v, int digits) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_number(v[i], digits);
  }
  return out;
}

inline std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
  return out;
}

/// CSV writer: '#' metadata lines, then a header row and numeric rows.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void meta(const std::string& key, const std::string& value) { os_ << "# " << key << ": " << value << '\n'; }
  void meta(const std::string& key, double value) { meta(key, format_number(value)); }

  void header(const std::vector<std::string>& columns) { write_row(columns); }

  void row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_number(v));
    write_row(cells);
  }

  /// Leading text cells followed by numbers.
  void row(const std::vector<std::string>& labels, const std::vector<double>& values) {
    std::vector<std::string> cells = labels;
    for (double v : values) cells.push_back(format_number(v));
    write_row(cells);
  }

 private:
  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << cells[i];
    }
    os_ << '\n';
  }

  std::ostream& os_;
};

inline std::ofstream open_output(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  return os;
}

// ---------------------------------------------------------------------------
// Experiment results.

inline std::string signal_kind_name(SignalKind k) { return std::string(gain_kind_name(k)); }

inline void write_experiment_metadata(CsvWriter& w, const ExperimentResult& r) {
  const ExperimentConfig& c = r.config;
  w.meta("signal", signal_kind_name(c.signal.kind));
  w.meta("noise", std::string(family_name(c.noise.family())));
  w.meta("beta", c.noise.beta());
  w.meta("delta", c.noise.delta());
  w.meta("measurement", c.continuous ? "continuous" : "quantized");
  if (!c.continuous) {
    w.meta("n_intervals", static_cast<double>(c.quantizer.n_intervals));
    w.meta("c_delta", r.c_delta);
  }
  w.meta("sigma_w", c.signal.sigma_w);
  w.meta("u", c.signal.u);
  w.meta("replications", static_cast<double>(c.replications));
  w.meta("replications_used", static_cast<double>(r.replications_used));
  w.meta("horizon", static_cast<double>(c.horizon));
  w.meta("burn_in", static_cast<double>(c.burn_in));
  w.meta("seed", std::to_string(c.seed));
  w.meta("fisher_quantized", r.fisher_quantized);
  w.meta("fisher_continuous", r.fisher_continuous);
  w.meta("asymptotic_mse", r.asymptotic_mse);
  w.meta("asymptotic_mse_se", r.asymptotic_mse_se);
  w.meta("theory_asymptotic_mse", r.theory_asymptotic_mse);
  w.meta("simulated_loss_db", r.simulated_loss_db);
  w.meta("theory_loss_db", r.theory_loss_db);
}

/// Columns k, mse, theory_mse. Wall time is deliberately absent so equal
/// configurations give byte-identical files.
inline void write_mse_csv(std::ostream& os, const ExperimentResult& r) {
  CsvWriter w(os);
  write_experiment_metadata(w, r);
  w.header({"k", "mse", "theory_mse"});
  for (std::size_t i = 0; i < r.mse_curve.size(); ++i) {
    w.row({static_cast<double>(i + 1), r.mse_curve[i], r.theory_mse[i]});
  }
}

inline nlohmann::json summary_json(const ExperimentResult& r) {
  const ExperimentConfig& c = r.config;
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return format_number(v);
  };
  nlohmann::json j;
  j["signal"] = signal_kind_name(c.signal.kind);
  j["noise"] = {{"family", std::string(family_name(c.noise.family()))},
                {"beta", c.noise.beta()},
                {"delta", c.noise.delta()}};
  j["measurement"] = c.continuous ? "continuous" : "quantized";
  if (!c.continuous) {
    j["quantizer"] = {{"n_intervals", c.quantizer.n_intervals}, {"c_delta", r.c_delta}, {"levels", r.levels}};
  }
  j["gain"] = {{"kind", std::string(gain_kind_name(r.schedule.kind))},
               {"fisher", r.schedule.fisher},
               {"sigma_w", r.schedule.sigma_w},
               {"drift_gain", r.schedule.drift_gain}};
  j["fisher_quantized"] = num(r.fisher_quantized);
  j["fisher_continuous"] = num(r.fisher_continuous);
  j["loss_db"] = {{"simulated", num(r.simulated_loss_db)},
                  {"theory", num(r.theory_loss_db)},
                  {"constant", num(std::isfinite(r.fisher_continuous)
                                       ? loss_constant(r.fisher_quantized, r.fisher_continuous)
                                       : r.fisher_continuous)}};
  j["asymptotic_mse"] = {{"simulated", num(r.asymptotic_mse)},
                         {"standard_error", num(r.asymptotic_mse_se)},
                         {"theory", num(r.theory_asymptotic_mse)},
                         {"continuous_reference", num(r.reference_mse)}};
  j["replications"] = {{"requested", c.replications}, {"used", r.replications_used}, {"diverged", r.diverged}};
  j["horizon"] = c.horizon;
  j["burn_in"] = c.burn_in;
  j["seed"] = c.seed;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

// ---------------------------------------------------------------------------
// Design table: an INI file holding enough to rebuild the design exactly.

inline void write_design_table(std::ostream& os, const QuantizerDesign& d) {
  const NoiseModel& n = d.noise();
  double ic = std::numeric_limits<double>::quiet_NaN();
  try {
    ic = n.fisher_information();
  } catch (const std::domain_error&) {
  }
  os << "; quantizer design table\n";
  os << "[noise]\n";
  os << "family = " << family_name(n.family()) << '\n';
  os << "beta = " << format_number(n.beta(), kExactDigits) << '\n';
  os << "delta = " << format_number(n.delta(), kExactDigits) << '\n';
  os << "\n[quantizer]\n";
  os << "n_intervals = " << d.n_intervals() << '\n';
  os << "c_delta = " << format_number(d.c_delta(), kExactDigits) << '\n';
  os << "tau = " << join_numbers(d.spec().tau, kExactDigits) << '\n';
  os << "levels = " << join_numbers({d.levels().begin(), d.levels().end()}, kExactDigits) << '\n';
  os << "mass = " << join_numbers({d.mass().begin(), d.mass().end()}, kExactDigits) << '\n';
  os << "density_drop = " << join_numbers({d.density_drop().begin(), d.density_drop().end()}, kExactDigits)
     << '\n';
  os << "\n[information]\n";
  os << "fisher_quantized = " << format_number(d.fisher(), kExactDigits) << '\n';
  os << "fisher_continuous = " << format_number(ic, kExactDigits) << '\n';
  os << "loss_db = " << format_number(std::isfinite(ic) ? loss_constant(d.fisher(), ic) : ic, kExactDigits)
     << '\n';
}

struct DesignTable {
  QuantizerDesign design;  // rebuilt from noise and thresholds, with the stored levels
  double stored_fisher;
};

inline DesignTable read_design_table(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::invalid_argument(std::string("design table: ") + e.what());
  }
  try {
    const NoiseModel noise(parse_family(tree.get<std::string>("noise.family")),
                           parse_number(tree.get<std::string>("noise.beta")),
                           parse_number(tree.get<std::string>("noise.delta")));
    QuantizerSpec spec;
    spec.n_intervals = tree.get<int>("quantizer.n_intervals");
    spec.c_delta = parse_number(tree.get<std::string>("quantizer.c_delta"));
    spec.tau = split_numbers(tree.get<std::string>("quantizer.tau"));
    spec.validate();
    QuantizerDesign design =
        QuantizerDesign::build(noise, spec).with_levels(split_numbers(tree.get<std::string>("quantizer.levels")));
    return {std::move(design), parse_number(tree.get<std::string>("information.fisher_quantized"))};
  } catch (const pt::ptree_error& e) {
    throw std::invalid_argument(std::string("design table: ") + e.what());
  }
}

}  // namespace qadapt::io
