#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "qadapt/config.hpp"
#include "qadapt/io.hpp"
#include "support/generators.hpp"

using namespace qadapt;

TEST(Format, TwelveSignificantDigits) {
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(io::format_number(1234567.891011121), "1234567.89101");
  EXPECT_EQ(io::format_number(2.5e-7), "2.5e-07");
  EXPECT_EQ(io::format_number(INFINITY), "inf");
  EXPECT_EQ(io::format_number(NAN), "nan");
  EXPECT_EQ(io::parse_number(" inf"), INFINITY);
  EXPECT_THROW(io::parse_number("1.5x"), std::invalid_argument);
}

TEST(Format, ExactDigitsRoundTrip) {
  prop::for_all(1000, 61, [](prop::Gen& g) {
    const double v = g.log_uniform(1e-200, 1e200) * (g.coin() ? 1 : -1);
    EXPECT_EQ(io::parse_number(io::format_number(v, io::kExactDigits)), v);
  });
}

TEST(Csv, MetadataAndRows) {
  std::ostringstream os;
  io::CsvWriter w(os);
  w.meta("seed", "7");
  w.header({"k", "mse"});
  w.row({1.0, 0.25});
  w.row({"gg"}, {2.0});
  EXPECT_EQ(os.str(), "# seed: 7\nk,mse\n1,0.25\ngg,2\n");
}

TEST(DesignTable, RoundTripKeepsFisher) {
  prop::for_all(50, 62, [](prop::Gen& g) {
    const NoiseModel n = g.noise();
    const int nb = g.integer(1, 5);
    const QuantizerDesign d = optimal_uniform_design(n, 1 << nb, CDeltaGrid{0.05, 3.0, 0.05});
    std::stringstream ss;
    io::write_design_table(ss, d);
    const io::DesignTable t = io::read_design_table(ss);
    EXPECT_EQ(t.design.fisher(), d.fisher());
    EXPECT_EQ(t.stored_fisher, d.fisher());
    EXPECT_EQ(io::format_number(t.design.fisher()), io::format_number(d.fisher()));
    ASSERT_EQ(t.design.levels().size(), d.levels().size());
    for (std::size_t i = 0; i < d.levels().size(); ++i) EXPECT_EQ(t.design.levels()[i], d.levels()[i]);
    EXPECT_EQ(t.design.c_delta(), d.c_delta());
  });
}

TEST(DesignTable, RejectsBrokenInput) {
  std::stringstream ss("[noise]\nfamily = gg\n");
  EXPECT_THROW(io::read_design_table(ss), std::invalid_argument);
}

namespace {

const char* kDriftConfig = R"(; comment
[signal]
kind = drift
sigma_w = 1e-4
u = 1e-4

[noise]
family = st
beta = 1

[quantizer]
nbits = 2
c_delta = auto

[experiment]
replications = 50
horizon = 300
burn_in = 100
seed = 18446744073709551615

[drift_estimator]
gain = 1e-5
u0 = oracle
)";

}  // namespace

TEST(Config, ParsesAndResolves) {
  std::istringstream is(kDriftConfig);
  const ExperimentConfig c = config::resolve(config::parse(is));
  EXPECT_EQ(c.signal.kind, SignalKind::WienerDrift);
  EXPECT_EQ(c.noise.family(), Family::StudentT);
  EXPECT_EQ(c.quantizer.n_intervals, 4);
  EXPECT_NEAR(c.quantizer.c_delta, 3.94, 1e-12);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_TRUE(c.drift.oracle_u0);
  EXPECT_EQ(c.burn_in, 100u);
}

TEST(Config, WrittenConfigReproducesExperiment) {
  std::istringstream is(kDriftConfig);
  const ExperimentConfig c = config::resolve(config::parse(is));
  std::stringstream written;
  config::write(written, c);
  const config::LoadedConfig again = config::parse(written);
  EXPECT_FALSE(again.auto_c_delta);
  const ExperimentConfig d = config::resolve(again);
  EXPECT_EQ(d.quantizer.c_delta, c.quantizer.c_delta);
  EXPECT_EQ(d.seed, c.seed);
  EXPECT_EQ(d.signal.u, c.signal.u);
  EXPECT_EQ(run_experiment(d).mse_curve, run_experiment(c).mse_curve);
}

TEST(Config, RejectsSchemaViolations) {
  auto parse = [](const std::string& text) {
    std::istringstream is(text);
    return config::resolve(config::parse(is));
  };
  EXPECT_THROW(parse("[signal]\nkind = constant\nspeed = 3\n"), ConfigError);
  EXPECT_THROW(parse("[signals]\nkind = constant\n"), ConfigError);
  EXPECT_THROW(parse("[noise]\nfamily = gg\n"), ConfigError);
  EXPECT_THROW(parse("[signal]\nkind = wiener\n"), ConfigError);
  EXPECT_THROW(parse("[signal]\nkind = constant\n[experiment]\nhorizon = ten\n"), ConfigError);
  EXPECT_THROW(parse("[signal]\nkind = constant\n[experiment]\nreplications = -3\n"), ConfigError);
  EXPECT_THROW(parse("[signal]\nkind = constant\n[quantizer]\nnbits = 2\nn_intervals = 4\n"), ConfigError);
  EXPECT_THROW(parse("[signal]\nkind = constant\n[noise]\nfamily = gauss\n"), ConfigError);
  EXPECT_NO_THROW(parse("[run]\nanything = goes\n[signal]\nkind = constant\n"));
}
