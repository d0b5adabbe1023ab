#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "kfp/config.hpp"
#include "kfp/io.hpp"

using namespace kfp;

TEST(Io, FormatDoubleRoundTrips) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int n = 0; n < 1000; ++n) {
    const double x = std::exp(u(rng)) * (n % 2 ? 1 : -1);
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(382.0), "382");
  EXPECT_TRUE(std::isnan(parse_double(format_double(std::nan("")))));
  EXPECT_EQ(parse_double(format_double(-INFINITY)), -INFINITY);
  EXPECT_THROW(parse_double("1.5x"), ConfigError);
  EXPECT_THROW(parse_double(""), ConfigError);
}

TEST(Io, KeyValuesReadWrite) {
  KeyValues kv;
  kv.set("model", "relativistic");
  kv.set("theta", 4.0);
  kv.set("dim", 3);
  kv.set("ok", true);
  kv.set("theta", 5.0);
  std::stringstream ss;
  kv.write(ss);
  EXPECT_EQ(ss.str(), "model = relativistic\ntheta = 5\ndim = 3\nok = true\n");
  const KeyValues back = KeyValues::read(ss);
  EXPECT_EQ(back.items(), kv.items());
  EXPECT_EQ(back.number("theta"), 5.0);
  EXPECT_TRUE(back.flag("ok"));
  EXPECT_THROW(back.get("missing"), ConfigError);
  EXPECT_THROW(back.flag("model"), ConfigError);
  std::istringstream bad("# comment\n\nno equals sign\n");
  EXPECT_THROW(KeyValues::read(bad), ConfigError);
}

TEST(Io, CertificateRoundTrip) {
  const Certificate c = make_certificate({0.5, 5.68, 30.25, 2.598, 100.48}, 0.2);
  std::stringstream ss;
  certificate_to_kv(c).write(ss);
  const Certificate d = certificate_from_kv(KeyValues::read(ss));
  EXPECT_EQ(d.a, c.a);
  EXPECT_EQ(d.b, c.b);
  EXPECT_EQ(d.k, c.k);
  EXPECT_EQ(d.lambda, c.lambda);
  EXPECT_EQ(d.constants.omega, c.constants.omega);
  for (int i = 1; i <= 10; ++i) EXPECT_EQ(d.eps[i], c.eps[i]);
  EXPECT_EQ(d.valid, c.valid);
}

TEST(Io, SeriesCsvRoundTrip) {
  FunctionalSeries s;
  s.rows.push_back({0.0, 0.1, 0.2, -0.01, 0.3, std::nan(""), 1.0, 0.05});
  s.rows.push_back({0.1, 1.0 / 3.0, 2e-17, 0.0, 7.25, 12.5, 1.0 - 1e-15, 0.04});
  std::stringstream ss;
  write_series_csv(ss, s);
  const FunctionalSeries t = read_series_csv(ss);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1].D, 1.0 / 3.0);
  EXPECT_EQ(t.rows[1].mass, 1.0 - 1e-15);
  EXPECT_TRUE(std::isnan(t.rows[0].Emod));
  std::istringstream bad("x,y\n1,2\n");
  EXPECT_THROW(read_series_csv(bad), ConfigError);
}

TEST(Config, IniSectionsOverrideDefaults) {
  std::istringstream in(
      "[model]\nsource = relativistic\ntheta = 2.5\ndim = 1\n"
      "[grid]\nNx = 32\nNp = 64\nP = 6\n"
      "[time]\ntmax = 1.5\nsample_dt = 0.05\n"
      "[initial]\nh = 1 + 0.1*sin(2*pi*x)\n"
      "[output]\ndir = out\n");
  const RunConfig c = load_run_config(in);
  EXPECT_EQ(c.model, "relativistic");
  EXPECT_EQ(*c.theta, 2.5);
  EXPECT_EQ(c.Nx, 32);
  EXPECT_EQ(c.P, 6.0);
  EXPECT_EQ(c.tmax, 1.5);
  EXPECT_EQ(c.output_dir, "out");
  EXPECT_EQ(c.scan.resolution, RunConfig{}.scan.resolution);
  EXPECT_NO_THROW(validate(c));
  EXPECT_NEAR(initial_datum(c.initial)(0.25, 0.0), 1.1, 1e-15);
}

TEST(Config, Errors) {
  std::istringstream bad_num("[grid]\nNx = many\n");
  EXPECT_THROW(load_run_config(bad_num), ConfigError);
  std::istringstream bad_ini("[grid\nNx = 3\n");
  EXPECT_THROW(load_run_config(bad_ini), ConfigError);
  RunConfig c;
  c.P = -1;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.margin = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_THROW(load_run_config_file("/nonexistent/run.cfg"), ConfigError);
  EXPECT_THROW(initial_datum("1 + y"), UnknownIdentifier);
  EXPECT_EQ(resolve_model("classical", std::nullopt, 2).dim(), 2);
  EXPECT_EQ(*resolve_model("relativistic", std::nullopt, 1).theta(), 4.0);
}

TEST(Config, ShippedKineticConfigLoads) {
  const RunConfig c = load_run_config_file(std::string(KFP_SOURCE_DIR) + "/models/classical_kinetic.cfg");
  EXPECT_NO_THROW(validate(c));
}
