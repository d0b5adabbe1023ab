// kfp: check | certify | simulate | report
// Exit codes: 0 success, 1 mathematical failure, 2 usage or configuration error.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kfp/kfp.hpp"

namespace fs = std::filesystem;
using namespace kfp;

namespace {

struct Overrides {
  std::string config;
  std::string model;
  double theta = 0;
  int dim = 0;
  std::string output_dir;
  double radius = 0;
  int resolution = 0, quasi_random = -1;
  std::uint64_t seed = 0;
  int Nx = 0, Np = 0;
  double P = 0, tmax = -1, dt = 0, sample_dt = 0, margin = 0;
  std::string initial, certificate;
  CLI::App* app = nullptr;

  bool given(const char* name) const {
    const CLI::Option* opt = app->get_option_no_throw(name);
    return opt && opt->count() > 0;
  }
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "INI run configuration");
  sub->add_option("--model", o.model, "classical, relativistic or a model file");
  sub->add_option("--theta", o.theta, "theta for the relativistic model");
  sub->add_option("--output-dir", o.output_dir, "directory for all outputs");
}

RunConfig make_config(const Overrides& o) {
  RunConfig c;
  if (!o.config.empty()) c = load_run_config_file(o.config);
  auto set = [&](const char* flag, auto& field, const auto& value) {
    if (o.given(flag)) field = value;
  };
  set("--model", c.model, o.model);
  if (o.given("--theta")) c.theta = o.theta;
  set("--dim", c.dim, o.dim);
  set("--output-dir", c.output_dir, o.output_dir);
  set("--radius", c.scan.radius, o.radius);
  set("--resolution", c.scan.resolution, o.resolution);
  set("--quasi-random", c.scan.quasi_random, o.quasi_random);
  set("--seed", c.scan.seed, o.seed);
  set("--Nx", c.Nx, o.Nx);
  set("--Np", c.Np, o.Np);
  set("--P", c.P, o.P);
  set("--tmax", c.tmax, o.tmax);
  set("--dt", c.dt, o.dt);
  set("--sample-dt", c.sample_dt, o.sample_dt);
  set("--margin", c.margin, o.margin);
  set("--initial", c.initial, o.initial);
  set("--certificate", c.certificate_path, o.certificate);
  validate(c);
  fs::create_directories(c.output_dir);
  return c;
}

std::string path_in(const RunConfig& c, const char* name) { return (fs::path(c.output_dir) / name).string(); }

std::string check_summary(const AssumptionReport& r) {
  std::ostringstream os;
  os << "model " << r.model_name << " (M = " << r.dim << ")";
  if (r.theta) os << ", theta = " << format_double(*r.theta);
  os << "\nscan: radius " << format_double(r.grid.spec.radius) << ", " << r.grid.points.size() << " points, seed "
     << r.grid.spec.seed << "\n";
  os << "sigma1 = " << format_double(r.sigma1()) << "  sigma2 = " << format_double(r.sigma2()) << "\n";
  os << "beta = " << format_double(r.beta()) << "  gamma = " << format_double(r.gamma())
     << "  omega = " << format_double(r.omega()) << "\n";
  os << "alpha = " << (r.alpha ? format_double(*r.alpha) : std::string("none")) << " (" << to_string(r.alpha_source)
     << ")\n";
  if (!r.warped_note.empty()) os << "warped criterion: " << r.warped_note << "\n";
  if (!r.product_note.empty()) os << "product criterion: " << r.product_note << "\n";
  os << "min |det F| = " << format_double(r.hormander.min_abs_det_F) << "\n";
  os << "curvature " << (r.curvature_ok() ? "ok" : "FAIL") << ", A positive " << (r.dominance.a_positive ? "ok" : "FAIL")
     << ", hormander " << (r.hormander.ok ? "ok" : "FAIL") << ", growth " << (r.growth.ok ? "ok" : "FAIL") << "\n";
  return os.str();
}

std::string witness_summary(const AssumptionReport& r) {
  std::ostringstream os;
  if (!r.curvature_ok())
    os << "curvature witness: smallest eigenvalue " << format_double(r.curvature.min_witness.value) << " at p = "
       << format_point(r.curvature.min_witness.at) << "\n";
  if (r.curvature.partial)
    for (const auto& w : r.curvature.errors) os << "curvature error at " << format_point(w.at) << ": " << w.what << "\n";
  if (!r.dominance.a_positive && r.dominance.degenerate)
    os << "A degenerate at p = " << format_point(r.dominance.degenerate->at) << "\n";
  if (!r.hormander.ok)
    os << "hormander witness: |det F| = " << format_double(r.hormander.witness.value) << " at p = "
       << format_point(r.hormander.witness.at) << "\n";
  if (!r.growth.ok) os << "growth: the ratio max|g^ij| / |p|^2 does not decay along the probe rays\n";
  return os.str();
}

int cmd_check(const RunConfig& c, std::optional<double> alpha) {
  const Model m = resolve_model(c.model, c.theta, c.dim);
  CheckOptions opt;
  opt.grid = c.scan;
  opt.manual_alpha = alpha;
  const AssumptionReport r = check_assumptions(m, opt);
  std::ostringstream kv;
  report_to_kv(r).write(kv);
  write_file(path_in(c, "report.kv"), kv.str());
  const std::string text = check_summary(r);
  write_file(path_in(c, "check.txt"), text + witness_summary(r));
  std::cout << text;
  if (!r.required_ok()) {
    std::cerr << "assumptions not satisfied on the scan grid\n" << witness_summary(r);
    return 1;
  }
  return 0;
}

int cmd_certify(const RunConfig& c, const std::string& report_path, std::optional<double> alpha_flag) {
  const std::string rp = report_path.empty() ? path_in(c, "report.kv") : report_path;
  if (!fs::exists(rp)) {
    if (!report_path.empty()) throw ConfigError("report file not found: " + rp);
    const int rc = cmd_check(c, alpha_flag);
    if (rc != 0) return rc;
  }
  const KeyValues rep = read_kv_file(rp);
  if (rep.has("required_ok") && !rep.flag("required_ok")) {
    const double s1 = rep.number("sigma1");
    if (s1 < 0.0) throw InfeasibleRegion("sigma1 = " + format_double(s1) + " < 0: the curvature lower bound fails");
    throw InfeasibleRegion("the report does not pass the required assumptions");
  }
  const Constants k = constants_from_kv(rep);
  std::optional<double> alpha = alpha_flag;
  if (!alpha && rep.has("alpha")) alpha = rep.number("alpha");
  if (!alpha) throw InvalidCertificate("no log-Sobolev constant alpha in the report; pass --alpha");
  const Certificate cert = make_certificate(k, *alpha, c.margin);
  const auto v = validator::validate({k.sigma1, k.sigma2, k.beta, k.gamma, k.omega, cert.a, cert.b, cert.c, cert.k, cert.d,
                                      cert.lambda, cert.alpha});
  if (!v.ok) {
    std::string why;
    for (const auto& f : v.failures) why += (why.empty() ? "" : "; ") + f;
    throw InvalidCertificate("validator rejected the certificate: " + why);
  }
  std::ostringstream os;
  certificate_to_kv(cert).write(os);
  write_file(path_in(c, "certificate.kv"), os.str());
  std::cout << "a = " << format_double(cert.a) << "  b = " << format_double(cert.b) << "  c = " << format_double(cert.c)
            << "  k = " << format_double(cert.k) << "\n"
            << "d = " << format_double(cert.d) << "  lambda = " << format_double(cert.lambda) << "\n";
  for (const auto& d : cert.diagnostics) std::cout << "note: " << d << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& c, bool muscl, bool diagnostics, double window) {
  const Model m = resolve_model(c.model, c.theta, 1);
  const PhaseGrid G = build_grid(m, c.Nx, c.Np, c.P);
  const State s0 = sample_state(G, initial_datum(c.initial));
  RunOptions opt;
  opt.step.muscl = muscl;
  opt.sample_dt = c.sample_dt;
  {
    const Stepper probe(G);
    opt.dt = c.dt > 0.0 ? c.dt : std::min(c.sample_dt, 0.5 * probe.max_stable_dt());
  }
  std::optional<Certificate> cert;
  std::string cert_path = c.certificate_path;
  if (cert_path.empty() && fs::exists(path_in(c, "certificate.kv"))) cert_path = path_in(c, "certificate.kv");
  if (!cert_path.empty()) cert = certificate_from_kv(read_kv_file(cert_path));

  const RunResult res = run(G, s0, c.tmax, opt, cert ? &*cert : nullptr);
  {
    std::ostringstream os;
    write_series_csv(os, res.series);
    write_file(path_in(c, "series.csv"), os.str());
  }
  const auto& rows = res.series.rows;
  const SeriesChecks checks = check_series(res.series);
  KeyValues sum;
  sum.set("model", m.name());
  if (m.theta()) sum.set("theta", *m.theta());
  sum.set("Nx", c.Nx);
  sum.set("Np", c.Np);
  sum.set("P", c.P);
  sum.set("dt", res.dt_used);
  sum.set("tmax", c.tmax);
  sum.set("initial", c.initial);
  sum.set("tail_mass", G.tail_mass);
  sum.set("mass_drift", res.mass_drift);
  sum.set("D_monotone", checks.D_monotone);
  sum.set("csiszar_kullback_ok", checks.csiszar_kullback);
  std::string notice;
  if (rows.front().D <= 1e-13) {
    notice = "InsufficientDecay: the datum is at equilibrium, no rate fitted";
  } else {
    try {
      const FunctionalSeries fit_rows = above_roundoff(res.series);
      const auto f = fit_rate(fit_rows.times(), fit_rows.column(&FunctionalRow::D), window);
      sum.set("fit_samples", f.samples);
      sum.set("lambda_emp", f.lambda_emp);
      sum.set("fit_r2", f.r2);
    } catch (const Error& e) {
      notice = std::string("InsufficientDecay: ") + e.what();
    }
  }
  if (!notice.empty()) sum.set("notice", notice);
  if (cert) {
    sum.set("lambda_cert", cert->lambda);
    sum.set("decay_allowance", opt.allowance);
    sum.set("decay_ok", res.decay.ok());
    sum.set("decay_violations", res.decay.violations);
  }
  std::ostringstream os;
  sum.write(os);
  if (diagnostics) {
    DiagnosticsOptions dopt;
    dopt.dt = std::min(opt.dt, 1e-4);
    const auto rep = entropy_production_diagnostics(s0, m, G, dopt);
    std::ostringstream ds;
    write_diagnostics(ds, rep);
    write_file(path_in(c, "diagnostics.csv"), ds.str());
    os << "\n# entropy-production residuals at t = 0\n" << ds.str();
  }
  write_file(path_in(c, "summary.kv"), os.str());
  std::cout << os.str();
  if (cert && !res.decay.ok()) {
    std::cerr << "certified decay violated first at t = " << format_double(res.decay.first_violation_t) << "\n";
    return 1;
  }
  return 0;
}

int cmd_report(const RunConfig& c, const std::string& input_dir) {
  const fs::path dir = input_dir.empty() ? fs::path(c.output_dir) : fs::path(input_dir);
  const std::pair<const char*, const char*> parts[] = {
      {"Assumptions", "report.kv"}, {"Certificate", "certificate.kv"}, {"Simulation", "summary.kv"}};
  std::ostringstream os;
  for (const auto& [title, file] : parts) {
    const fs::path p = dir / file;
    if (!fs::exists(p)) throw ConfigError("missing input " + p.string());
  }
  for (const auto& [title, file] : parts) {
    std::ifstream in(dir / file);
    os << "== " << title << " ==\n";
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("# entropy-production", 0) == 0) os << "\n-- entropy-production residuals --\n";
      else if (!line.empty()) os << line << "\n";
    }
    os << "\n";
  }
  write_file(path_in(c, "report.txt"), os.str());
  std::cout << os.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinetic Fokker-Planck hypocoercivity toolkit"};
  app.require_subcommand(1);
  Overrides o;
  double alpha = 0;
  std::string report_path, input_dir;
  bool muscl = false, diagnostics = false;
  double window = 0.5;

  auto* check = app.add_subcommand("check", "scan the assumptions on a momentum grid");
  add_common(check, o);
  check->add_option("--dim", o.dim, "momentum dimension M");
  check->add_option("--radius", o.radius, "scan radius");
  check->add_option("--resolution", o.resolution, "uniform points per axis");
  check->add_option("--quasi-random", o.quasi_random, "number of Halton points");
  check->add_option("--seed", o.seed, "seed of the Halton rotation");
  check->add_option("--alpha", alpha, "log-Sobolev constant to use when no criterion applies");

  auto* certify = app.add_subcommand("certify", "build the decay certificate from a report");
  add_common(certify, o);
  certify->add_option("--dim", o.dim, "momentum dimension M (when the check runs here)");
  certify->add_option("--report", report_path, "report.kv from a previous check");
  certify->add_option("--margin", o.margin, "relative margin above the minimal a");
  certify->add_option("--alpha", alpha, "override the log-Sobolev constant");
  certify->add_option("--radius", o.radius, "scan radius");
  certify->add_option("--resolution", o.resolution, "uniform points per axis");
  certify->add_option("--quasi-random", o.quasi_random, "number of Halton points");
  certify->add_option("--seed", o.seed, "seed of the Halton rotation");

  auto* simulate = app.add_subcommand("simulate", "run the 1D x 1D solver");
  add_common(simulate, o);
  simulate->add_option("--Nx", o.Nx, "cells in x");
  simulate->add_option("--Np", o.Np, "cells in p");
  simulate->add_option("--P", o.P, "momentum truncation");
  simulate->add_option("--tmax", o.tmax, "final time");
  simulate->add_option("--dt", o.dt, "time step (default: half the CFL limit)");
  simulate->add_option("--sample-dt", o.sample_dt, "sampling interval");
  simulate->add_option("--initial", o.initial, "initial datum, expression in x and p");
  simulate->add_option("--certificate", o.certificate, "certificate.kv to compare against");
  simulate->add_flag("--muscl", muscl, "limited second-order transport");
  simulate->add_flag("--diagnostics", diagnostics, "append entropy-production residuals");
  simulate->add_option("--window", window, "tail fraction used by the rate fit");

  auto* report = app.add_subcommand("report", "collate report, certificate and summary");
  add_common(report, o);
  report->add_option("--input-dir", input_dir, "directory holding the earlier outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  CLI::App* active = app.get_subcommands().front();
  o.app = active;
  try {
    const RunConfig c = make_config(o);
    const std::optional<double> a = o.given("--alpha") ? std::optional<double>(alpha) : std::nullopt;
    if (active == check) return cmd_check(c, a);
    if (active == certify) return cmd_certify(c, report_path, a);
    if (active == simulate) return cmd_simulate(c, muscl, diagnostics, window);
    return cmd_report(c, input_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SyntaxError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownIdentifier& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
