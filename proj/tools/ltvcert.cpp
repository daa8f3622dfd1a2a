// ltvcert: certify exponential ISS of linear time-varying systems with jumps.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltvcert/cli.hpp"

int main(int argc, char** argv) {
  using namespace ltvcert;
  CLI::App app{"Stability certificates for x' = A(t) x + g(t, x) with piecewise closed-form A(t)"};
  app.require_subcommand(1);

  std::string config;

  auto* validate = app.add_subcommand("validate", "Check regularity assumptions of a system file");
  validate->add_option("config", config, "System definition (JSON)")->required();

  auto* certify = app.add_subcommand("certify", "Evaluate the window criterion and emit a certificate");
  certify->add_option("config", config, "System definition (JSON)")->required();
  std::optional<double> kappa, lambda, rho;
  std::optional<std::string> mode, json_out;
  certify->add_option("--kappa", kappa, "Stability margin kappa > 0");
  certify->add_option("--lambda", lambda, "Slope lambda (scanned when omitted)");
  certify->add_option("--rho", rho, "Offset rho (minimal when omitted)");
  certify->add_option("--mode", mode, "Constants mode")->check(CLI::IsMember({"formula", "spectral"}));
  certify->add_option("--json", json_out, "Write the JSON report here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "Integrate the system and write a CSV trace");
  simulate->add_option("config", config, "System definition (JSON)")->required();
  std::optional<std::vector<double>> x0;
  std::optional<double> t0, tf, step;
  std::optional<std::string> csv, check_iss;
  simulate->add_option("--x0", x0, "Initial state")->expected(1, -1);
  simulate->add_option("--t0", t0, "Start time");
  simulate->add_option("--tf", tf, "End time");
  simulate->add_option("--step", step, "Integrator step");
  simulate->add_option("--csv", csv, "Write the trace here instead of stdout");
  simulate->add_option("--check-iss", check_iss, "Certificate report to monitor against");

  std::string example;
  auto* reproduce = app.add_subcommand("reproduce", "Run a built-in example and compare golden values");
  reproduce->add_option("example", example, "paper-sec5 | remark-counterexample | switched-demo")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  if (validate->parsed()) return cmd_validate(config, std::cout, std::cerr);
  if (certify->parsed()) {
    CertifyFlags f;
    f.overrides.kappa = kappa;
    f.overrides.lambda = lambda;
    f.overrides.rho = rho;
    if (mode) f.overrides.mode = *mode == "formula" ? ConstantsMode::kFormula : ConstantsMode::kSpectral;
    f.json_out = json_out;
    return cmd_certify(config, f, std::cout, std::cerr);
  }
  if (simulate->parsed()) {
    SimulateFlags f{x0, t0, tf, step, csv, check_iss};
    return cmd_simulate(config, f, std::cout, std::cerr);
  }
  return cmd_reproduce(example, std::cout, std::cerr);
}
