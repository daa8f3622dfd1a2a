#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ltvcert/builtin_examples.hpp"
#include "ltvcert/cli.hpp"

namespace {

using namespace ltvcert;
namespace fs = std::filesystem;

std::string config_path(const std::string& name) {
  return std::string(LTVCERT_CONFIG_DIR) + "/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("ltvcert-test-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "-" +
             std::to_string(::testing::UnitTest::GetInstance()->random_seed()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void expect_config_error(const std::string& text, const std::string& path_prefix) {
  try {
    config_from_string(text);
    ADD_FAILURE() << "no error for " << text;
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind(path_prefix, 0), 0u) << e.what();
  }
}

TEST(Config, BuiltinsMatchBundledFiles) {
  ASSERT_EQ(std::size(kBuiltinExamples), 3u);
  for (const BuiltinExample& ex : kBuiltinExamples) {
    EXPECT_EQ(std::string(ex.json), slurp(config_path(std::string(ex.file)))) << ex.id;
    EXPECT_NO_THROW(config_from_string(std::string(ex.json)));
  }
  EXPECT_TRUE(find_builtin("paper-sec5"));
  EXPECT_FALSE(find_builtin("nope"));
}

TEST(Config, ExampleFieldsLoad) {
  const SystemConfig cfg = load_config(config_path("paper_sec5.json"));
  EXPECT_EQ(cfg.dimension, 2);
  EXPECT_TRUE(cfg.trajectory.periodic());
  EXPECT_EQ(*cfg.analysis.kappa, 1.0);
  EXPECT_EQ(*cfg.analysis.lambda, 0.238);
  EXPECT_TRUE(cfg.perturbation.has_explicit_g());
  const RegularityReport r = regularity_of(cfg);
  EXPECT_NEAR(r.alpha_max, 0.1, 1e-6);
  EXPECT_EQ(r.jump_count_per_window, 1);
}

TEST(Config, StructuralErrorsCarryFieldPaths) {
  const std::string head = R"({"schema_version": 1, "dimension": 1, )";
  expect_config_error(head + R"("segments": [{"t_start": 0, "t_end": 2, "entries": [["0"]]},
                                             {"t_start": 1, "t_end": 3, "entries": [["1"]]}]})",
                      "$.segments[1].t_start");
  expect_config_error(head + R"("segments": [{"t_start": 0, "t_end": 1, "entries": [["0"]]},
                                             {"t_start": 2, "t_end": 3, "entries": [["1"]]}]})",
                      "$.segments[1].t_start");
  expect_config_error(head + R"("segments": [{"t_start": 0, "t_end": 1, "entries": [["sin(t"]]}]})",
                      "$.segments[0].entries");
  expect_config_error(head + R"("segments": []})", "$.segments");
  expect_config_error(R"({"schema_version": 2, "dimension": 1})", "$.schema_version");
  expect_config_error(head + R"("period": 2, "segments": [{"t_start": 0, "t_end": 1, "entries": [["0"]]}]})",
                      "$.period");
  expect_config_error(head + R"("segments": [{"t_start": 0, "t_end": 1, "entries": [["0"]]}],
                                "analysis": {"grid_points": 4}})",
                      "$.analysis.grid_points");
  expect_config_error(head + R"("segments": [{"t_start": 0, "t_end": 1, "entries": [["0"]]}],
                                "perturbation": {"g": ["x2"]}})",
                      "$.perturbation.g[0]");
  EXPECT_THROW(config_from_string("{not json"), ConfigError);
}

TEST(Cli, ValidateReportsAndFailsOnOverlap) {
  TempDir tmp;
  std::ostringstream out, err;
  EXPECT_EQ(cmd_validate(config_path("paper_sec5.json"), out, err), kExitOk);
  EXPECT_NE(out.str().find("alpha_max = 0.1"), std::string::npos);
  EXPECT_NE(out.str().find("jumps per window = 1"), std::string::npos);

  std::ofstream(tmp.file("bad.json"))
      << R"({"schema_version": 1, "dimension": 1, "segments": [
            {"t_start": 0, "t_end": 2, "entries": [["0"]]},
            {"t_start": 1, "t_end": 3, "entries": [["1"]]}]})";
  std::ostringstream out2, err2;
  EXPECT_EQ(cmd_validate(tmp.file("bad.json"), out2, err2), kExitInvalid);
  EXPECT_NE(err2.str().find("$.segments[1].t_start"), std::string::npos);

  std::ostringstream out3, err3;
  EXPECT_EQ(cmd_validate(config_path("remark_counterexample.json"), out3, err3), kExitOk);
  EXPECT_NE(out3.str().find("assumption24_suspect = true"), std::string::npos);
}

TEST(Cli, CertifyReportFieldsAndExitCodes) {
  const SystemConfig cfg = load_config(config_path("paper_sec5.json"));
  CertifyFlags flags;
  flags.overrides.kappa = 1.0;
  flags.overrides.lambda = 0.238;
  std::ostringstream out, err;
  ASSERT_EQ(run_certify(cfg, flags, out, err), kExitOk);
  const Json j = Json::parse(out.str());
  const Json& c = j["certificate"];
  EXPECT_NEAR(c["int_phi"].get<double>(), 2.2, 1e-3);
  EXPECT_NEAR(c["int_gamma"].get<double>(), 0.8, 1e-3);
  EXPECT_NEAR(c["tv_tilde"].get<double>(), 2.2, 1e-3);
  EXPECT_NEAR(c["lhs"].get<double>(), 1.4738, 1e-3);
  EXPECT_NEAR(c["rhs"].get<double>(), 1.4954, 1e-3);
  EXPECT_TRUE(c["feasible"].get<bool>());
  EXPECT_EQ(j["defaults"]["lambda_source"], "given");

  flags.overrides.lambda = 0.2;
  std::ostringstream out2, err2;
  EXPECT_EQ(run_certify(cfg, flags, out2, err2), kExitInfeasible);
  EXPECT_TRUE(Json::parse(out2.str())["certificate"]["rho"].is_null());

  std::ostringstream out3, err3;
  EXPECT_EQ(cmd_certify(config_path("constant_hurwitz.json"), {}, out3, err3), kExitOk);
  EXPECT_EQ(Json::parse(out3.str())["certificate"]["lhs"].get<double>(), 0.0);

  std::ostringstream out4, err4;
  EXPECT_EQ(cmd_certify("/nonexistent/config.json", {}, out4, err4), kExitInvalid);
}

TEST(Cli, CertifyOutputIsByteIdentical) {
  const SystemConfig cfg = load_config(config_path("paper_sec5.json"));
  std::ostringstream a, b, e;
  run_certify(cfg, {}, a, e);
  run_certify(cfg, {}, b, e);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Cli, CertifyJsonRoundTripsThroughCertificateReader) {
  const SystemConfig cfg = load_config(config_path("paper_sec5.json"));
  const AnalysisResult r = analyze(cfg);
  const Certificate back = certificate_from_json(certify_report(r));
  EXPECT_EQ(back.feasible, r.certificate.feasible);
  EXPECT_EQ(back.rho, r.certificate.rho);
  EXPECT_EQ(back.iss->k3, r.certificate.iss->k3);
  EXPECT_EQ(back.constants.c1, r.certificate.constants.c1);
}

TEST(Cli, SimulateWithIssCheck) {
  TempDir tmp;
  const SystemConfig cfg = load_config(config_path("paper_sec5.json"));
  CertifyFlags cf;
  cf.json_out = tmp.file("cert.json");
  std::ostringstream o1, e1;
  ASSERT_EQ(run_certify(cfg, cf, o1, e1), kExitOk);

  SimulateFlags sf;
  sf.check_iss = tmp.file("cert.json");
  sf.csv = tmp.file("trace.csv");
  std::ostringstream o2, e2;
  EXPECT_EQ(run_simulate(cfg, sf, o2, e2), kExitOk) << o2.str() << e2.str();
  EXPECT_NE(o2.str().find("monitor: ok"), std::string::npos);
  EXPECT_NE(o2.str().find("iss: ok"), std::string::npos);
  std::ifstream csv(tmp.file("trace.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "t,x1,x2,norm_x,V,W,xi,envelope");
}

TEST(Cli, SimulateZeroStateAndBadInputs) {
  const SystemConfig cfg = load_config(config_path("paper_sec5.json"));
  SimulateFlags sf;
  sf.x0 = std::vector<double>{0.0, 0.0};
  sf.tf = 1.0;
  std::ostringstream out, err;
  ASSERT_EQ(run_simulate(cfg, sf, out, err), kExitOk);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    ASSERT_EQ(line.substr(c1 + 1, c3 - c1 - 1), "0,0");
  }

  sf.x0 = std::vector<double>{1.0};
  std::ostringstream o2, e2;
  EXPECT_EQ(detail::guarded(e2, [&] { return run_simulate(cfg, sf, o2, e2); }), kExitInvalid);

  SimulateFlags missing;
  missing.check_iss = "/nonexistent/cert.json";
  std::ostringstream o3, e3;
  EXPECT_EQ(detail::guarded(e3, [&] { return run_simulate(cfg, missing, o3, e3); }), kExitInvalid);
}

TEST(Cli, EnvelopeViolationExitsWithThree) {
  const SystemConfig cfg = config_from_string(R"({
    "schema_version": 1, "dimension": 1,
    "segments": [{"t_start": 0, "t_end": 1, "entries": [["-1"]]}],
    "perturbation": {"gamma": "0.01", "g": ["0.5*x1"]}})");
  std::ostringstream out, err;
  EXPECT_EQ(detail::guarded(err, [&] { return run_simulate(cfg, {}, out, err); }), kExitViolation);
  EXPECT_NE(err.str().find("exceeds gamma"), std::string::npos);
}

TEST(Cli, ReproduceGoldenExamples) {
  for (const char* id : {"paper-sec5", "remark-counterexample", "switched-demo"}) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_reproduce(id, out, err), kExitOk) << id << "\n" << out.str() << err.str();
    EXPECT_NE(out.str().find("all golden values match"), std::string::npos);
  }
  std::ostringstream out, err;
  EXPECT_EQ(cmd_reproduce("unknown", out, err), kExitInvalid);
}

}  // namespace
