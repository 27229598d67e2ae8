#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#ifndef OPTSPLINE_CLI_PATH
#error "OPTSPLINE_CLI_PATH must point at the CLI binary"
#endif

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("optspline_cli_" +
            std::string(::testing::UnitTest::GetInstance()
                            ->current_test_info()
                            ->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  RunResult run(const std::string& args) {
    const std::string log = path("run_" + std::to_string(runs_++) + ".log");
    const std::string cmd =
        std::string(OPTSPLINE_CLI_PATH) + " " + args + " > " + log + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult result;
    result.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.output = slurp(log);
    return result;
  }

  std::string slurp(const std::string& p) const {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }

  void spit(const std::string& p, const std::string& text) const {
    std::ofstream out(p, std::ios::binary);
    out << text;
  }

  // A small double-integrator scenario reused by several tests.
  RunResult simulate_small(const std::string& suffix = "") {
    return run("simulate --preset double-integrator --sigma-p 4 --sigma-m 1"
               " --dt 0.01 --t0 0 --tf 2 --f0 2 --seed 7"
               " --trajectory " + path("traj" + suffix + ".csv") +
               " --measurements " + path("meas" + suffix + ".csv") +
               " --manifest " + path("manifest" + suffix + ".json"));
  }

  std::filesystem::path dir_;
  int runs_ = 0;
};

}  // namespace

TEST_F(CliTest, RequiresASubcommand) {
  const RunResult r = run("");
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("enrich --help").code, 0);
}

TEST_F(CliTest, SimulateWritesManifestAndData) {
  const RunResult r = simulate_small();
  ASSERT_EQ(r.code, 0) << r.output;
  const auto manifest = nlohmann::json::parse(slurp(path("manifest.json")));
  EXPECT_EQ(manifest.at("seed"), 7);
  EXPECT_EQ(manifest.at("scheme"), "paper-verlet");
  EXPECT_EQ(manifest.at("preset"), "double-integrator");
  EXPECT_EQ(manifest.at("tool_version"), "0.1.0");
  EXPECT_DOUBLE_EQ(manifest.at("params").at("sigma_p").get<double>(), 4.0);
  // 2 / 0.01 steps + initial row + header.
  const std::string traj = slurp(path("traj.csv"));
  EXPECT_EQ(std::count(traj.begin(), traj.end(), '\n'), 202);
  const std::string meas = slurp(path("meas.csv"));
  EXPECT_EQ(std::count(meas.begin(), meas.end(), '\n'), 6);
}

TEST_F(CliTest, EnrichVerifyRoundTripPasses) {
  ASSERT_EQ(simulate_small().code, 0);
  const RunResult enr =
      run("enrich --preset double-integrator --sigma-p 4 --sigma-m 1"
          " --measurements " + path("meas.csv") +
          " --spline " + path("spline.json") +
          " --dense " + path("dense.csv") + " --points-per-interval 10");
  ASSERT_EQ(enr.code, 0) << enr.output;
  EXPECT_NE(enr.output.find("enrich: 4 intervals"), std::string::npos);
  // 4 intervals x 10 points + final knot + header.
  const std::string dense = slurp(path("dense.csv"));
  EXPECT_EQ(std::count(dense.begin(), dense.end(), '\n'), 42);

  const RunResult ver =
      run("verify --preset double-integrator --sigma-p 4 --sigma-m 1"
          " --spline " + path("spline.json") +
          " --measurements " + path("meas.csv") +
          " --report " + path("report.json"));
  ASSERT_EQ(ver.code, 0) << ver.output;
  EXPECT_NE(ver.output.find("PASS"), std::string::npos);
  const auto report = nlohmann::json::parse(slurp(path("report.json")));
  EXPECT_TRUE(report.at("verified").get<bool>());
  EXPECT_DOUBLE_EQ(report.at("tolerance").get<double>(), 1e-7);
  EXPECT_TRUE(report.contains("r22"));
}

TEST_F(CliTest, RerunsAreByteIdentical) {
  ASSERT_EQ(simulate_small("_a").code, 0);
  ASSERT_EQ(simulate_small("_b").code, 0);
  EXPECT_EQ(slurp(path("traj_a.csv")), slurp(path("traj_b.csv")));
  EXPECT_EQ(slurp(path("meas_a.csv")), slurp(path("meas_b.csv")));
  EXPECT_EQ(slurp(path("manifest_a.json")), slurp(path("manifest_b.json")));

  const std::string args_a = "enrich --preset double-integrator --sigma-p 4"
                             " --sigma-m 1 --measurements " + path("meas_a.csv") +
                             " --spline " + path("sp_a.json") +
                             " --dense " + path("d_a.csv");
  const std::string args_b = "enrich --preset double-integrator --sigma-p 4"
                             " --sigma-m 1 --measurements " + path("meas_a.csv") +
                             " --spline " + path("sp_b.json") +
                             " --dense " + path("d_b.csv");
  ASSERT_EQ(run(args_a).code, 0);
  ASSERT_EQ(run(args_b).code, 0);
  EXPECT_EQ(slurp(path("sp_a.json")), slurp(path("sp_b.json")));
  EXPECT_EQ(slurp(path("d_a.csv")), slurp(path("d_b.csv")));
}

TEST_F(CliTest, FlagsOverrideConfigValues) {
  const std::string cfg = path("cfg.json");
  spit(cfg, R"({
  "preset": "double-integrator",
  "params": {"sigma_p": 1.0, "sigma_m": 1.0},
  "simulate": {"dt": 0.01, "t0": 0.0, "tf": 2.0, "f0": 2.0, "seed": 5,
               "scheme": "paper-verlet"}
})");
  const std::string base =
      " --trajectory " + path("t.csv") + " --measurements " + path("m.csv") +
      " --manifest " + path("man.json");
  ASSERT_EQ(run("simulate --config " + cfg + base).code, 0);
  auto manifest = nlohmann::json::parse(slurp(path("man.json")));
  EXPECT_DOUBLE_EQ(manifest.at("params").at("sigma_p").get<double>(), 1.0);
  EXPECT_EQ(manifest.at("seed"), 5);

  ASSERT_EQ(run("simulate --config " + cfg + " --sigma-p 4 --seed 9" + base)
                .code,
            0);
  manifest = nlohmann::json::parse(slurp(path("man.json")));
  EXPECT_DOUBLE_EQ(manifest.at("params").at("sigma_p").get<double>(), 4.0);
  EXPECT_EQ(manifest.at("seed"), 9);
}

TEST_F(CliTest, AlphaPresetRunsEndToEnd) {
  spit(path("m.csv"), "t,y1\n0,0\n0.5,1\n1,0\n1.5,1\n2,0\n");
  const RunResult enr = run("enrich --preset alpha --alpha 2 --sigma-p 1"
                            " --sigma-m 0.5 --measurements " + path("m.csv") +
                            " --f0 2 --spline " + path("sp.json"));
  ASSERT_EQ(enr.code, 0) << enr.output;
  const RunResult ver = run("verify --preset alpha --alpha 2 --sigma-p 1"
                            " --sigma-m 0.5 --measurements " + path("m.csv") +
                            " --f0 2 --spline " + path("sp.json") +
                            " --report " + path("rep.json"));
  EXPECT_EQ(ver.code, 0) << ver.output;
}

TEST_F(CliTest, SingleMeasurementFileIsAValidationError) {
  spit(path("one.csv"), "t,y1\n0,1\n");
  const RunResult r = run("enrich --preset double-integrator --measurements " +
                          path("one.csv") + " --spline " + path("sp.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("K >= 1"), std::string::npos) << r.output;
}

TEST_F(CliTest, MissingInputFileIsAnIoError) {
  const RunResult r = run("enrich --preset double-integrator --measurements " +
                          path("absent.csv") + " --spline " + path("sp.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("absent.csv"), std::string::npos) << r.output;
}

TEST_F(CliTest, UnknownPresetAndMethodAreReportedWithAlternatives) {
  spit(path("m.csv"), "t,y1\n0,0\n0.5,1\n1,0\n");
  const RunResult bad_preset =
      run("enrich --preset warp --measurements " + path("m.csv") +
          " --spline " + path("sp.json"));
  EXPECT_EQ(bad_preset.code, 1);
  EXPECT_NE(bad_preset.output.find("valid presets"), std::string::npos)
      << bad_preset.output;
  EXPECT_NE(bad_preset.output.find("double-integrator"), std::string::npos);

  spit(path("truth.csv"), "t,x1,x2\n0,0,0\n0.5,1,0\n1,0,0\n");
  const RunResult bad_method =
      run("compare --preset double-integrator --measurements " + path("m.csv") +
          " --truth " + path("truth.csv") +
          " --methods quantum --metrics " + path("met.json"));
  EXPECT_EQ(bad_method.code, 1);
  EXPECT_NE(bad_method.output.find("valid methods"), std::string::npos)
      << bad_method.output;
  EXPECT_NE(bad_method.output.find("finite-difference"), std::string::npos);
}

TEST_F(CliTest, CorruptedEstimateFailsVerificationNamingTheCondition) {
  ASSERT_EQ(simulate_small().code, 0);
  ASSERT_EQ(run("enrich --preset double-integrator --sigma-p 4 --sigma-m 1"
                " --measurements " + path("meas.csv") +
                " --spline " + path("spline.json")).code, 0);
  auto sp = nlohmann::json::parse(slurp(path("spline.json")));
  sp["knots"]["x"][2][0] = sp["knots"]["x"][2][0].get<double>() + 0.25;
  spit(path("tampered.json"), sp.dump(2) + "\n");

  const RunResult ver =
      run("verify --preset double-integrator --sigma-p 4 --sigma-m 1"
          " --spline " + path("tampered.json") +
          " --measurements " + path("meas.csv") +
          " --report " + path("rep.json"));
  EXPECT_EQ(ver.code, 1);
  EXPECT_NE(ver.output.find("FAIL"), std::string::npos) << ver.output;
  EXPECT_NE(ver.output.find("violated"), std::string::npos) << ver.output;
  EXPECT_NE(ver.output.find("x_continuity"), std::string::npos) << ver.output;
  const auto report = nlohmann::json::parse(slurp(path("rep.json")));
  EXPECT_FALSE(report.at("verified").get<bool>());
}

TEST_F(CliTest, WrongModelFailsTheCostateEquation) {
  ASSERT_EQ(simulate_small().code, 0);
  ASSERT_EQ(run("enrich --preset harmonic --omega 2 --sigma-p 4 --sigma-m 1"
                " --measurements " + path("meas.csv") +
                " --spline " + path("spline.json")).code, 0);
  const RunResult ver =
      run("verify --preset double-integrator --sigma-p 4 --sigma-m 1"
          " --spline " + path("spline.json") +
          " --measurements " + path("meas.csv") +
          " --report " + path("rep.json"));
  EXPECT_EQ(ver.code, 1);
  EXPECT_NE(ver.output.find("r22"), std::string::npos) << ver.output;
  // A generous tolerance lets the same pair pass, exercising the flag.
  const RunResult loose =
      run("verify --preset double-integrator --sigma-p 4 --sigma-m 1"
          " --tolerance 1e5 --spline " + path("spline.json") +
          " --measurements " + path("meas.csv") +
          " --report " + path("rep2.json"));
  EXPECT_EQ(loose.code, 0) << loose.output;
}

TEST_F(CliTest, CompareReportsPerMethodErrors) {
  ASSERT_EQ(simulate_small().code, 0);
  const RunResult cmp =
      run("compare --preset double-integrator --sigma-p 4 --sigma-m 1"
          " --measurements " + path("meas.csv") +
          " --truth " + path("traj.csv") +
          " --methods optimal-spline,cubic-spline,finite-difference"
          " --metrics " + path("metrics.json"));
  ASSERT_EQ(cmp.code, 0) << cmp.output;
  const auto metrics = nlohmann::json::parse(slurp(path("metrics.json")));
  const auto& methods = metrics.at("methods");
  ASSERT_TRUE(methods.contains("optimal-spline"));
  ASSERT_TRUE(methods.contains("cubic-spline"));
  ASSERT_TRUE(methods.contains("finite-difference"));
  const double opt = methods.at("optimal-spline").at("rmse_position").get<double>();
  const double cubic = methods.at("cubic-spline").at("rmse_position").get<double>();
  const double fd = methods.at("finite-difference").at("rmse_position").get<double>();
  // For this preset the optimal estimate IS the cubic smoothing spline.
  EXPECT_NEAR(opt, cubic, 1e-9 * std::max(1.0, cubic));
  EXPECT_GT(fd, opt);
  EXPECT_GT(metrics.at("samples").get<int>(), 0);
}
