#include "optspline/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "optspline/linear_solver.hpp"
#include "optspline/model.hpp"
#include "optspline/nonlinear_solver.hpp"
#include "optspline/rng.hpp"
#include "optspline/simkit.hpp"
#include "optspline/spline.hpp"

using namespace optspline;

namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("optspline_io_" + std::to_string(::testing::UnitTest::GetInstance()
                                                 ->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()
                      ->current_test_info()
                      ->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  std::string slurp(const std::string& p) const {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  }

  void spit(const std::string& p, const std::string& text) const {
    std::ofstream out(p, std::ios::binary);
    out << text;
  }

  std::filesystem::path dir_;
};

MeasurementSet random_measurements(int intervals, double f0, std::uint64_t seed) {
  std::vector<double> times;
  std::vector<Vec> values;
  for (int k = 0; k <= intervals; ++k) {
    times.push_back(k / f0);
    values.push_back(
        Vec::Constant(1, rng::normal(seed, rng::kTestFixture, k, 0)));
  }
  return MeasurementSet(times, values, f0);
}

void expect_splines_agree(const Spline& a, const Spline& b) {
  ASSERT_EQ(a.kind(), b.kind());
  ASSERT_EQ(a.knot_times.size(), b.knot_times.size());
  for (std::size_t k = 0; k < a.knot_times.size(); ++k) {
    EXPECT_DOUBLE_EQ(a.knot_times[k], b.knot_times[k]);
    EXPECT_LT((a.knot_x[k] - b.knot_x[k]).cwiseAbs().maxCoeff(), 1e-14);
  }
  const double t0 = a.knot_times.front();
  const double tf = a.knot_times.back();
  for (int i = 0; i <= 40; ++i) {
    const double t = t0 + (tf - t0) * i / 40.0;
    const SplineEval ea = eval_spline(a, t);
    const SplineEval eb = eval_spline(b, t);
    EXPECT_LT((ea.x - eb.x).cwiseAbs().maxCoeff(), 1e-12) << "t = " << t;
    EXPECT_LT((ea.v - eb.v).cwiseAbs().maxCoeff(), 1e-12) << "t = " << t;
    EXPECT_LT((ea.lambda - eb.lambda).cwiseAbs().maxCoeff(), 1e-12)
        << "t = " << t;
  }
}

}  // namespace

TEST(FormatDouble, ProducesShortestRoundTrips) {
  EXPECT_EQ(io::format_double(0.0), "0");
  EXPECT_EQ(io::format_double(1.0), "1");
  EXPECT_EQ(io::format_double(0.1), "0.1");
  EXPECT_EQ(io::format_double(-2.5), "-2.5");
  for (double v : {1.0 / 3.0, 1e-17, 123456.789, -9.81, 0.30000000000000004}) {
    const std::string s = io::format_double(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
}

TEST_F(IoTest, MeasurementsCsvRoundTripsBytesAndValues) {
  const MeasurementSet ms = random_measurements(6, 2.5, 11);
  const std::string p = path("m.csv");
  io::write_measurements_csv(p, ms);
  const std::string first = slurp(p);
  EXPECT_EQ(first.substr(0, 4), "t,y1");

  const MeasurementSet back = io::read_measurements_csv(p, 2.5);
  ASSERT_EQ(back.count(), ms.count());
  for (int k = 0; k < ms.count(); ++k) {
    EXPECT_EQ(back.time(k), ms.time(k));
    EXPECT_EQ(back.value(k)[0], ms.value(k)[0]);
  }
  EXPECT_DOUBLE_EQ(back.f0(), 2.5);

  io::write_measurements_csv(p, back);
  EXPECT_EQ(slurp(p), first);
}

TEST_F(IoTest, MeasurementsCsvInfersTheSamplingRate) {
  const MeasurementSet ms = random_measurements(8, 4.0, 12);
  const std::string p = path("m.csv");
  io::write_measurements_csv(p, ms);
  const MeasurementSet back = io::read_measurements_csv(p);
  EXPECT_NEAR(back.f0(), 4.0, 1e-12);
}

TEST_F(IoTest, TrajectoryCsvRoundTrips) {
  const auto di = preset_double_integrator(4.0, 1.0);
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.horizon = TimeHorizon{0.0, 2.0};
  cfg.x0 = Vec::Zero(2);
  cfg.sigma_p = 4.0;
  cfg.seed = 3;
  const Trajectory traj = simulate(cfg, di.system);
  const std::string p = path("traj.csv");
  io::write_trajectory_csv(p, traj);
  const std::string first = slurp(p);
  EXPECT_EQ(first.substr(0, 7), "t,x1,x2");

  const Trajectory back = io::read_trajectory_csv(p);
  ASSERT_EQ(back.times.size(), traj.times.size());
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    EXPECT_EQ(back.times[i], traj.times[i]);
    EXPECT_EQ(back.states[i][0], traj.states[i][0]);
    EXPECT_EQ(back.states[i][1], traj.states[i][1]);
  }
  io::write_trajectory_csv(p, back);
  EXPECT_EQ(slurp(p), first);
}

TEST_F(IoTest, LinearGaussianSplineRoundTripsThroughJson) {
  const auto harm = preset_harmonic(2.0, 1.0, 0.3);
  const MeasurementSet ms = random_measurements(5, 2.0, 21);
  const Spline sp = solve_spline(harm.model, ms);
  const nlohmann::json j = io::spline_to_json(sp);
  EXPECT_EQ(j.at("kind"), "linear-gaussian");
  expect_splines_agree(sp, io::spline_from_json(j));
}

TEST_F(IoTest, AlphaSplineRoundTripsThroughJson) {
  const auto preset = preset_alpha_particle(2, 1.0, 0.5);
  const MeasurementSet ms = random_measurements(4, 2.0, 22);
  const Spline sp = solve_alpha(preset, ms);
  const nlohmann::json j = io::spline_to_json(sp);
  EXPECT_EQ(j.at("kind"), "alpha");
  expect_splines_agree(sp, io::spline_from_json(j));
}

TEST_F(IoTest, PolynomialSplineRoundTripsThroughJson) {
  const auto pend = preset_pendulum(0.01, 0.002);
  std::vector<double> times;
  std::vector<Vec> values;
  for (int k = 0; k <= 4; ++k) {
    times.push_back(0.8 * k);
    values.push_back(Vec::Constant(1, 0.04 * std::cos(times.back())));
  }
  const MeasurementSet ms(times, values, 1.25);
  const Spline sp =
      solve_collocation(pend.system, ms, initial_guess(pend.system, ms), 7);
  const nlohmann::json j = io::spline_to_json(sp);
  EXPECT_EQ(j.at("kind"), "polynomial");
  expect_splines_agree(sp, io::spline_from_json(j));
}

TEST_F(IoTest, JsonFileHelpersAreStableOnDisk) {
  const nlohmann::json j = {{"b", 1}, {"a", {1, 2, 3}}, {"c", "text"}};
  const std::string p = path("x.json");
  io::write_json_file(p, j);
  const std::string text = slurp(p);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_NE(text.find("  \"a\""), std::string::npos);
  EXPECT_EQ(io::read_json_file(p), j);
}

TEST_F(IoTest, MissingFilesAreReportedByPath) {
  const std::string p = path("absent.csv");
  try {
    io::read_measurements_csv(p);
    FAIL() << "expected std::runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("absent.csv"), std::string::npos);
  }
  EXPECT_THROW(io::read_trajectory_csv(path("gone.csv")), std::runtime_error);
  EXPECT_THROW(io::read_json_file(path("gone.json")), std::runtime_error);
}

TEST_F(IoTest, MalformedCsvIsRejected) {
  const std::string p = path("bad.csv");
  spit(p, "time,pos\n0,1\n1,2\n");
  EXPECT_THROW(io::read_measurements_csv(p), std::runtime_error);

  spit(p, "t,y1\n0,1\n");
  try {
    io::read_measurements_csv(p);
    FAIL() << "expected failure for a single measurement";
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find("K >= 1"), std::string::npos);
  }

  spit(p, "t,y1\n0,1\n0.5,not_a_number\n");
  EXPECT_THROW(io::read_measurements_csv(p), std::runtime_error);

  spit(p, "t,y1\n0,1\n0.5\n");
  EXPECT_THROW(io::read_measurements_csv(p), std::runtime_error);
}

TEST_F(IoTest, CorruptSplineFilesAreRejected) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const MeasurementSet ms = random_measurements(3, 2.0, 31);
  const nlohmann::json good = io::spline_to_json(solve_spline(di.model, ms));

  nlohmann::json bad = good;
  bad["kind"] = "quintic";
  EXPECT_THROW(io::spline_from_json(bad), std::runtime_error);

  bad = good;
  bad.erase("knots");
  EXPECT_THROW(io::spline_from_json(bad), std::runtime_error);

  const std::string p = path("s.json");
  spit(p, "{ not json");
  try {
    io::read_json_file(p);
    FAIL() << "expected std::runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("s.json"), std::string::npos);
  }
}
