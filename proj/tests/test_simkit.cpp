#include "optspline/simkit.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "optspline/linear_solver.hpp"
#include "optspline/model.hpp"
#include "optspline/spline.hpp"
#include "optspline/types.hpp"

using namespace optspline;

namespace {

SimConfig preview_config() {
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = TimeHorizon{0.0, 10.0};
  cfg.x0 = Vec::Zero(2);
  cfg.sigma_p = 4.0;
  cfg.f0 = 5.0;
  cfg.sigma_m = 1.0;
  cfg.seed = 42;
  cfg.scheme = SimScheme::kPaperVerlet;
  return cfg;
}

}  // namespace

TEST(SimScheme, NamesRoundTripAndUnknownIsRejected) {
  EXPECT_EQ(to_string(SimScheme::kPaperVerlet), "paper-verlet");
  EXPECT_EQ(to_string(SimScheme::kEulerMaruyama), "euler-maruyama");
  EXPECT_EQ(sim_scheme_from_string("paper-verlet"), SimScheme::kPaperVerlet);
  EXPECT_EQ(sim_scheme_from_string("euler-maruyama"), SimScheme::kEulerMaruyama);
  try {
    sim_scheme_from_string("verlet");
    FAIL() << "expected std::invalid_argument";
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("paper-verlet"), std::string::npos);
    EXPECT_NE(what.find("euler-maruyama"), std::string::npos);
  }
}

TEST(Simulate, VerletVelocityIncrementsHaveTheRequestedVariance) {
  const auto di = preset_double_integrator(2.0, 1.0);
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.horizon = TimeHorizon{0.0, 100.0};
  cfg.x0 = Vec::Zero(2);
  cfg.sigma_p = 2.0;
  cfg.seed = 7;
  const Trajectory traj = simulate(cfg, di.system);
  ASSERT_EQ(traj.states.size(), 10001u);
  ASSERT_EQ(traj.noise.size(), 10000u);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i + 1 < traj.states.size(); ++i) {
    const double dv = traj.states[i + 1][1] - traj.states[i][1];
    sum_sq += dv * dv;
  }
  const double expected = cfg.sigma_p * cfg.sigma_p * cfg.dt * cfg.dt;
  EXPECT_NEAR(sum_sq / 10000.0, expected, 0.05 * expected);
}

TEST(Simulate, NoiselessDoubleIntegratorCoasts) {
  const auto di = preset_double_integrator(1.0, 1.0);
  SimConfig cfg = preview_config();
  cfg.sigma_p = 0.0;
  cfg.x0 = (Vec(2) << 3.0, 0.5).finished();
  for (SimScheme scheme : {SimScheme::kPaperVerlet, SimScheme::kEulerMaruyama}) {
    cfg.scheme = scheme;
    const Trajectory traj = simulate(cfg, di.system);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
      EXPECT_NEAR(traj.states[i][0], 3.0 + 0.5 * traj.times[i], 1e-9);
      EXPECT_NEAR(traj.states[i][1], 0.5, 1e-12);
    }
  }
}

TEST(Simulate, PreviewScenarioHasTheExpectedShape) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const SimConfig cfg = preview_config();
  const Trajectory traj = simulate(cfg, di.system);
  EXPECT_EQ(traj.times.size(), 1001u);
  EXPECT_EQ(traj.states.size(), 1001u);
  EXPECT_EQ(traj.times.front(), 0.0);
  EXPECT_EQ(traj.times.back(), 10.0);
  const MeasurementSet ms = sample_measurements(traj, cfg.f0, cfg.sigma_m, cfg.seed);
  EXPECT_EQ(ms.count(), 51);
  EXPECT_EQ(ms.intervals(), 50);
  EXPECT_DOUBLE_EQ(ms.time(1) - ms.time(0), 0.2);
}

TEST(Simulate, SameSeedReproducesBitIdenticalPathsAndSeedsDecorrelate) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const SimConfig cfg = preview_config();
  const Trajectory a = simulate(cfg, di.system);
  const Trajectory b = simulate(cfg, di.system);
  ASSERT_EQ(a.states.size(), b.states.size());
  for (std::size_t i = 0; i < a.states.size(); ++i) {
    EXPECT_EQ(a.states[i][0], b.states[i][0]);
    EXPECT_EQ(a.states[i][1], b.states[i][1]);
  }
  SimConfig other = cfg;
  other.seed = 43;
  const Trajectory c = simulate(other, di.system);
  EXPECT_NE(a.states.back()[0], c.states.back()[0]);
}

TEST(Simulate, VerletRefusesNonKinematicDrift) {
  const auto pend = preset_pendulum(0.5, 0.1);
  SimConfig cfg = preview_config();
  cfg.scheme = SimScheme::kPaperVerlet;
  cfg.x0 = (Vec(2) << 0.3, 0.0).finished();
  try {
    simulate(cfg, pend.system);
    FAIL() << "expected std::invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("euler-maruyama"), std::string::npos);
  }
}

TEST(Simulate, EulerMaruyamaIntegratesThePendulum) {
  const auto pend = preset_pendulum(1.0, 0.1);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = TimeHorizon{0.0, 2.0};
  cfg.x0 = (Vec(2) << 0.02, 0.0).finished();
  cfg.sigma_p = 0.0;
  cfg.scheme = SimScheme::kEulerMaruyama;
  const Trajectory traj = simulate(cfg, pend.system);
  // Small-angle motion stays close to the cosine solution.
  EXPECT_NEAR(traj.states.back()[0], 0.02 * std::cos(2.0), 2e-4);
}

TEST(SampleMeasurements, RequiresSamplingTimesOnTheGrid) {
  const auto di = preset_double_integrator(1.0, 1.0);
  SimConfig cfg = preview_config();
  cfg.horizon = TimeHorizon{0.0, 1.0};
  const Trajectory traj = simulate(cfg, di.system);
  // 1/3 does not land on the dt = 0.01 grid.
  EXPECT_THROW(sample_measurements(traj, 3.0, 0.1, 1), std::invalid_argument);
  // 2.5 intervals do not fit the horizon at all.
  EXPECT_THROW(sample_measurements(traj, 2.5, 0.1, 1), std::invalid_argument);
  EXPECT_NO_THROW(sample_measurements(traj, 4.0, 0.1, 1));
}

TEST(SampleMeasurements, NoiselessSamplesReadThePositionExactly) {
  const auto di = preset_double_integrator(1.0, 1.0);
  SimConfig cfg = preview_config();
  const Trajectory traj = simulate(cfg, di.system);
  const MeasurementSet ms = sample_measurements(traj, 5.0, 0.0, 9);
  for (int k = 0; k < ms.count(); ++k) {
    const auto idx = static_cast<std::size_t>(std::llround(ms.time(k) / cfg.dt));
    EXPECT_DOUBLE_EQ(ms.value(k)[0], traj.states[idx][0]);
  }
}

TEST(FiniteDifferenceVelocity, ReturnsIntervalSlopes) {
  std::vector<double> times{0.0, 0.5, 1.0};
  std::vector<Vec> values{Vec::Constant(1, 1.0), Vec::Constant(1, 2.0),
                          Vec::Constant(1, 0.0)};
  const MeasurementSet ms(times, values, 2.0);
  const auto slopes = finite_difference_velocity(ms);
  ASSERT_EQ(slopes.size(), 2u);
  EXPECT_DOUBLE_EQ(slopes[0][0], 2.0);
  EXPECT_DOUBLE_EQ(slopes[1][0], -4.0);
}

TEST(DiscretizedGrid, CoversEveryIntervalWithUniformSteps) {
  std::vector<double> times{0.0, 0.5, 1.5};
  std::vector<Vec> values{Vec::Zero(1), Vec::Zero(1), Vec::Zero(1)};
  const MeasurementSet ms(times, values, 2.0);
  const DiscretizedGrid grid = make_discretized_grid(ms, 0.25);
  ASSERT_EQ(grid.times.size(), 7u);  // 2 + 4 steps + initial node
  EXPECT_EQ(grid.knot_node, (std::vector<int>{0, 2, 6}));
  EXPECT_EQ(grid.step_interval, (std::vector<int>{0, 0, 1, 1, 1, 1}));
  for (double dt : grid.step_dt) EXPECT_DOUBLE_EQ(dt, 0.25);
  EXPECT_DOUBLE_EQ(grid.times[3], 0.75);
  EXPECT_THROW(make_discretized_grid(ms, 0.4), std::invalid_argument);
}

TEST(DiscretizedMle, RecoversCollinearMeasurementsExactly) {
  const auto di = preset_double_integrator(1.0, 0.5);
  std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<Vec> values;
  for (double t : times) values.push_back(Vec::Constant(1, 0.3 + 1.2 * t));
  const MeasurementSet ms(times, values, 2.0);
  const DiscretizedMle mle = solve_discretized_mle(di.model, ms, 0.05);
  for (std::size_t i = 0; i < mle.trajectory.times.size(); ++i) {
    EXPECT_NEAR(mle.trajectory.states[i][0],
                0.3 + 1.2 * mle.trajectory.times[i], 1e-9);
    EXPECT_NEAR(mle.trajectory.states[i][1], 1.2, 1e-9);
  }
  for (const Vec& v : mle.v) EXPECT_NEAR(v[0], 0.0, 1e-9);
}

TEST(DiscretizedMle, ConvergesToTheContinuousEstimateAtSecondOrder) {
  const auto di = preset_double_integrator(1.3, 0.7);
  std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<Vec> values{Vec::Constant(1, 0.2), Vec::Constant(1, -1.0),
                          Vec::Constant(1, 0.7), Vec::Constant(1, 0.1),
                          Vec::Constant(1, -0.4)};
  const MeasurementSet ms(times, values, 2.0);
  const Spline closed = solve_spline(di.model, ms);

  auto knot_error = [&](double dt) {
    const DiscretizedMle mle = solve_discretized_mle(di.model, ms, dt);
    double worst = 0.0;
    for (int k = 0; k < ms.count(); ++k) {
      const Vec& x = mle.trajectory.states[mle.grid.knot_node[k]];
      worst = std::max(worst, (x - closed.knot_x[k]).cwiseAbs().maxCoeff());
    }
    return worst;
  };

  const double e4 = knot_error(4e-3);
  const double e2 = knot_error(2e-3);
  const double e1 = knot_error(1e-3);
  EXPECT_LE(e1, 1e-3);
  const double order_a = std::log2(e4 / e2);
  const double order_b = std::log2(e2 / e1);
  EXPECT_GE(order_a, 1.8);
  EXPECT_GE(order_b, 1.8);
}

TEST(DiscretizedMle, ObjectiveDominatesEveryFeasibleCandidate) {
  const auto di = preset_double_integrator(1.0, 0.5);
  std::vector<double> times{0.0, 0.5, 1.0, 1.5};
  std::vector<Vec> values{Vec::Constant(1, 0.0), Vec::Constant(1, 1.0),
                          Vec::Constant(1, -0.5), Vec::Constant(1, 0.2)};
  const MeasurementSet ms(times, values, 2.0);
  const DiscretizedMle mle = solve_discretized_mle(di.model, ms, 0.05);

  // Candidate: forcing read off the continuous estimate at step midpoints,
  // propagated through the same discrete dynamics.
  const Spline closed = solve_spline(di.model, ms);
  std::vector<Vec> v;
  for (std::size_t j = 0; j + 1 < mle.grid.times.size(); ++j) {
    const double mid = 0.5 * (mle.grid.times[j] + mle.grid.times[j + 1]);
    v.push_back(eval_spline(closed, mid).v);
  }
  const Vec x0 = eval_spline(closed, ms.time(0)).x;
  const std::vector<Vec> states = propagate_midpoint(di.model, mle.grid, x0, v);
  const double candidate =
      discretized_objective(di.model, ms, mle.grid, states, v);
  EXPECT_GE(candidate, mle.objective - 1e-12);

  // And the optimum reproduces its own objective through the same path.
  const double self = discretized_objective(di.model, ms, mle.grid,
                                            mle.trajectory.states, mle.v);
  EXPECT_NEAR(self, mle.objective, 1e-9 * std::max(1.0, std::abs(mle.objective)));
}
