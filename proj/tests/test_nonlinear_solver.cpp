#include "optspline/nonlinear_solver.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "optspline/linear_solver.hpp"
#include "optspline/model.hpp"
#include "optspline/optimality.hpp"
#include "optspline/rng.hpp"
#include "optspline/spline.hpp"
#include "optspline/types.hpp"

using namespace optspline;

namespace {

MeasurementSet scalar_measurements(const std::vector<double>& times,
                                   const std::vector<double>& values,
                                   double f0) {
  std::vector<Vec> wrapped;
  for (double y : values) wrapped.push_back(Vec::Constant(1, y));
  return MeasurementSet(times, wrapped, f0);
}

MeasurementSet zigzag_measurements(int intervals, double f0, double amplitude) {
  std::vector<double> times, values;
  for (int k = 0; k <= intervals; ++k) {
    times.push_back(k / f0);
    values.push_back(k % 2 == 0 ? 0.0 : amplitude);
  }
  return scalar_measurements(times, values, f0);
}

}  // namespace

TEST(SolveAlpha, GaussianExponentReproducesTheLinearClosedForm) {
  const auto gaussian = preset_alpha_particle(1, 1.4, 0.6);
  const auto di = preset_double_integrator(1.4, 0.6);
  std::vector<double> times, values;
  for (int k = 0; k <= 6; ++k) {
    times.push_back(0.5 * k);
    values.push_back(rng::normal(2026, rng::kTestFixture, k, 0));
  }
  const auto ms = scalar_measurements(times, values, 2.0);
  const Spline nonlinear = solve_alpha(gaussian, ms);
  const Spline closed = solve_spline(di.model, ms);
  for (int k = 0; k < ms.count(); ++k) {
    EXPECT_LT((nonlinear.knot_x[k] - closed.knot_x[k]).cwiseAbs().maxCoeff(),
              1e-9);
  }
  const double t = 1.7;
  EXPECT_LT((eval_spline(nonlinear, t).x - eval_spline(closed, t).x)
                .cwiseAbs()
                .maxCoeff(),
            1e-8);
}

TEST(SolveAlpha, HeavyTailedSolutionSatisfiesTheStationarityConditions) {
  const auto preset = preset_alpha_particle(2, 1.0, 0.5);
  const auto ms = zigzag_measurements(5, 2.0, 1.0);
  const Spline sp = solve_alpha(preset, ms);
  const ResidualBundle bundle =
      verify(preset.system, ms, candidate_from_spline(sp));
  EXPECT_LE(bundle.max_residual(), 1e-9) << bundle.to_json().dump(2);
}

TEST(SolveAlpha, QuarticExponentBendsPositionsWithSevenThirdsPower) {
  // Wherever the segment costate a s + b crosses zero, the deviation of the
  // position from its tangent line is exactly proportional to
  // sgn(s) |s|^{7/3}, so doubling the offset scales it by 2^{7/3}.
  const auto preset = preset_alpha_particle(2, 1.0, 0.5);
  const auto ms = zigzag_measurements(5, 2.0, 1.0);
  const Spline sp = solve_alpha(preset, ms);
  int checked = 0;
  for (int k = 0; k < sp.intervals(); ++k) {
    const auto& seg = std::get<AlphaSegment>(sp.segments[k]);
    if (seg.a == 0.0) continue;
    const double gap = sp.knot_times[k + 1] - sp.knot_times[k];
    const double s_zero = -seg.b / seg.a;
    if (s_zero < 0.2 * gap || s_zero > 0.8 * gap) continue;
    const double t_zero = sp.knot_times[k] + s_zero;
    const double x0 = eval_spline(sp, t_zero).x[0];
    const double slope = eval_spline(sp, t_zero).x[1];
    const double delta = 0.05 * gap;
    auto deviation = [&](double offset) {
      return eval_spline(sp, t_zero + offset).x[0] - x0 - slope * offset;
    };
    for (double offset : {delta, -delta}) {
      const double e1 = deviation(offset);
      const double e2 = deviation(2.0 * offset);
      ASSERT_GT(std::abs(e1), 1e-14);
      EXPECT_NEAR(e2 / e1, std::pow(2.0, 7.0 / 3.0),
                  1e-6 * std::pow(2.0, 7.0 / 3.0));
    }
    ++checked;
  }
  EXPECT_GE(checked, 1) << "no segment had an interior costate zero";
}

TEST(SolveAlpha, QuarticExponentViolatesSuperposition) {
  const auto preset = preset_alpha_particle(2, 1.0, 0.5);
  const auto base = zigzag_measurements(5, 2.0, 1.0);
  const auto doubled = zigzag_measurements(5, 2.0, 2.0);
  const Spline sp1 = solve_alpha(preset, base);
  const Spline sp2 = solve_alpha(preset, doubled);
  double worst = 0.0;
  for (int k = 0; k < base.count(); ++k) {
    worst = std::max(worst,
                     (sp2.knot_x[k] - 2.0 * sp1.knot_x[k]).cwiseAbs().maxCoeff());
  }
  EXPECT_GE(worst, 1e-4);
}

TEST(SolveAlpha, ReportsTheBestResidualWhenIterationBudgetIsTooSmall) {
  const auto preset = preset_alpha_particle(2, 1.0, 0.5);
  const auto ms = zigzag_measurements(5, 2.0, 1.0);
  NewtonOptions options;
  options.max_iterations = 0;
  try {
    solve_alpha(preset, ms, options);
    FAIL() << "expected std::runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("no convergence"), std::string::npos);
  }
}

TEST(InitialGuess, ThreadsTheMeasurementsWithDifferencedRates) {
  const auto di = preset_double_integrator(1.0, 1.0);
  std::vector<double> times{0.0, 0.5, 1.0, 1.5};
  std::vector<double> values{0.0, 1.0, 1.0, -0.5};
  const auto ms = scalar_measurements(times, values, 2.0);
  const InitialGuess guess = initial_guess(di.system, ms);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_NEAR(guess.eval(times[k])[0], values[k], 1e-12);
  }
  // Positions interpolate linearly inside intervals.
  EXPECT_NEAR(guess.eval(0.25)[0], 0.5, 1e-12);
  // The rate component interpolates centered differences of the knot
  // positions: 2.0 one-sided at the first knot, 1.0 centered at the second.
  EXPECT_NEAR(guess.eval(0.0)[1], 2.0, 1e-12);
  EXPECT_NEAR(guess.eval(0.5)[1], 1.0, 1e-12);
  EXPECT_NEAR(guess.eval(0.25)[1], 1.5, 1e-12);
  // Outside the horizon the guess clamps instead of extrapolating.
  EXPECT_EQ(guess.eval(-1.0)[0], guess.eval(0.0)[0]);
  EXPECT_EQ(guess.eval(9.0)[0], guess.eval(1.5)[0]);
}

TEST(CollocationMesh, UsesGaussLobattoNodesPinnedToKnots) {
  const auto ms = scalar_measurements({0.0, 1.0, 3.0}, {0.0, 1.0, 0.0}, 1.0);
  const CollocationMesh mesh = make_collocation_mesh(ms, 5);
  ASSERT_EQ(mesh.node_times.size(), 2u);
  EXPECT_EQ(mesh.nodes_per_interval, 5);
  for (int k = 0; k < 2; ++k) {
    const auto& nodes = mesh.node_times[k];
    ASSERT_EQ(nodes.size(), 5u);
    EXPECT_EQ(nodes.front(), ms.time(k));
    EXPECT_EQ(nodes.back(), ms.time(k + 1));
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      EXPECT_LT(nodes[i - 1], nodes[i]);
    }
  }
  EXPECT_THROW(make_collocation_mesh(ms, 2), std::invalid_argument);
}

TEST(SolveCollocation, ReproducesTheLinearClosedFormOnInertialData) {
  const auto di = preset_double_integrator(1.0, 0.5);
  std::vector<double> times, values;
  for (int k = 0; k <= 4; ++k) {
    times.push_back(0.5 * k);
    values.push_back(rng::normal(808, rng::kTestFixture, k, 0));
  }
  const auto ms = scalar_measurements(times, values, 2.0);
  const Spline closed = solve_spline(di.model, ms);
  const Spline colloc =
      solve_collocation(di.system, ms, initial_guess(di.system, ms), 5);
  EXPECT_EQ(colloc.kind(), "polynomial");
  for (int k = 0; k < ms.count(); ++k) {
    EXPECT_LT((colloc.knot_x[k] - closed.knot_x[k]).cwiseAbs().maxCoeff(), 1e-8)
        << "knot " << k;
  }
  const double t = 0.77;
  EXPECT_LT((eval_spline(colloc, t).x - eval_spline(closed, t).x)
                .cwiseAbs()
                .maxCoeff(),
            1e-7);
}

TEST(SolveCollocation, WarmStartFromAnExistingEstimateAgrees) {
  const auto di = preset_double_integrator(1.0, 0.5);
  std::vector<double> times, values;
  for (int k = 0; k <= 3; ++k) {
    times.push_back(0.5 * k);
    values.push_back(rng::normal(809, rng::kTestFixture, k, 0));
  }
  const auto ms = scalar_measurements(times, values, 2.0);
  const Spline closed = solve_spline(di.model, ms);
  const Spline cold =
      solve_collocation(di.system, ms, initial_guess(di.system, ms), 5);
  const Spline warm = solve_collocation(di.system, ms, closed, 5);
  for (int k = 0; k < ms.count(); ++k) {
    EXPECT_LT((cold.knot_x[k] - warm.knot_x[k]).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SolveCollocation, SmallAnglePendulumTracksTheHarmonicClosedForm) {
  const auto pend = preset_pendulum(0.01, 0.002);
  const auto harm = preset_harmonic(1.0, 0.01, 0.002);
  std::vector<double> times, values;
  for (int k = 0; k <= 5; ++k) {
    times.push_back(0.8 * k);
    values.push_back(0.04 * std::cos(times.back()) +
                     0.002 * rng::normal(55, rng::kTestFixture, k, 0));
  }
  const auto ms = scalar_measurements(times, values, 1.25);
  const Spline colloc =
      solve_collocation(pend.system, ms, initial_guess(pend.system, ms), 7);
  const Spline closed = solve_spline(harm.model, ms);
  for (int k = 0; k < ms.count(); ++k) {
    EXPECT_LT((colloc.knot_x[k] - closed.knot_x[k]).cwiseAbs().maxCoeff(), 1e-3)
        << "knot " << k;
  }
  const ResidualBundle bundle =
      verify(pend.system, ms, candidate_from_spline(colloc));
  EXPECT_LE(bundle.max_residual(), 1e-6) << bundle.to_json().dump(2);
}

TEST(SolveCollocation, RefusesNonGaussianProcessNoise) {
  const auto preset = preset_alpha_particle(2, 1.0, 0.5);
  const auto ms = zigzag_measurements(3, 2.0, 1.0);
  try {
    solve_collocation(preset.system, ms, initial_guess(preset.system, ms), 5);
    FAIL() << "expected std::invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("Gaussian"), std::string::npos);
  }
}

TEST(SolveCollocation, RefusesMeasurementsOfTheStateDerivative) {
  auto sys = preset_double_integrator(1.0, 0.5).system;
  sys.g = [](double, const Vec& xdot) -> Vec {
    return 0.1 * xdot.head(1);
  };
  sys.dg_dxdot = [](double, const Vec&) -> Mat {
    Mat m = Mat::Zero(1, 2);
    m(0, 0) = 0.1;
    return m;
  };
  const auto ms = zigzag_measurements(3, 2.0, 1.0);
  EXPECT_THROW(solve_collocation(sys, ms, initial_guess(sys, ms), 5),
               std::invalid_argument);
}

TEST(SolveCollocation, UnreachableRefinementToleranceIsReported) {
  const auto pend = preset_pendulum(0.01, 0.002);
  std::vector<double> times, values;
  for (int k = 0; k <= 3; ++k) {
    times.push_back(0.8 * k);
    values.push_back(0.04 * std::cos(times.back()));
  }
  const auto ms = scalar_measurements(times, values, 1.25);
  try {
    solve_collocation(pend.system, ms, initial_guess(pend.system, ms), 3,
                      NewtonOptions{}, 1e-18);
    FAIL() << "expected std::runtime_error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("mesh not converged"),
              std::string::npos);
  }
}
