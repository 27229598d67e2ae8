#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "optspline/likelihood.hpp"
#include "optspline/linear_solver.hpp"
#include "optspline/model.hpp"
#include "optspline/nonlinear_solver.hpp"
#include "optspline/optimality.hpp"
#include "optspline/rng.hpp"
#include "optspline/simkit.hpp"
#include "optspline/spline.hpp"

using namespace optspline;

namespace {

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

}  // namespace

static void BM_ClosedFormSolve(benchmark::State& state) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const int K = static_cast<int>(state.range(0));
  const MeasurementSet ms = random_measurements(K, 5.0, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_spline(di.model, ms));
  }
  state.SetComplexityN(K);
}
BENCHMARK(BM_ClosedFormSolve)->RangeMultiplier(4)->Range(8, 128)
    ->Complexity(benchmark::oNCubed);

static void BM_TransitionMatrices(benchmark::State& state) {
  const auto harm = preset_harmonic(2.0, 1.0, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        transition_matrices(harm.model.A, harm.model.B, harm.model.Q, 0.37));
  }
}
BENCHMARK(BM_TransitionMatrices);

static void BM_DenseEvaluation(benchmark::State& state) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const MeasurementSet ms = random_measurements(50, 5.0, 2);
  const Spline sp = solve_spline(di.model, ms);
  const double t0 = sp.knot_times.front();
  const double tf = sp.knot_times.back();
  for (auto _ : state) {
    double acc = 0.0;
    for (int i = 0; i <= 5000; ++i) {
      acc += eval_spline(sp, t0 + (tf - t0) * i / 5000.0).x[0];
    }
    benchmark::DoNotOptimize(acc);
  }
}
BENCHMARK(BM_DenseEvaluation);

static void BM_HeavyTailNewton(benchmark::State& state) {
  const auto preset = preset_alpha_particle(2, 1.0, 0.5);
  const int K = static_cast<int>(state.range(0));
  const MeasurementSet ms = random_measurements(K, 2.0, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_alpha(preset, ms));
  }
}
BENCHMARK(BM_HeavyTailNewton)->RangeMultiplier(4)->Range(4, 64);

static void BM_PendulumCollocation(benchmark::State& state) {
  const auto pend = preset_pendulum(0.01, 0.002);
  std::vector<double> times;
  std::vector<Vec> values;
  for (int k = 0; k <= 5; ++k) {
    times.push_back(0.8 * k);
    values.push_back(Vec::Constant(1, 0.04 * std::cos(times.back())));
  }
  const MeasurementSet ms(times, values, 1.25);
  const InitialGuess guess = initial_guess(pend.system, ms);
  const int m = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_collocation(pend.system, ms, guess, m));
  }
}
BENCHMARK(BM_PendulumCollocation)->Arg(7)->Arg(9);

static void BM_ResidualVerification(benchmark::State& state) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const MeasurementSet ms = random_measurements(50, 5.0, 4);
  const CandidateSolution cand =
      candidate_from_spline(solve_spline(di.model, ms));
  for (auto _ : state) {
    benchmark::DoNotOptimize(verify(di.system, ms, cand));
  }
}
BENCHMARK(BM_ResidualVerification);

static void BM_DiscretizedReference(benchmark::State& state) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const MeasurementSet ms = random_measurements(8, 2.0, 5);
  const double dt = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_discretized_mle(di.model, ms, dt));
  }
}
BENCHMARK(BM_DiscretizedReference)->Arg(100)->Arg(400);

static void BM_ObjectiveQuadrature(benchmark::State& state) {
  const auto di = preset_double_integrator(4.0, 1.0);
  const MeasurementSet ms = random_measurements(8, 2.0, 6);
  const Spline sp = solve_spline(di.model, ms);
  const auto v_path = [&sp](double t) { return eval_spline(sp, t).v; };
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        log_objective(di.system, ms, v_path, sp.knot_v, sp.knot_w));
  }
}
BENCHMARK(BM_ObjectiveQuadrature);

BENCHMARK_MAIN();
