#pragma once

#include <functional>
#include <vector>

#include "optspline/model.hpp"
#include "optspline/spline.hpp"
#include "optspline/types.hpp"

namespace optspline {

/// Damped-Newton controls shared by the nonlinear solvers.
struct NewtonOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;  ///< on the residual infinity norm
  int max_backtracks = 10;   ///< step halvings per iteration
};

/// Exact maximum-likelihood estimate for the alpha particle presets: each
/// segment is the closed form driven by v = V(a s + b), and Newton solves
/// the junction conditions in the stacked (a, b, c, d) parameters. alpha = 1
/// reproduces the linear-Gaussian cubic; larger alpha warm-starts from it
/// (the Jacobian is singular at the zero costate when alpha >= 2).
/// Throws std::runtime_error with the best residual reached when Newton
/// does not converge.
Spline solve_alpha(const AlphaPreset& preset, const MeasurementSet& ms,
                   const NewtonOptions& options = {});

/// Piecewise-linear starting trajectory threaded through the measurements:
/// the first state component interpolates y_k; each following component
/// interpolates finite differences of the previous one. Continuous at knots
/// by construction.
struct InitialGuess {
  std::vector<double> times;
  std::vector<Vec> states;

  Vec eval(double t) const;
};

InitialGuess initial_guess(const StochasticSystem& sys, const MeasurementSet& ms);

/// Interval subdivision for collocation: `m` Gauss-Lobatto nodes per
/// measurement interval (segment endpoints included).
struct CollocationMesh {
  std::vector<double> knots;
  int nodes_per_interval = 0;
  std::vector<std::vector<double>> node_times;  ///< per interval, ascending
};

CollocationMesh make_collocation_mesh(const MeasurementSet& ms, int m);

/// Collocation solution of the stationarity system for nonlinear dynamics
/// with Gaussian noises and measurements not involving x': the state and
/// costate are degree m-1 polynomials per interval collocated at
/// Gauss-Lobatto nodes, coupled through continuity and the measurement jump
/// conditions. After converging at m the solver re-solves at 2m and accepts
/// only if no knot state moved by more than refine_tol.
///
/// The noise model (B, Q, R, D) is recovered by probing the callbacks; a
/// non-quadratic log-density or nonlinear noise map is reported as an error.
Spline solve_collocation(const StochasticSystem& sys, const MeasurementSet& ms,
                         const InitialGuess& init, int m,
                         const NewtonOptions& options = {},
                         double refine_tol = 1e-6);

/// Same, warm-started from an existing estimate (e.g. a linearized model's
/// closed form).
Spline solve_collocation(const StochasticSystem& sys, const MeasurementSet& ms,
                         const Spline& init, int m,
                         const NewtonOptions& options = {},
                         double refine_tol = 1e-6);

}  // namespace optspline
