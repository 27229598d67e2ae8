#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "optspline/model.hpp"
#include "optspline/types.hpp"

namespace optspline {

/// Time steppers for sample-path generation.
///   kPaperVerlet:   position-Verlet style kinematic update with one
///                   acceleration draw per step; requires the
///                   double-integrator structure x' = (x2, v).
///   kEulerMaruyama: first-order scheme for general drift, with the
///                   white-noise scaling v_i = sigma_p xi_i / sqrt(dt).
enum class SimScheme { kPaperVerlet, kEulerMaruyama };

std::string to_string(SimScheme scheme);
SimScheme sim_scheme_from_string(const std::string& name);

struct SimConfig {
  double dt = 1e-2;
  TimeHorizon horizon;
  Vec x0;
  double sigma_p = 1.0;
  double f0 = 1.0;
  double sigma_m = 1.0;
  std::uint64_t seed = 0;
  SimScheme scheme = SimScheme::kPaperVerlet;
};

/// A sampled path on a uniform grid; noise holds the per-step draws
/// (accelerations for kPaperVerlet, forcing values for kEulerMaruyama) and
/// has one fewer entry than states.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> noise;
};

/// Integrate one sample path. Deterministic in (seed, scheme, dt): draws
/// come from a counter-based generator indexed by step and component.
Trajectory simulate(const SimConfig& cfg, const StochasticSystem& sys);

/// Read the position (first state component) off the trajectory every 1/f0
/// and add N(0, sigma_m^2) noise from the measurement stream. The horizon
/// must hold an integer number of measurement intervals and the sampling
/// times must land on grid points (to 1e-9).
MeasurementSet sample_measurements(const Trajectory& traj, double f0,
                                   double sigma_m, std::uint64_t seed);

/// Per-interval measurement slopes (y_{k+1} - y_k) / (t_{k+1} - t_k).
std::vector<Vec> finite_difference_velocity(const MeasurementSet& ms);

/// Uniform-by-interval grid refining a measurement set; dt must divide every
/// measurement gap (to 1e-9).
struct DiscretizedGrid {
  std::vector<double> times;      ///< all node times, knots included
  std::vector<int> knot_node;     ///< node index of each measurement knot
  std::vector<int> step_interval; ///< measurement interval of each step
  std::vector<double> step_dt;    ///< local step size (gap / steps)
};

DiscretizedGrid make_discretized_grid(const MeasurementSet& ms, double dt);

/// Finite-dimensional maximum-likelihood reference: states at the grid
/// nodes and one forcing value per step, under the implicit-midpoint
/// discretization
///   x_{i+1} - x_i = dt/2 A (x_i + x_{i+1}) + dt B v_j
/// with objective
///   sum_k (1/gap_k) sum_{j in k} dt/2 v_j^T Q^{-1} v_j
///   + sum_k 1/2 (y_k - C x)^T (D R D^T)^{-1} (y_k - C x).
/// Solved exactly through one sparse KKT system.
struct DiscretizedMle {
  Trajectory trajectory;   ///< states at grid nodes (noise left empty)
  std::vector<Vec> v;      ///< one forcing value per step
  double objective = 0.0;
  DiscretizedGrid grid;
};

DiscretizedMle solve_discretized_mle(const LinearGaussianSystem& lgs,
                                     const MeasurementSet& ms, double dt);

/// The discrete objective above for an arbitrary grid candidate.
double discretized_objective(const LinearGaussianSystem& lgs,
                             const MeasurementSet& ms,
                             const DiscretizedGrid& grid,
                             const std::vector<Vec>& states,
                             const std::vector<Vec>& v);

/// Propagate the implicit-midpoint dynamics from x0 under given forcing,
/// yielding a constraint-feasible grid candidate.
std::vector<Vec> propagate_midpoint(const LinearGaussianSystem& lgs,
                                    const DiscretizedGrid& grid, const Vec& x0,
                                    const std::vector<Vec>& v);

}  // namespace optspline
