#include "optspline/simkit.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "optspline/rng.hpp"

namespace optspline {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

int checked_step_count(double length, double dt, const std::string& what) {
  const int n = static_cast<int>(std::llround(length / dt));
  if (n < 1 || std::abs(n * dt - length) > 1e-9) {
    throw std::invalid_argument(what + ": dt must divide the interval length");
  }
  return n;
}

}  // namespace

std::string to_string(SimScheme scheme) {
  switch (scheme) {
    case SimScheme::kPaperVerlet:
      return "paper-verlet";
    case SimScheme::kEulerMaruyama:
      return "euler-maruyama";
  }
  throw std::logic_error("to_string: unhandled scheme");
}

SimScheme sim_scheme_from_string(const std::string& name) {
  if (name == "paper-verlet") return SimScheme::kPaperVerlet;
  if (name == "euler-maruyama") return SimScheme::kEulerMaruyama;
  throw std::invalid_argument("unknown simulation scheme '" + name +
                              "' (expected paper-verlet or euler-maruyama)");
}

Trajectory simulate(const SimConfig& cfg, const StochasticSystem& sys) {
  cfg.horizon.validate();
  require(cfg.dt > 0.0, "simulate: dt must be positive");
  require(cfg.sigma_p >= 0.0, "simulate: sigma_p must be nonnegative");
  require(cfg.x0.size() == sys.n_x, "simulate: x0 dimension does not match the model");
  const int steps = checked_step_count(cfg.horizon.length(), cfg.dt, "simulate");

  if (cfg.scheme == SimScheme::kPaperVerlet) {
    // The kinematic update below is only meaningful for the
    // double-integrator structure; probe the drift to enforce it.
    require(sys.n_x == 2 && sys.n_v == 1,
            "simulate: paper-verlet requires the double-integrator structure");
    for (int probe = 0; probe < 3; ++probe) {
      Vec x(2);
      x[0] = std::cos(1.7 * probe + 0.3) * 3.0;
      x[1] = std::sin(2.3 * probe + 1.1) * 2.0;
      const double t = cfg.horizon.t0 + cfg.horizon.length() * 0.31 * probe;
      const Vec fx = sys.f(t, x);
      if (std::abs(fx[0] - x[1]) > 1e-12 || std::abs(fx[1]) > 1e-12) {
        throw std::invalid_argument(
            "simulate: paper-verlet requires the double-integrator structure "
            "x' = (x2, v); use euler-maruyama for general drift");
      }
    }
  }

  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);
  traj.noise.reserve(steps);
  traj.times.push_back(cfg.horizon.t0);
  traj.states.push_back(cfg.x0);

  const double sqrt_dt = std::sqrt(cfg.dt);
  for (int i = 0; i < steps; ++i) {
    const double t = cfg.horizon.t0 + i * cfg.dt;
    const Vec& x = traj.states.back();
    Vec next;
    if (cfg.scheme == SimScheme::kPaperVerlet) {
      const double a =
          cfg.sigma_p * rng::normal(cfg.seed, rng::kProcessNoise, i, 0);
      next = Vec(2);
      next[0] = x[0] + x[1] * cfg.dt + 0.5 * a * cfg.dt * cfg.dt;
      next[1] = x[1] + a * cfg.dt;
      traj.noise.push_back((Vec(1) << a).finished());
    } else {
      Vec v(sys.n_v);
      for (int c = 0; c < sys.n_v; ++c) {
        v[c] = cfg.sigma_p * rng::normal(cfg.seed, rng::kProcessNoise, i, c) /
               sqrt_dt;
      }
      next = x + (sys.f(t, x) + sys.nu(t, v)) * cfg.dt;
      traj.noise.push_back(v);
    }
    traj.states.push_back(std::move(next));
    traj.times.push_back(i + 1 == steps ? cfg.horizon.tf
                                        : cfg.horizon.t0 + (i + 1) * cfg.dt);
  }
  return traj;
}

MeasurementSet sample_measurements(const Trajectory& traj, double f0,
                                   double sigma_m, std::uint64_t seed) {
  require(traj.times.size() >= 2, "sample_measurements: trajectory too short");
  require(f0 > 0.0, "sample_measurements: f0 must be positive");
  require(sigma_m >= 0.0, "sample_measurements: sigma_m must be nonnegative");
  const double t0 = traj.times.front();
  const double length = traj.times.back() - t0;
  const int K = static_cast<int>(std::llround(f0 * length));
  if (K < 1 || std::abs(K - f0 * length) > 1e-9 * std::max(1.0, f0 * length)) {
    throw std::invalid_argument(
        "sample_measurements: horizon must hold an integer number of "
        "measurement intervals");
  }
  const double dt = traj.times[1] - traj.times[0];

  std::vector<double> times(K + 1);
  std::vector<Vec> values(K + 1);
  for (int k = 0; k <= K; ++k) {
    const double t_k = t0 + k / f0;
    const auto idx = static_cast<std::size_t>(std::llround((t_k - t0) / dt));
    if (idx >= traj.times.size() || std::abs(traj.times[idx] - t_k) > 1e-9) {
      throw std::invalid_argument(
          "sample_measurements: measurement times must land on the simulation "
          "grid (choose dt dividing 1/f0)");
    }
    times[k] = t_k;
    values[k] = (Vec(1) << traj.states[idx][0] +
                               sigma_m * rng::normal(seed, rng::kMeasurementNoise,
                                                     k, 0))
                    .finished();
  }
  return MeasurementSet(std::move(times), std::move(values), f0);
}

std::vector<Vec> finite_difference_velocity(const MeasurementSet& ms) {
  std::vector<Vec> slopes;
  slopes.reserve(ms.intervals());
  for (int k = 0; k < ms.intervals(); ++k) {
    slopes.push_back((ms.value(k + 1) - ms.value(k)) / ms.gap(k));
  }
  return slopes;
}

DiscretizedGrid make_discretized_grid(const MeasurementSet& ms, double dt) {
  require(dt > 0.0, "make_discretized_grid: dt must be positive");
  DiscretizedGrid grid;
  grid.times.push_back(ms.time(0));
  grid.knot_node.push_back(0);
  for (int k = 0; k < ms.intervals(); ++k) {
    const int n = checked_step_count(ms.gap(k), dt, "make_discretized_grid");
    const double local_dt = ms.gap(k) / n;
    for (int j = 1; j <= n; ++j) {
      grid.times.push_back(j == n ? ms.time(k + 1) : ms.time(k) + j * local_dt);
      grid.step_interval.push_back(k);
      grid.step_dt.push_back(local_dt);
    }
    grid.knot_node.push_back(static_cast<int>(grid.times.size()) - 1);
  }
  return grid;
}

namespace {

struct QuadraticData {
  Mat Qinv;
  Mat DRD_inv;
};

QuadraticData quadratic_data(const LinearGaussianSystem& lgs) {
  QuadraticData data;
  data.Qinv = lgs.Q.inverse();
  data.DRD_inv = (lgs.D * lgs.R * lgs.D.transpose()).inverse();
  return data;
}

}  // namespace

DiscretizedMle solve_discretized_mle(const LinearGaussianSystem& lgs,
                                     const MeasurementSet& ms, double dt) {
  lgs.validate();
  require(ms.n_y() == lgs.n_y(),
          "solve_discretized_mle: measurement dimension does not match the model");
  const DiscretizedGrid grid = make_discretized_grid(ms, dt);
  const QuadraticData data = quadratic_data(lgs);

  const int nx = lgs.n_x();
  const int nv = lgs.n_v();
  const int nodes = static_cast<int>(grid.times.size());
  const int steps = nodes - 1;
  const int n_primal = nx * nodes + nv * steps;
  const int n_dual = nx * steps;
  const int dim = n_primal + n_dual;

  const auto x_off = [nx](int i) { return nx * i; };
  const auto v_off = [nx, nv, nodes](int j) { return nx * nodes + nv * j; };
  const auto mu_off = [n_primal, nx](int j) { return n_primal + nx * j; };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(dim) * (2 * nx + nv + 2));
  Vec rhs = Vec::Zero(dim);

  // Objective Hessian: measurement information at knot nodes, weighted
  // Q^{-1} per step.
  const Mat S = lgs.C.transpose() * data.DRD_inv * lgs.C;
  for (int k = 0; k <= ms.intervals(); ++k) {
    const int node = grid.knot_node[k];
    for (int a = 0; a < nx; ++a) {
      for (int b = 0; b < nx; ++b) {
        if (S(a, b) != 0.0) trip.emplace_back(x_off(node) + a, x_off(node) + b, S(a, b));
      }
    }
    const Vec gy = lgs.C.transpose() * data.DRD_inv * ms.value(k);
    rhs.segment(x_off(node), nx) += gy;
  }
  for (int j = 0; j < steps; ++j) {
    const double weight = grid.step_dt[j] / ms.gap(grid.step_interval[j]);
    for (int a = 0; a < nv; ++a) {
      for (int b = 0; b < nv; ++b) {
        if (data.Qinv(a, b) != 0.0) {
          trip.emplace_back(v_off(j) + a, v_off(j) + b, weight * data.Qinv(a, b));
        }
      }
    }
  }

  // Constraints: (I - dt/2 A) x_{j+1} - (I + dt/2 A) x_j - dt B v_j = 0.
  for (int j = 0; j < steps; ++j) {
    const double h = grid.step_dt[j];
    const Mat Am = Mat::Identity(nx, nx) - 0.5 * h * lgs.A;  // on x_{j+1}
    const Mat Ap = -(Mat::Identity(nx, nx) + 0.5 * h * lgs.A);  // on x_j
    const Mat Bv = -h * lgs.B;
    for (int a = 0; a < nx; ++a) {
      for (int b = 0; b < nx; ++b) {
        if (Am(a, b) != 0.0) {
          trip.emplace_back(mu_off(j) + a, x_off(j + 1) + b, Am(a, b));
          trip.emplace_back(x_off(j + 1) + b, mu_off(j) + a, Am(a, b));
        }
        if (Ap(a, b) != 0.0) {
          trip.emplace_back(mu_off(j) + a, x_off(j) + b, Ap(a, b));
          trip.emplace_back(x_off(j) + b, mu_off(j) + a, Ap(a, b));
        }
      }
      for (int b = 0; b < nv; ++b) {
        if (Bv(a, b) != 0.0) {
          trip.emplace_back(mu_off(j) + a, v_off(j) + b, Bv(a, b));
          trip.emplace_back(v_off(j) + b, mu_off(j) + a, Bv(a, b));
        }
      }
    }
  }

  Eigen::SparseMatrix<double> kkt(dim, dim);
  kkt.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(kkt);
  lu.factorize(kkt);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error(
        "solve_discretized_mle: singular KKT system (check the model)");
  }
  const Vec sol = lu.solve(rhs);

  DiscretizedMle out;
  out.grid = grid;
  out.trajectory.times = grid.times;
  out.trajectory.states.reserve(nodes);
  for (int i = 0; i < nodes; ++i) {
    out.trajectory.states.push_back(sol.segment(x_off(i), nx));
  }
  out.v.reserve(steps);
  for (int j = 0; j < steps; ++j) {
    out.v.push_back(sol.segment(v_off(j), nv));
  }
  out.objective = discretized_objective(lgs, ms, grid, out.trajectory.states, out.v);
  return out;
}

double discretized_objective(const LinearGaussianSystem& lgs,
                             const MeasurementSet& ms,
                             const DiscretizedGrid& grid,
                             const std::vector<Vec>& states,
                             const std::vector<Vec>& v) {
  require(states.size() == grid.times.size(),
          "discretized_objective: one state per grid node required");
  require(v.size() + 1 == grid.times.size(),
          "discretized_objective: one forcing value per step required");
  const QuadraticData data = quadratic_data(lgs);
  double obj = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double weight = grid.step_dt[j] / ms.gap(grid.step_interval[j]);
    obj += 0.5 * weight * v[j].dot(data.Qinv * v[j]);
  }
  for (int k = 0; k <= ms.intervals(); ++k) {
    const Vec r = ms.value(k) - lgs.C * states[grid.knot_node[k]];
    obj += 0.5 * r.dot(data.DRD_inv * r);
  }
  return obj;
}

std::vector<Vec> propagate_midpoint(const LinearGaussianSystem& lgs,
                                    const DiscretizedGrid& grid, const Vec& x0,
                                    const std::vector<Vec>& v) {
  require(v.size() + 1 == grid.times.size(),
          "propagate_midpoint: one forcing value per step required");
  const int nx = lgs.n_x();
  require(x0.size() == nx, "propagate_midpoint: x0 dimension mismatch");
  std::vector<Vec> states;
  states.reserve(grid.times.size());
  states.push_back(x0);
  for (std::size_t j = 0; j < v.size(); ++j) {
    const double h = grid.step_dt[j];
    const Mat Am = Mat::Identity(nx, nx) - 0.5 * h * lgs.A;
    const Mat Ap = Mat::Identity(nx, nx) + 0.5 * h * lgs.A;
    states.push_back(Am.partialPivLu().solve(Ap * states.back() + h * lgs.B * v[j]));
  }
  return states;
}

}  // namespace optspline
