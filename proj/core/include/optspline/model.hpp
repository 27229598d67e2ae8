#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "optspline/types.hpp"

namespace optspline {

/// Continuous-time stochastic model
///
///   x'(t) = f(t, x) + nu(t, v)                (state dynamics, process noise v)
///   y(t_k) = g(t_k, x') + h(t_k, x) + xi(t_k, w)   (measurements, noise w)
///
/// described through callbacks so nonlinear models plug in without
/// recompilation. Jacobians are with respect to the second argument.
/// log_rho_v / log_rho_w are the stationary log-densities of the noises.
/// Instances are treated as immutable once handed to an operation.
struct StochasticSystem {
  int n_x = 0;  ///< state dimension
  int n_v = 0;  ///< process noise dimension
  int n_w = 0;  ///< measurement noise dimension
  int n_y = 0;  ///< measurement dimension

  std::function<Vec(double, const Vec&)> f;         ///< (t, x) -> R^{n_x}
  std::function<Mat(double, const Vec&)> df_dx;     ///< (t, x) -> R^{n_x x n_x}
  std::function<Vec(double, const Vec&)> nu;        ///< (t, v) -> R^{n_x}
  std::function<Mat(double, const Vec&)> dnu_dv;    ///< (t, v) -> R^{n_x x n_v}
  std::function<Vec(double, const Vec&)> g;         ///< (t, xdot) -> R^{n_y}
  std::function<Mat(double, const Vec&)> dg_dxdot;  ///< (t, xdot) -> R^{n_y x n_x}
  std::function<Vec(double, const Vec&)> h;         ///< (t, x) -> R^{n_y}
  std::function<Mat(double, const Vec&)> dh_dx;     ///< (t, x) -> R^{n_y x n_x}
  std::function<Vec(double, const Vec&)> xi;        ///< (t, w) -> R^{n_y}
  std::function<Mat(double, const Vec&)> dxi_dw;    ///< (t, w) -> R^{n_y x n_w}

  std::function<double(double, const Vec&)> log_rho_v;    ///< (t, v) -> ln rho_v
  std::function<Vec(double, const Vec&)> dlog_rho_v_dv;   ///< (t, v) -> R^{n_v}
  std::function<double(double, const Vec&)> log_rho_w;    ///< (t, w) -> ln rho_w
  std::function<Vec(double, const Vec&)> dlog_rho_w_dw;   ///< (t, w) -> R^{n_w}
};

/// Linear time-invariant specialization with Gaussian noises:
///
///   x' = A x + B v,  v ~ N(0, Q)
///   y  = C x + D w,  w ~ N(0, R)
struct LinearGaussianSystem {
  Mat A;  ///< n_x x n_x
  Mat B;  ///< n_x x n_v
  Mat C;  ///< n_y x n_x
  Mat D;  ///< n_y x n_w
  Mat Q;  ///< n_v x n_v process covariance, SPD
  Mat R;  ///< n_w x n_w measurement covariance, SPD

  int n_x() const { return static_cast<int>(A.rows()); }
  int n_v() const { return static_cast<int>(B.cols()); }
  int n_y() const { return static_cast<int>(C.rows()); }
  int n_w() const { return static_cast<int>(D.cols()); }

  /// Throws std::invalid_argument on dimension mismatch or non-SPD covariance.
  void validate() const;
};

/// Timestamped measurement sequence y_0..y_K with the sampling rate f0.
/// Construction validates the invariants (strictly increasing times,
/// K >= 1 intervals, consistent dimensions); instances are immutable.
class MeasurementSet {
 public:
  MeasurementSet(std::vector<double> times, std::vector<Vec> values, double f0);

  int intervals() const { return static_cast<int>(times_.size()) - 1; }  ///< K
  int count() const { return static_cast<int>(times_.size()); }          ///< K + 1
  double time(int k) const { return times_.at(k); }
  const Vec& value(int k) const { return values_.at(k); }
  double gap(int k) const { return times_.at(k + 1) - times_.at(k); }
  double f0() const { return f0_; }
  int n_y() const { return static_cast<int>(values_.front().size()); }

  /// True when every gap matches 1/f0 to 1e-9 relative.
  bool uniform() const { return uniform_; }

  /// Weight of interval k in the enrichment objective: the exact f0 for
  /// uniformly sampled data, 1/(t_{k+1} - t_k) otherwise.
  double interval_weight(int k) const { return uniform_ ? f0_ : 1.0 / gap(k); }

  TimeHorizon horizon() const { return {times_.front(), times_.back()}; }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec>& values() const { return values_; }

 private:
  std::vector<double> times_;
  std::vector<Vec> values_;
  double f0_;
  bool uniform_;
};

/// Structural validation of a StochasticSystem: probes every callback at
/// randomized points, checks output shapes and finiteness, and compares
/// each Jacobian callback against a central finite difference
/// (step 1e-6, relative tolerance 1e-4).
struct ValidationIssue {
  std::string check;    ///< which callback / comparison failed
  std::string message;  ///< what went wrong, with the probe location
};

struct ValidationReport {
  int checks_run = 0;
  std::vector<ValidationIssue> issues;

  bool passed() const { return issues.empty(); }
  std::string summary() const;
};

ValidationReport validate_system(const StochasticSystem& sys, int probes = 10,
                                 std::uint64_t seed = 20220601);

/// Wrap a LinearGaussianSystem in StochasticSystem callbacks (Gaussian
/// log-densities included).
StochasticSystem make_stochastic(const LinearGaussianSystem& lgs);

/// A preset that is linear with Gaussian noise, in both representations.
struct LinearGaussianPreset {
  StochasticSystem system;
  LinearGaussianSystem model;
};

/// Point mass under white-noise acceleration, position measured:
/// x = (position, velocity), x' = (x2, v), y = x1 + w.
LinearGaussianPreset preset_double_integrator(double sigma_p, double sigma_m);

/// Harmonic oscillator with white-noise forcing, position measured:
/// x' = (x2, -omega^2 x1 + v), y = x1 + w.
LinearGaussianPreset preset_harmonic(double omega, double sigma_p, double sigma_m);

/// Double-integrator kinematics driven by the heavier-tailed density family
///   rho_v(v) = c_alpha exp(-(v/sigma_p)^{2 alpha} / 2),  alpha = 1, 2, ...
/// with Gaussian position measurements. log_norm caches ln c_alpha.
struct AlphaPreset {
  StochasticSystem system;
  int alpha = 1;
  double sigma_p = 1.0;
  double sigma_m = 1.0;
  double log_norm = 0.0;  ///< ln c_alpha
};

AlphaPreset preset_alpha_particle(int alpha, double sigma_p, double sigma_m);

/// Normalization constant of the alpha family: returns ln c_alpha where
/// 1/c_alpha = integral of exp(-(v/sigma_p)^{2 alpha} / 2) over the line.
double alpha_log_norm(int alpha, double sigma_p);

/// Frictionless pendulum with white-noise torque, angle measured:
/// x = (angle, rate), x' = (x2, -sin x1 + v), y = x1 + w.
struct PendulumPreset {
  StochasticSystem system;
  double sigma_p = 1.0;
  double sigma_m = 1.0;
};

PendulumPreset preset_pendulum(double sigma_p, double sigma_m);

}  // namespace optspline
