#pragma once

#include <string>
#include <variant>
#include <vector>

#include "optspline/types.hpp"

namespace optspline {

/// One inter-measurement segment of a linear-Gaussian estimate. The state
/// and costate on [t_start, t_end] are determined by the constants
///   lambda(s) = Psi(s) c_lambda,  x(s) = Phi(s) (G(s) c_lambda + c_x),
/// with s local time, Phi(s) = exp(A s), Psi(s) = exp(-A^T s) and G the
/// forcing Gramian. Phi/Psi/G are cached over the full segment length.
struct LinearGaussianSegment {
  Vec c_lambda;
  Vec c_x;
  Mat Phi;  ///< over the full gap
  Mat Psi;
  Mat G;
};

/// One segment of a heavy-tailed (alpha family) estimate: costate
/// lambda = (-a, a s + b), velocity x2 = c + I2(s), position
/// x1 = d + c s + I1(s).
struct AlphaSegment {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
};

/// One collocation segment: degree m-1 interpolants of the state and
/// costate through their values at Gauss-Lobatto nodes (global times).
struct PolynomialSegment {
  std::vector<double> nodes;  ///< m node times, ascending, endpoints included
  Mat x_nodes;                ///< m x n_x
  Mat lambda_nodes;           ///< m x n_x
};

using SegmentData =
    std::variant<LinearGaussianSegment, AlphaSegment, PolynomialSegment>;

/// Model information a spline needs to evaluate itself between knots.
struct LinearGaussianInfo {
  Mat A, B, Q;
};
struct AlphaInfo {
  int alpha = 1;
  double sigma_p = 1.0;
};
struct PolynomialInfo {
  Mat B, Q;  ///< forcing map and covariance for v = Q B^T lambda
};
using SegmentModelInfo =
    std::variant<LinearGaussianInfo, AlphaInfo, PolynomialInfo>;

/// Maximum-likelihood continuous-time estimate between measurement knots:
/// per-segment state/costate representations plus the point values that the
/// junction conditions pin at the knots. The costate has three values at a
/// knot: the point value lambda_k (zero when measurements do not involve
/// x'), and the one-sided limits lambda_minus / lambda_plus, which jump.
struct Spline {
  SegmentModelInfo model;
  double f0 = 1.0;
  std::vector<double> knot_times;     ///< K+1
  std::vector<SegmentData> segments;  ///< K

  std::vector<Vec> knot_x;       ///< x(t_k)
  std::vector<Vec> knot_xdot;    ///< x'(t_k), point value
  std::vector<Vec> knot_v;       ///< v(t_k), point value
  std::vector<Vec> knot_w;       ///< measurement noise estimate
  std::vector<Vec> knot_eta;     ///< measurement multiplier
  std::vector<Vec> knot_lambda;  ///< costate point value
  std::vector<Vec> lambda_minus;  ///< left limits; zero vector at k = 0
  std::vector<Vec> lambda_plus;   ///< right limits; zero vector at k = K

  int intervals() const { return static_cast<int>(segments.size()); }
  int n_x() const { return knot_x.empty() ? 0 : static_cast<int>(knot_x.front().size()); }
  double t_begin() const { return knot_times.front(); }
  double t_end() const { return knot_times.back(); }

  /// "linear-gaussian", "alpha" or "polynomial".
  std::string kind() const;

  /// Internal consistency (sizes, ordering); throws std::invalid_argument.
  void validate() const;
};

struct SplineEval {
  Vec x;
  Vec v;
  Vec lambda;
};

/// Index of the segment whose half-open interval [t_k, t_{k+1}) contains t
/// (the last segment is closed). Throws std::out_of_range outside the
/// spline's domain; evaluation never extrapolates.
int segment_index(const Spline& spline, double t);

/// Evaluate state, forcing and costate at t. Exactly at a knot the stored
/// point values are returned (in particular the point costate, not a
/// one-sided limit).
SplineEval eval_spline(const Spline& spline, double t);

/// Derivatives (x'(t), lambda'(t)) at an interior point of a segment,
/// from the segment's own closed form.
struct SplineDerivatives {
  Vec xdot;
  Vec lambda_dot;
};
SplineDerivatives eval_spline_derivatives(const Spline& spline, double t);

/// Coefficients of a position cubic x1 = a sigma_p^2 s^3/6 + b sigma_p^2
/// s^2/2 + c s + d on segment k of a double-integrator (white-noise
/// acceleration) estimate; the segment costate is lambda = (-a, a s + b).
/// Throws std::invalid_argument for other model kinds or shapes.
struct CubicCoefficients {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
};
CubicCoefficients cubic_coefficients(const Spline& spline, int k);

}  // namespace optspline
