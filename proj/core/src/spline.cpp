#include "optspline/spline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "optspline/alpha_family.hpp"
#include "optspline/linear_solver.hpp"
#include "optspline/numerics.hpp"

namespace optspline {

std::string Spline::kind() const {
  if (std::holds_alternative<LinearGaussianInfo>(model)) return "linear-gaussian";
  if (std::holds_alternative<AlphaInfo>(model)) return "alpha";
  return "polynomial";
}

void Spline::validate() const {
  const std::size_t K = segments.size();
  if (K == 0) throw std::invalid_argument("Spline: need at least one segment");
  if (knot_times.size() != K + 1) {
    throw std::invalid_argument("Spline: knot_times must have one more entry than segments");
  }
  for (std::size_t k = 0; k + 1 < knot_times.size(); ++k) {
    if (!(knot_times[k + 1] > knot_times[k])) {
      throw std::invalid_argument("Spline: knot times must be strictly increasing");
    }
  }
  const std::size_t n = knot_times.size();
  for (const auto* arr : {&knot_x, &knot_xdot, &knot_v, &knot_w, &knot_eta,
                          &knot_lambda, &lambda_minus, &lambda_plus}) {
    if (arr->size() != n) {
      throw std::invalid_argument("Spline: knot value arrays must cover every knot");
    }
  }
  if (!(f0 > 0.0)) throw std::invalid_argument("Spline: f0 must be positive");
}

int segment_index(const Spline& spline, double t) {
  const auto& knots = spline.knot_times;
  if (t < knots.front() || t > knots.back()) {
    std::ostringstream msg;
    msg << "spline evaluated at t = " << t << " outside its domain ["
        << knots.front() << ", " << knots.back() << "]";
    throw std::out_of_range(msg.str());
  }
  const auto it = std::upper_bound(knots.begin(), knots.end(), t);
  int k = static_cast<int>(it - knots.begin()) - 1;
  if (k >= spline.intervals()) k = spline.intervals() - 1;  // t == t_K
  return k;
}

namespace {

struct SegmentPoint {
  Vec x, v, lambda, xdot, lambda_dot;
};

SegmentPoint eval_segment(const Spline& spline, int k, double t) {
  SegmentPoint out;
  const double s = t - spline.knot_times[k];

  if (const auto* info = std::get_if<LinearGaussianInfo>(&spline.model)) {
    const auto& seg = std::get<LinearGaussianSegment>(spline.segments[k]);
    const TransitionTriplet tr = transition_matrices(info->A, info->B, info->Q, s);
    out.lambda = tr.Psi * seg.c_lambda;
    out.x = tr.Phi * (tr.G * seg.c_lambda + seg.c_x);
    out.v = info->Q * info->B.transpose() * out.lambda;
    out.xdot = info->A * out.x + info->B * out.v;
    out.lambda_dot = -info->A.transpose() * out.lambda;
    return out;
  }
  if (const auto* info = std::get_if<AlphaInfo>(&spline.model)) {
    const auto& seg = std::get<AlphaSegment>(spline.segments[k]);
    const auto prm = alpha_family::Params::make(info->alpha, info->sigma_p);
    const auto ints = alpha_family::segment_integrals(prm, seg.a, seg.b, s);
    const double z = seg.a * s + seg.b;
    const double v = alpha_family::V(prm, z);
    out.x = (Vec(2) << seg.d + seg.c * s + ints.I1, seg.c + ints.I2).finished();
    out.v = (Vec(1) << v).finished();
    out.lambda = (Vec(2) << -seg.a, z).finished();
    out.xdot = (Vec(2) << out.x[1], v).finished();
    out.lambda_dot = (Vec(2) << 0.0, seg.a).finished();
    return out;
  }
  const auto* info = std::get_if<PolynomialInfo>(&spline.model);
  const auto& seg = std::get<PolynomialSegment>(spline.segments[k]);
  const auto weights = numerics::barycentric_weights(seg.nodes);
  out.x = numerics::barycentric_eval(seg.nodes, weights, seg.x_nodes, t);
  out.lambda = numerics::barycentric_eval(seg.nodes, weights, seg.lambda_nodes, t);
  out.v = info->Q * info->B.transpose() * out.lambda;
  out.xdot = numerics::barycentric_eval_derivative(seg.nodes, weights, seg.x_nodes, t);
  out.lambda_dot =
      numerics::barycentric_eval_derivative(seg.nodes, weights, seg.lambda_nodes, t);
  return out;
}

}  // namespace

SplineEval eval_spline(const Spline& spline, double t) {
  // Exactly at a knot the junction point values are the answer; segment
  // formulas would give one-sided limits instead.
  for (std::size_t k = 0; k < spline.knot_times.size(); ++k) {
    if (t == spline.knot_times[k]) {
      return {spline.knot_x[k], spline.knot_v[k], spline.knot_lambda[k]};
    }
  }
  const int k = segment_index(spline, t);
  const SegmentPoint p = eval_segment(spline, k, t);
  return {p.x, p.v, p.lambda};
}

SplineDerivatives eval_spline_derivatives(const Spline& spline, double t) {
  for (std::size_t k = 0; k < spline.knot_times.size(); ++k) {
    if (t == spline.knot_times[k]) {
      throw std::invalid_argument(
          "eval_spline_derivatives: derivatives are one-sided at knots; "
          "evaluate strictly inside a segment");
    }
  }
  const int k = segment_index(spline, t);
  const SegmentPoint p = eval_segment(spline, k, t);
  return {p.xdot, p.lambda_dot};
}

CubicCoefficients cubic_coefficients(const Spline& spline, int k) {
  const auto* info = std::get_if<LinearGaussianInfo>(&spline.model);
  if (info == nullptr) {
    throw std::invalid_argument(
        "cubic_coefficients: spline does not come from a linear-Gaussian model");
  }
  const Mat A_di = (Mat(2, 2) << 0.0, 1.0, 0.0, 0.0).finished();
  const Mat B_di = (Mat(2, 1) << 0.0, 1.0).finished();
  const bool di_shape = info->A.rows() == 2 && info->A.cols() == 2 &&
                        info->B.rows() == 2 && info->B.cols() == 1 &&
                        (info->A - A_di).cwiseAbs().maxCoeff() == 0.0 &&
                        (info->B - B_di).cwiseAbs().maxCoeff() == 0.0;
  if (!di_shape) {
    throw std::invalid_argument(
        "cubic_coefficients: segments are cubic only for the white-noise "
        "acceleration (double integrator) model");
  }
  if (k < 0 || k >= spline.intervals()) {
    throw std::out_of_range("cubic_coefficients: segment index out of range");
  }
  const auto& seg = std::get<LinearGaussianSegment>(spline.segments[k]);
  CubicCoefficients out;
  // lambda = (-a, a s + b) solves the adjoint equation; x1 integrates twice
  // from v = sigma_p^2 lambda_2.
  out.a = -seg.c_lambda[0];
  out.b = seg.c_lambda[1];
  out.c = seg.c_x[1];
  out.d = seg.c_x[0];
  return out;
}

}  // namespace optspline
