#pragma once

#include "optspline/model.hpp"
#include "optspline/spline.hpp"
#include "optspline/types.hpp"

namespace optspline {

/// Transition data of one segment of length delta for x' = A x + B v with
/// the maximum-likelihood forcing v = Q B^T lambda:
///   Phi = exp(A delta), Psi = exp(-A^T delta),
///   G   = integral_0^delta exp(-A s) B Q B^T exp(-A^T s) ds.
/// All three come from a single block matrix exponential.
struct TransitionTriplet {
  Mat Phi;
  Mat Psi;
  Mat G;
};

TransitionTriplet transition_matrices(const Mat& A, const Mat& B, const Mat& Q,
                                      double delta);

/// The Gramian block alone.
Mat segment_gramian(const Mat& A, const Mat& B, const Mat& Q, double delta);

/// Dense linear system whose solution stacks the per-segment constants
/// (c_lambda_k, c_x_k) of the maximum-likelihood estimate: measurement-jump
/// rows at every knot plus state-continuity rows at interior knots.
struct JunctionSystem {
  Mat M;
  Vec rhs;
  std::vector<TransitionTriplet> transitions;  ///< one per segment
};

JunctionSystem assemble_junction_system(const LinearGaussianSystem& lgs,
                                        const MeasurementSet& ms);

/// Solve the junction system and package the result as a Spline. Throws
/// std::runtime_error("degenerate junction system ...") when the system is
/// numerically singular.
Spline solve_spline(const LinearGaussianSystem& lgs, const MeasurementSet& ms);

}  // namespace optspline
