#pragma once

#include <string>
#include <vector>

#include "optspline/types.hpp"

namespace optspline::numerics {

/// Solve M u = rhs by LU with row/column equilibration, a reciprocal
/// condition estimate, and one step of iterative refinement. Throws
/// std::runtime_error mentioning `context` and the condition estimate when
/// the (equilibrated) matrix is numerically singular.
Vec solve_dense(const Mat& M, const Vec& rhs, const std::string& context);

/// Gauss-Lobatto points on [-1, 1] in increasing order (m >= 2). The set
/// always contains both endpoints.
std::vector<double> gauss_lobatto_points(int m);

/// Barycentric weights for polynomial interpolation on arbitrary distinct
/// nodes.
std::vector<double> barycentric_weights(const std::vector<double>& nodes);

/// Differentiation matrix Dm with (Dm p)_i = p'(nodes[i]) for the degree
/// m-1 interpolant p of values given at the nodes.
Mat differentiation_matrix(const std::vector<double>& nodes);

/// Evaluate the interpolant of `values` (one row per node) at t.
Vec barycentric_eval(const std::vector<double>& nodes,
                     const std::vector<double>& weights, const Mat& values,
                     double t);

/// Derivative of the interpolant of `values` at t.
Vec barycentric_eval_derivative(const std::vector<double>& nodes,
                                const std::vector<double>& weights,
                                const Mat& values, double t);

}  // namespace optspline::numerics
