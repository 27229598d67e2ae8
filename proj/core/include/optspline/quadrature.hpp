#pragma once

#include <functional>

namespace optspline::quadrature {

/// Integrate f over [a, b] to absolute tolerance abs_tol using adaptive
/// bisection of a 15-point Gauss-Kronrod rule.
///
/// Throws std::domain_error naming the offending point if f evaluates to a
/// non-finite value, and std::runtime_error if the tolerance cannot be met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

}  // namespace optspline::quadrature
