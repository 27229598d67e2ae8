#pragma once

#include <functional>
#include <vector>

#include "optspline/model.hpp"
#include "optspline/types.hpp"

namespace optspline {

/// A positive density sampled along one closed interval, carried in log space.
struct LogDensityPath {
  std::function<double(double)> log_rho;  ///< t -> ln rho(t)
  double t_begin = 0.0;
  double t_end = 0.0;  ///< == t_begin denotes the singleton {t_begin}

  double length() const { return t_end - t_begin; }
};

/// ln of the interval functional: the mean of ln rho over [t_begin, t_end],
/// or ln rho(t_begin) for a singleton. Throws std::invalid_argument when
/// t_end < t_begin and std::domain_error when ln rho is non-finite.
double log_mu(const LogDensityPath& path, double quad_tol = 1e-10);

/// The interval functional itself: exp(log_mu).
double mu_interval(const LogDensityPath& path, double quad_tol = 1e-10);

/// Both sides of the splitting identity
///   mu(tau)^{|tau|} = mu(tau_1)^{|tau_1|} * mu(tau_2)^{|tau_2|}
/// for tau split at an interior point. Callers compare the two.
struct ProductCheck {
  double whole = 0.0;        ///< mu(tau)^{|tau|}
  double split_product = 0.0;  ///< product over the two pieces
};

ProductCheck mu_product_check(const LogDensityPath& path, double split,
                              double quad_tol = 1e-10);

/// Log of the enrichment objective and its parts:
///
///   log_value = sum_k weight_k * integral_k(ln rho_v(t, v(t)))
///             + sum_k [ ln rho_v(t_k, v_k) + ln rho_w(t_k, w_k) ]
///
/// where weight_k is f0 for uniformly sampled measurements and
/// 1/(t_{k+1}-t_k) otherwise.
struct ObjectiveValue {
  double log_value = 0.0;
  std::vector<double> interval_integrals;  ///< raw integral of ln rho_v per interval
  std::vector<double> interval_weights;    ///< multiplier applied to each integral
  std::vector<double> point_terms;         ///< ln rho_v + ln rho_w at each knot

  /// Recombine the parts; equals log_value up to rounding.
  double recombine() const;
};

ObjectiveValue log_objective(const StochasticSystem& sys, const MeasurementSet& ms,
                             const std::function<Vec(double)>& v_path,
                             const std::vector<Vec>& v_points,
                             const std::vector<Vec>& w_points,
                             double quad_tol = 1e-10);

}  // namespace optspline
