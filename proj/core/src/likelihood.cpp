#include "optspline/likelihood.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "optspline/quadrature.hpp"

namespace optspline {
namespace {

double checked_log_rho(const LogDensityPath& path, double t) {
  const double y = path.log_rho(t);
  if (!std::isfinite(y)) {
    std::ostringstream msg;
    msg << "log-density is non-finite at t = " << t;
    throw std::domain_error(msg.str());
  }
  return y;
}

double raw_log_integral(const LogDensityPath& path, double quad_tol) {
  return quadrature::integrate(path.log_rho, path.t_begin, path.t_end, quad_tol);
}

}  // namespace

double log_mu(const LogDensityPath& path, double quad_tol) {
  if (!path.log_rho) {
    throw std::invalid_argument("log_mu: log_rho callback is not set");
  }
  if (path.t_end < path.t_begin) {
    throw std::invalid_argument("log_mu: interval end precedes start");
  }
  if (path.t_end == path.t_begin) {
    return checked_log_rho(path, path.t_begin);
  }
  return raw_log_integral(path, quad_tol) / path.length();
}

double mu_interval(const LogDensityPath& path, double quad_tol) {
  return std::exp(log_mu(path, quad_tol));
}

ProductCheck mu_product_check(const LogDensityPath& path, double split,
                              double quad_tol) {
  if (path.t_end <= path.t_begin) {
    throw std::invalid_argument("mu_product_check: interval must have positive length");
  }
  if (!(split > path.t_begin && split < path.t_end)) {
    throw std::invalid_argument(
        "mu_product_check: split point must lie strictly inside the interval");
  }
  const LogDensityPath left{path.log_rho, path.t_begin, split};
  const LogDensityPath right{path.log_rho, split, path.t_end};
  ProductCheck out;
  out.whole = std::exp(raw_log_integral(path, quad_tol));
  out.split_product =
      std::exp(raw_log_integral(left, quad_tol) + raw_log_integral(right, quad_tol));
  return out;
}

double ObjectiveValue::recombine() const {
  double total = 0.0;
  for (std::size_t k = 0; k < interval_integrals.size(); ++k) {
    total += interval_weights[k] * interval_integrals[k];
  }
  for (const double p : point_terms) total += p;
  return total;
}

ObjectiveValue log_objective(const StochasticSystem& sys, const MeasurementSet& ms,
                             const std::function<Vec(double)>& v_path,
                             const std::vector<Vec>& v_points,
                             const std::vector<Vec>& w_points, double quad_tol) {
  if (!v_path) {
    throw std::invalid_argument("log_objective: v_path callback is not set");
  }
  const std::size_t knots = static_cast<std::size_t>(ms.count());
  if (v_points.size() != knots || w_points.size() != knots) {
    throw std::invalid_argument(
        "log_objective: need one v point and one w point per measurement knot");
  }

  ObjectiveValue out;
  const int K = ms.intervals();
  out.interval_integrals.reserve(K);
  out.interval_weights.reserve(K);
  out.point_terms.reserve(knots);

  for (int k = 0; k < K; ++k) {
    auto integrand = [&sys, &v_path](double t) {
      return sys.log_rho_v(t, v_path(t));
    };
    const LogDensityPath path{integrand, ms.time(k), ms.time(k + 1)};
    const double integral = quadrature::integrate(
        [&](double t) { return checked_log_rho(path, t); }, path.t_begin,
        path.t_end, quad_tol);
    out.interval_integrals.push_back(integral);
    out.interval_weights.push_back(ms.interval_weight(k));
  }
  for (std::size_t k = 0; k < knots; ++k) {
    const double t = ms.time(static_cast<int>(k));
    const double term = sys.log_rho_v(t, v_points[k]) + sys.log_rho_w(t, w_points[k]);
    if (!std::isfinite(term)) {
      std::ostringstream msg;
      msg << "log_objective: non-finite point term at knot " << k;
      throw std::domain_error(msg.str());
    }
    out.point_terms.push_back(term);
  }
  out.log_value = out.recombine();
  return out;
}

}  // namespace optspline
