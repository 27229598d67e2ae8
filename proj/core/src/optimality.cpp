#include "optspline/optimality.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace optspline {

CandidateSolution candidate_from_spline(const Spline& spline) {
  spline.validate();
  CandidateSolution cand;
  // One shared copy backs all path callbacks, so candidates outlive local
  // solver state.
  const auto sp = std::make_shared<const Spline>(spline);
  cand.x = [sp](double t) { return eval_spline(*sp, t).x; };
  cand.v = [sp](double t) { return eval_spline(*sp, t).v; };
  cand.lambda = [sp](double t) { return eval_spline(*sp, t).lambda; };
  cand.xdot = [sp](double t) { return eval_spline_derivatives(*sp, t).xdot; };
  cand.lambda_dot = [sp](double t) {
    return eval_spline_derivatives(*sp, t).lambda_dot;
  };
  cand.knot_times = spline.knot_times;
  cand.x_k = spline.knot_x;
  cand.xdot_k = spline.knot_xdot;
  cand.v_k = spline.knot_v;
  cand.w_k = spline.knot_w;
  cand.eta_k = spline.knot_eta;
  cand.lambda_k = spline.knot_lambda;
  cand.lambda_minus = spline.lambda_minus;
  cand.lambda_plus = spline.lambda_plus;
  return cand;
}

namespace {

Vec central_difference(const std::function<Vec(double)>& path, double t,
                       double step) {
  return (path(t + step) - path(t - step)) / (2.0 * step);
}

}  // namespace

IntervalResiduals interval_residuals(const StochasticSystem& sys,
                                     const CandidateSolution& cand, double t,
                                     double fd_step) {
  if (!cand.x || !cand.v || !cand.lambda) {
    throw std::invalid_argument("interval_residuals: candidate path callbacks missing");
  }
  const Vec x = cand.x(t);
  const Vec v = cand.v(t);
  const Vec lam = cand.lambda(t);
  const Vec xdot = cand.xdot ? cand.xdot(t) : central_difference(cand.x, t, fd_step);
  const Vec lamdot = cand.lambda_dot ? cand.lambda_dot(t)
                                     : central_difference(cand.lambda, t, fd_step);

  IntervalResiduals r;
  r.process_gradient = sys.dlog_rho_v_dv(t, v) + sys.dnu_dv(t, v).transpose() * lam;
  r.costate_ode = lamdot + sys.df_dx(t, x).transpose() * lam;
  r.state_ode = xdot - sys.f(t, x) - sys.nu(t, v);
  return r;
}

JunctionResiduals junction_residuals(const StochasticSystem& sys,
                                     const CandidateSolution& cand, int k,
                                     const Vec& y_k, double f0) {
  const int knots = static_cast<int>(cand.knot_times.size());
  if (k < 0 || k >= knots) {
    throw std::out_of_range("junction_residuals: knot index out of range");
  }
  const double t = cand.knot_times[k];
  const Vec& x = cand.x_k[k];
  const Vec& xdot = cand.xdot_k[k];
  const Vec& v = cand.v_k[k];
  const Vec& w = cand.w_k[k];
  const Vec& eta = cand.eta_k[k];
  const Vec& lam = cand.lambda_k[k];

  JunctionResiduals r;
  r.process_gradient = sys.dlog_rho_v_dv(t, v) + sys.dnu_dv(t, v).transpose() * lam;
  r.measurement_gradient =
      sys.dlog_rho_w_dw(t, w) + sys.dxi_dw(t, w).transpose() * eta;
  r.costate_link = lam - sys.dg_dxdot(t, xdot).transpose() * eta;
  r.costate_jump = sys.df_dx(t, x).transpose() * lam +
                   sys.dh_dx(t, x).transpose() * eta +
                   f0 * (cand.lambda_plus[k] - cand.lambda_minus[k]);
  r.measurement = y_k - sys.g(t, xdot) - sys.h(t, x) - sys.xi(t, w);
  r.dynamics = xdot - sys.f(t, x) - sys.nu(t, v);
  return r;
}

void ResidualStat::absorb(const Vec& r, double t, int knot) {
  const double m = r.size() > 0 ? r.cwiseAbs().maxCoeff() : 0.0;
  if (m >= max_abs) {
    max_abs = m;
    at_time = t;
    at_knot = knot;
  }
}

double ResidualBundle::max_residual() const {
  return std::max({process_gradient.max_abs, costate_ode.max_abs,
                   state_ode.max_abs, knot_process_gradient.max_abs,
                   measurement_gradient.max_abs, costate_link.max_abs,
                   costate_jump.max_abs, measurement.max_abs,
                   knot_dynamics.max_abs, x_continuity.max_abs,
                   lambda_boundary.max_abs});
}

namespace {

nlohmann::json stat_json(const ResidualStat& stat, bool at_knot) {
  nlohmann::json j;
  j["max_abs"] = stat.max_abs;
  if (at_knot) {
    j["argmax_knot"] = stat.at_knot;
  } else {
    j["argmax_t"] = stat.at_time;
  }
  return j;
}

}  // namespace

nlohmann::json ResidualBundle::to_json() const {
  nlohmann::json j;
  j["r21"] = stat_json(process_gradient, false);
  j["r22"] = stat_json(costate_ode, false);
  j["r23"] = stat_json(state_ode, false);
  j["r24"] = stat_json(knot_process_gradient, true);
  j["r25"] = stat_json(measurement_gradient, true);
  j["r26"] = stat_json(costate_link, true);
  j["r27"] = stat_json(costate_jump, true);
  j["r28"] = stat_json(measurement, true);
  j["r29"] = stat_json(knot_dynamics, true);
  j["x_continuity"] = stat_json(x_continuity, true);
  j["lambda_boundary"] = stat_json(lambda_boundary, true);
  j["max_residual"] = max_residual();
  j["grid_per_interval"] = grid_per_interval;
  return j;
}

ResidualBundle verify(const StochasticSystem& sys, const MeasurementSet& ms,
                      const CandidateSolution& cand, int grid_per_interval,
                      double fd_step) {
  if (grid_per_interval < 1) {
    throw std::invalid_argument("verify: need at least one grid point per interval");
  }
  if (cand.knot_times.size() != static_cast<std::size_t>(ms.count())) {
    throw std::invalid_argument("verify: candidate knots do not match measurements");
  }
  for (int k = 0; k < ms.count(); ++k) {
    if (cand.knot_times[k] != ms.time(k)) {
      throw std::invalid_argument("verify: candidate knot times do not match measurements");
    }
  }

  ResidualBundle bundle;
  bundle.grid_per_interval = grid_per_interval;
  const int K = ms.intervals();

  for (int k = 0; k < K; ++k) {
    const double t0 = ms.time(k);
    const double gap = ms.gap(k);
    for (int j = 1; j <= grid_per_interval; ++j) {
      const double t = t0 + gap * j / (grid_per_interval + 1.0);
      const IntervalResiduals r = interval_residuals(sys, cand, t, fd_step);
      bundle.process_gradient.absorb(r.process_gradient, t, -1);
      bundle.costate_ode.absorb(r.costate_ode, t, -1);
      bundle.state_ode.absorb(r.state_ode, t, -1);
    }
  }

  for (int k = 0; k <= K; ++k) {
    const JunctionResiduals r =
        junction_residuals(sys, cand, k, ms.value(k), ms.f0());
    const double t = ms.time(k);
    bundle.knot_process_gradient.absorb(r.process_gradient, t, k);
    bundle.measurement_gradient.absorb(r.measurement_gradient, t, k);
    bundle.costate_link.absorb(r.costate_link, t, k);
    bundle.costate_jump.absorb(r.costate_jump, t, k);
    bundle.measurement.absorb(r.measurement, t, k);
    bundle.knot_dynamics.absorb(r.dynamics, t, k);

    // State continuity: both one-sided path limits must meet the stored
    // knot value. Offsets shrink with the local gap so the probe error is
    // far below the reporting tolerances.
    if (k > 0) {
      const double delta = 1e-12 * ms.gap(k - 1);
      bundle.x_continuity.absorb(cand.x(t - delta) - cand.x_k[k], t, k);
    }
    if (k < K) {
      const double delta = 1e-12 * ms.gap(k);
      bundle.x_continuity.absorb(cand.x(t + delta) - cand.x_k[k], t, k);
    }
  }

  bundle.lambda_boundary.absorb(cand.lambda_minus.front(), ms.time(0), 0);
  bundle.lambda_boundary.absorb(cand.lambda_plus.back(), ms.time(K), K);
  return bundle;
}

}  // namespace optspline
