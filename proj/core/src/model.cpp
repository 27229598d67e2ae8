#include "optspline/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "optspline/quadrature.hpp"
#include "optspline/rng.hpp"

namespace optspline {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

bool is_spd(const Mat& m) {
  if (m.rows() != m.cols()) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<Mat> llt(m);
  return llt.info() == Eigen::Success;
}

Vec random_normal_vec(int n, std::uint64_t seed, std::uint64_t step) {
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    v[i] = rng::normal(seed, rng::kValidationProbe, step, static_cast<std::uint64_t>(i));
  }
  return v;
}

}  // namespace

void TimeHorizon::validate() const {
  if (!(tf > t0)) {
    throw std::invalid_argument("TimeHorizon: end time must exceed start time");
  }
}

void LinearGaussianSystem::validate() const {
  const int nx = n_x();
  require(nx > 0, "LinearGaussianSystem: A must be non-empty");
  require(A.rows() == A.cols(), "LinearGaussianSystem: A must be square");
  require(B.rows() == nx, "LinearGaussianSystem: B row count must match A");
  require(C.cols() == nx, "LinearGaussianSystem: C column count must match A");
  require(C.rows() > 0, "LinearGaussianSystem: C must be non-empty");
  require(D.rows() == C.rows(), "LinearGaussianSystem: D row count must match C");
  require(Q.rows() == B.cols() && Q.cols() == B.cols(),
          "LinearGaussianSystem: Q must be n_v x n_v");
  require(R.rows() == D.cols() && R.cols() == D.cols(),
          "LinearGaussianSystem: R must be n_w x n_w");
  require(is_spd(Q), "LinearGaussianSystem: Q must be symmetric positive definite");
  require(is_spd(R), "LinearGaussianSystem: R must be symmetric positive definite");
  require(is_spd(D * R * D.transpose()),
          "LinearGaussianSystem: D R D^T must be invertible (D needs full row rank)");
}

MeasurementSet::MeasurementSet(std::vector<double> times, std::vector<Vec> values,
                               double f0)
    : times_(std::move(times)), values_(std::move(values)), f0_(f0) {
  require(times_.size() == values_.size(),
          "MeasurementSet: times and values must have equal length");
  require(times_.size() >= 2, "MeasurementSet: need K >= 1 intervals");
  require(std::isfinite(f0_) && f0_ > 0.0, "MeasurementSet: f0 must be positive");
  const int ny = static_cast<int>(values_.front().size());
  require(ny > 0, "MeasurementSet: measurements must be non-empty vectors");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    require(std::isfinite(times_[k]), "MeasurementSet: times must be finite");
    require(values_[k].size() == ny,
            "MeasurementSet: all measurements must share one dimension");
    require(values_[k].allFinite(), "MeasurementSet: measurements must be finite");
    if (k > 0) {
      require(times_[k] > times_[k - 1],
              "MeasurementSet: times must be strictly increasing");
    }
  }
  const double nominal = 1.0 / f0_;
  uniform_ = true;
  for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
    if (std::abs((times_[k + 1] - times_[k]) - nominal) > 1e-9 * nominal) {
      uniform_ = false;
      break;
    }
  }
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  out << checks_run << " checks, " << issues.size() << " issue(s)";
  for (const auto& issue : issues) {
    out << "\n  [" << issue.check << "] " << issue.message;
  }
  return out.str();
}

namespace {

class Validator {
 public:
  Validator(const StochasticSystem& sys, std::uint64_t seed)
      : sys_(sys), seed_(seed) {}

  ValidationReport run(int probes) {
    for (int i = 0; i < probes; ++i) {
      const std::uint64_t base = static_cast<std::uint64_t>(i) * 16;
      const double t = rng::uniform01(seed_, rng::kValidationProbe, base, 99);
      const Vec x = random_normal_vec(sys_.n_x, seed_, base + 1);
      const Vec v = random_normal_vec(sys_.n_v, seed_, base + 2);
      const Vec w = random_normal_vec(sys_.n_w, seed_, base + 3);
      const Vec xdot = random_normal_vec(sys_.n_x, seed_, base + 4);

      check_vector("f", sys_.f, t, x, sys_.n_x);
      check_jacobian("df_dx", sys_.f, sys_.df_dx, t, x, sys_.n_x);
      check_vector("nu", sys_.nu, t, v, sys_.n_x);
      check_jacobian("dnu_dv", sys_.nu, sys_.dnu_dv, t, v, sys_.n_x);
      check_vector("g", sys_.g, t, xdot, sys_.n_y);
      check_jacobian("dg_dxdot", sys_.g, sys_.dg_dxdot, t, xdot, sys_.n_y);
      check_vector("h", sys_.h, t, x, sys_.n_y);
      check_jacobian("dh_dx", sys_.h, sys_.dh_dx, t, x, sys_.n_y);
      check_vector("xi", sys_.xi, t, w, sys_.n_y);
      check_jacobian("dxi_dw", sys_.xi, sys_.dxi_dw, t, w, sys_.n_y);
      check_scalar("log_rho_v", sys_.log_rho_v, t, v);
      check_gradient("dlog_rho_v_dv", sys_.log_rho_v, sys_.dlog_rho_v_dv, t, v);
      check_scalar("log_rho_w", sys_.log_rho_w, t, w);
      check_gradient("dlog_rho_w_dw", sys_.log_rho_w, sys_.dlog_rho_w_dw, t, w);
    }
    return std::move(report_);
  }

 private:
  static constexpr double kFdStep = 1e-6;
  static constexpr double kRelTol = 1e-4;

  void flag(const std::string& check, const std::string& message) {
    report_.issues.push_back({check, message});
  }

  template <typename Fn>
  bool guarded(const std::string& check, Fn&& fn) {
    ++report_.checks_run;
    try {
      fn();
      return true;
    } catch (const std::exception& e) {
      flag(check, std::string("callback threw: ") + e.what());
    } catch (...) {
      flag(check, "callback threw a non-standard exception");
    }
    return false;
  }

  void check_vector(const std::string& name,
                    const std::function<Vec(double, const Vec&)>& fn, double t,
                    const Vec& arg, int expected_rows) {
    if (!fn) {
      ++report_.checks_run;
      flag(name, "callback is not set");
      return;
    }
    guarded(name, [&] {
      const Vec out = fn(t, arg);
      if (out.size() != expected_rows) {
        std::ostringstream msg;
        msg << "returned length " << out.size() << ", expected " << expected_rows
            << " at t=" << t;
        flag(name, msg.str());
      } else if (!out.allFinite()) {
        std::ostringstream msg;
        msg << "returned non-finite entries at t=" << t;
        flag(name, msg.str());
      }
    });
  }

  void check_scalar(const std::string& name,
                    const std::function<double(double, const Vec&)>& fn, double t,
                    const Vec& arg) {
    if (!fn) {
      ++report_.checks_run;
      flag(name, "callback is not set");
      return;
    }
    guarded(name, [&] {
      const double out = fn(t, arg);
      if (!std::isfinite(out)) {
        std::ostringstream msg;
        msg << "returned non-finite value at t=" << t;
        flag(name, msg.str());
      }
    });
  }

  void check_jacobian(const std::string& name,
                      const std::function<Vec(double, const Vec&)>& fn,
                      const std::function<Mat(double, const Vec&)>& jac, double t,
                      const Vec& arg, int expected_rows) {
    if (!fn || !jac) {
      ++report_.checks_run;
      if (!jac) flag(name, "callback is not set");
      return;
    }
    guarded(name, [&] {
      const Mat J = jac(t, arg);
      if (J.rows() != expected_rows || J.cols() != arg.size()) {
        std::ostringstream msg;
        msg << "returned " << J.rows() << "x" << J.cols() << ", expected "
            << expected_rows << "x" << arg.size();
        flag(name, msg.str());
        return;
      }
      for (int j = 0; j < arg.size(); ++j) {
        Vec hi = arg, lo = arg;
        hi[j] += kFdStep;
        lo[j] -= kFdStep;
        const Vec col = (fn(t, hi) - fn(t, lo)) / (2.0 * kFdStep);
        for (int i = 0; i < expected_rows; ++i) {
          const double denom = std::max({1.0, std::abs(col[i]), std::abs(J(i, j))});
          if (std::abs(col[i] - J(i, j)) > kRelTol * denom) {
            std::ostringstream msg;
            msg << "entry (" << i << "," << j << ") = " << J(i, j)
                << " disagrees with finite difference " << col[i] << " at t=" << t;
            flag(name, msg.str());
            return;
          }
        }
      }
    });
  }

  void check_gradient(const std::string& name,
                      const std::function<double(double, const Vec&)>& fn,
                      const std::function<Vec(double, const Vec&)>& grad, double t,
                      const Vec& arg) {
    if (!fn || !grad) {
      ++report_.checks_run;
      if (!grad) flag(name, "callback is not set");
      return;
    }
    guarded(name, [&] {
      const Vec g = grad(t, arg);
      if (g.size() != arg.size()) {
        std::ostringstream msg;
        msg << "returned length " << g.size() << ", expected " << arg.size();
        flag(name, msg.str());
        return;
      }
      for (int j = 0; j < arg.size(); ++j) {
        Vec hi = arg, lo = arg;
        hi[j] += kFdStep;
        lo[j] -= kFdStep;
        const double fd = (fn(t, hi) - fn(t, lo)) / (2.0 * kFdStep);
        const double denom = std::max({1.0, std::abs(fd), std::abs(g[j])});
        if (std::abs(fd - g[j]) > kRelTol * denom) {
          std::ostringstream msg;
          msg << "component " << j << " = " << g[j]
              << " disagrees with finite difference " << fd << " at t=" << t;
          flag(name, msg.str());
          return;
        }
      }
    });
  }

  const StochasticSystem& sys_;
  std::uint64_t seed_;
  ValidationReport report_;
};

}  // namespace

ValidationReport validate_system(const StochasticSystem& sys, int probes,
                                 std::uint64_t seed) {
  require(probes > 0, "validate_system: probes must be positive");
  require(sys.n_x > 0 && sys.n_v > 0 && sys.n_w > 0 && sys.n_y > 0,
          "validate_system: dimensions must be positive");
  Validator validator(sys, seed);
  return validator.run(probes);
}

StochasticSystem make_stochastic(const LinearGaussianSystem& lgs) {
  lgs.validate();
  StochasticSystem sys;
  sys.n_x = lgs.n_x();
  sys.n_v = lgs.n_v();
  sys.n_w = lgs.n_w();
  sys.n_y = lgs.n_y();

  const Mat A = lgs.A, B = lgs.B, C = lgs.C, D = lgs.D;
  const Mat Qinv = lgs.Q.inverse();
  const Mat Rinv = lgs.R.inverse();
  const double log_norm_v =
      -0.5 * (lgs.n_v() * std::log(2.0 * M_PI) + std::log(lgs.Q.determinant()));
  const double log_norm_w =
      -0.5 * (lgs.n_w() * std::log(2.0 * M_PI) + std::log(lgs.R.determinant()));

  sys.f = [A](double, const Vec& x) -> Vec { return A * x; };
  sys.df_dx = [A](double, const Vec&) -> Mat { return A; };
  sys.nu = [B](double, const Vec& v) -> Vec { return B * v; };
  sys.dnu_dv = [B](double, const Vec&) -> Mat { return B; };
  sys.g = [ny = lgs.n_y()](double, const Vec&) -> Vec { return Vec::Zero(ny); };
  sys.dg_dxdot = [ny = lgs.n_y(), nx = lgs.n_x()](double, const Vec&) -> Mat {
    return Mat::Zero(ny, nx);
  };
  sys.h = [C](double, const Vec& x) -> Vec { return C * x; };
  sys.dh_dx = [C](double, const Vec&) -> Mat { return C; };
  sys.xi = [D](double, const Vec& w) -> Vec { return D * w; };
  sys.dxi_dw = [D](double, const Vec&) -> Mat { return D; };

  sys.log_rho_v = [Qinv, log_norm_v](double, const Vec& v) -> double {
    return log_norm_v - 0.5 * v.dot(Qinv * v);
  };
  sys.dlog_rho_v_dv = [Qinv](double, const Vec& v) -> Vec { return -(Qinv * v); };
  sys.log_rho_w = [Rinv, log_norm_w](double, const Vec& w) -> double {
    return log_norm_w - 0.5 * w.dot(Rinv * w);
  };
  sys.dlog_rho_w_dw = [Rinv](double, const Vec& w) -> Vec { return -(Rinv * w); };
  return sys;
}

namespace {

LinearGaussianSystem second_order_position_model(double a21, double sigma_p,
                                                 double sigma_m) {
  LinearGaussianSystem lgs;
  lgs.A = (Mat(2, 2) << 0.0, 1.0, a21, 0.0).finished();
  lgs.B = (Mat(2, 1) << 0.0, 1.0).finished();
  lgs.C = (Mat(1, 2) << 1.0, 0.0).finished();
  lgs.D = (Mat(1, 1) << 1.0).finished();
  lgs.Q = (Mat(1, 1) << sigma_p * sigma_p).finished();
  lgs.R = (Mat(1, 1) << sigma_m * sigma_m).finished();
  return lgs;
}

}  // namespace

LinearGaussianPreset preset_double_integrator(double sigma_p, double sigma_m) {
  require(sigma_p > 0.0 && sigma_m > 0.0,
          "preset_double_integrator: noise scales must be positive");
  LinearGaussianPreset preset;
  preset.model = second_order_position_model(0.0, sigma_p, sigma_m);
  preset.system = make_stochastic(preset.model);
  return preset;
}

LinearGaussianPreset preset_harmonic(double omega, double sigma_p, double sigma_m) {
  require(omega > 0.0, "preset_harmonic: omega must be positive");
  require(sigma_p > 0.0 && sigma_m > 0.0,
          "preset_harmonic: noise scales must be positive");
  LinearGaussianPreset preset;
  preset.model = second_order_position_model(-omega * omega, sigma_p, sigma_m);
  preset.system = make_stochastic(preset.model);
  return preset;
}

double alpha_log_norm(int alpha, double sigma_p) {
  require(alpha >= 1, "alpha_log_norm: alpha must be a positive integer");
  require(sigma_p > 0.0, "alpha_log_norm: sigma_p must be positive");
  // 1/c = sigma_p * 2 * int_0^inf exp(-u^{2 alpha} / 2) du; truncate where the
  // integrand falls below exp(-60) and the remaining tail is negligible.
  const double exponent = 2.0 * alpha;
  const double cutoff = std::pow(120.0, 1.0 / exponent);
  const double half = quadrature::integrate(
      [exponent](double u) { return std::exp(-0.5 * std::pow(u, exponent)); }, 0.0,
      cutoff, 1e-14);
  return -std::log(2.0 * sigma_p * half);
}

AlphaPreset preset_alpha_particle(int alpha, double sigma_p, double sigma_m) {
  require(alpha >= 1, "preset_alpha_particle: alpha must be a positive integer");
  require(sigma_p > 0.0 && sigma_m > 0.0,
          "preset_alpha_particle: noise scales must be positive");
  AlphaPreset preset;
  preset.alpha = alpha;
  preset.sigma_p = sigma_p;
  preset.sigma_m = sigma_m;
  preset.log_norm = alpha_log_norm(alpha, sigma_p);

  StochasticSystem sys;
  sys.n_x = 2;
  sys.n_v = 1;
  sys.n_w = 1;
  sys.n_y = 1;
  sys.f = [](double, const Vec& x) -> Vec { return (Vec(2) << x[1], 0.0).finished(); };
  sys.df_dx = [](double, const Vec&) -> Mat {
    return (Mat(2, 2) << 0.0, 1.0, 0.0, 0.0).finished();
  };
  sys.nu = [](double, const Vec& v) -> Vec { return (Vec(2) << 0.0, v[0]).finished(); };
  sys.dnu_dv = [](double, const Vec&) -> Mat {
    return (Mat(2, 1) << 0.0, 1.0).finished();
  };
  sys.g = [](double, const Vec&) -> Vec { return Vec::Zero(1); };
  sys.dg_dxdot = [](double, const Vec&) -> Mat { return Mat::Zero(1, 2); };
  sys.h = [](double, const Vec& x) -> Vec { return x.head(1); };
  sys.dh_dx = [](double, const Vec&) -> Mat {
    return (Mat(1, 2) << 1.0, 0.0).finished();
  };
  sys.xi = [](double, const Vec& w) -> Vec { return w; };
  sys.dxi_dw = [](double, const Vec&) -> Mat { return Mat::Identity(1, 1); };

  const double log_norm = preset.log_norm;
  const double scale = sigma_p;
  const double power = 2.0 * alpha;
  sys.log_rho_v = [log_norm, scale, power](double, const Vec& v) -> double {
    return log_norm - 0.5 * std::pow(std::abs(v[0]) / scale, power);
  };
  sys.dlog_rho_v_dv = [scale, power](double, const Vec& v) -> Vec {
    const double mag = std::pow(std::abs(v[0]) / scale, power - 1.0);
    const double sign = v[0] >= 0.0 ? 1.0 : -1.0;
    return (Vec(1) << -0.5 * power * sign * mag / scale).finished();
  };
  const double var_m = sigma_m * sigma_m;
  const double log_norm_w = -0.5 * std::log(2.0 * M_PI * var_m);
  sys.log_rho_w = [log_norm_w, var_m](double, const Vec& w) -> double {
    return log_norm_w - 0.5 * w[0] * w[0] / var_m;
  };
  sys.dlog_rho_w_dw = [var_m](double, const Vec& w) -> Vec {
    return (Vec(1) << -w[0] / var_m).finished();
  };

  preset.system = std::move(sys);
  return preset;
}

PendulumPreset preset_pendulum(double sigma_p, double sigma_m) {
  require(sigma_p > 0.0 && sigma_m > 0.0,
          "preset_pendulum: noise scales must be positive");
  PendulumPreset preset;
  preset.sigma_p = sigma_p;
  preset.sigma_m = sigma_m;

  StochasticSystem sys;
  sys.n_x = 2;
  sys.n_v = 1;
  sys.n_w = 1;
  sys.n_y = 1;
  sys.f = [](double, const Vec& x) -> Vec {
    return (Vec(2) << x[1], -std::sin(x[0])).finished();
  };
  sys.df_dx = [](double, const Vec& x) -> Mat {
    return (Mat(2, 2) << 0.0, 1.0, -std::cos(x[0]), 0.0).finished();
  };
  sys.nu = [](double, const Vec& v) -> Vec { return (Vec(2) << 0.0, v[0]).finished(); };
  sys.dnu_dv = [](double, const Vec&) -> Mat {
    return (Mat(2, 1) << 0.0, 1.0).finished();
  };
  sys.g = [](double, const Vec&) -> Vec { return Vec::Zero(1); };
  sys.dg_dxdot = [](double, const Vec&) -> Mat { return Mat::Zero(1, 2); };
  sys.h = [](double, const Vec& x) -> Vec { return x.head(1); };
  sys.dh_dx = [](double, const Vec&) -> Mat {
    return (Mat(1, 2) << 1.0, 0.0).finished();
  };
  sys.xi = [](double, const Vec& w) -> Vec { return w; };
  sys.dxi_dw = [](double, const Vec&) -> Mat { return Mat::Identity(1, 1); };

  const double var_p = sigma_p * sigma_p;
  const double log_norm_v = -0.5 * std::log(2.0 * M_PI * var_p);
  sys.log_rho_v = [log_norm_v, var_p](double, const Vec& v) -> double {
    return log_norm_v - 0.5 * v[0] * v[0] / var_p;
  };
  sys.dlog_rho_v_dv = [var_p](double, const Vec& v) -> Vec {
    return (Vec(1) << -v[0] / var_p).finished();
  };
  const double var_m = sigma_m * sigma_m;
  const double log_norm_w = -0.5 * std::log(2.0 * M_PI * var_m);
  sys.log_rho_w = [log_norm_w, var_m](double, const Vec& w) -> double {
    return log_norm_w - 0.5 * w[0] * w[0] / var_m;
  };
  sys.dlog_rho_w_dw = [var_m](double, const Vec& w) -> Vec {
    return (Vec(1) << -w[0] / var_m).finished();
  };

  preset.system = std::move(sys);
  return preset;
}

}  // namespace optspline
