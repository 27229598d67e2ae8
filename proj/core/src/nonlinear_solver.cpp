#include "optspline/nonlinear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "optspline/alpha_family.hpp"
#include "optspline/linear_solver.hpp"
#include "optspline/numerics.hpp"

namespace optspline {
namespace {

/// Shared damped-Newton driver: residual() refreshes from the iterate,
/// jacobian() matches it. Throws with the best residual reached on failure.
void run_newton(Vec& u, const std::function<Vec(const Vec&)>& residual,
                const std::function<Mat(const Vec&)>& jacobian,
                const NewtonOptions& opt, const std::string& context) {
  Vec F = residual(u);
  double norm = F.cwiseAbs().maxCoeff();
  double best = norm;
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (norm <= opt.tolerance) return;
    const Mat J = jacobian(u);
    const Vec step = numerics::solve_dense(J, -F, context + " step");
    double gamma = 1.0;
    bool accepted = false;
    for (int cut = 0; cut <= opt.max_backtracks; ++cut) {
      const Vec trial = u + gamma * step;
      const Vec Ftrial = residual(trial);
      const double trial_norm = Ftrial.cwiseAbs().maxCoeff();
      if (trial_norm < norm || trial_norm <= opt.tolerance) {
        u = trial;
        F = Ftrial;
        norm = trial_norm;
        best = std::min(best, norm);
        accepted = true;
        break;
      }
      gamma *= 0.5;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg << context << ": line search stalled, best residual " << best;
      throw std::runtime_error(msg.str());
    }
  }
  if (norm > opt.tolerance) {
    std::ostringstream msg;
    msg << context << ": no convergence in " << opt.max_iterations
        << " iterations, best residual " << best;
    throw std::runtime_error(msg.str());
  }
}

// ---------------------------------------------------------------------------
// Alpha-family solver
// ---------------------------------------------------------------------------

struct AlphaProblem {
  alpha_family::Params prm;
  const MeasurementSet* ms = nullptr;
  double inv_var_m = 1.0;
  double f0 = 1.0;
  int K = 0;

  // Unknowns: (a_k, b_k, c_k, d_k) stacked per segment. Equations: the two
  // jump components at every knot plus position/velocity continuity at the
  // interior knots.
  Vec residual(const Vec& u) const {
    Vec F(4 * K);
    int row = 0;
    for (int k = 0; k <= K; ++k) {
      const double y = ms->value(k)[0];
      if (k > 0) {
        const double a = u[4 * (k - 1)], b = u[4 * (k - 1) + 1];
        const double c = u[4 * (k - 1) + 2], d = u[4 * (k - 1) + 3];
        const double gap = ms->gap(k - 1);
        const auto ints = alpha_family::segment_integrals(prm, a, b, gap);
        const double x1_end = d + c * gap + ints.I1;
        const double x2_end = c + ints.I2;
        const double lam2_end = a * gap + b;
        if (k < K) {
          const double a_k = u[4 * k], b_k = u[4 * k + 1];
          const double c_k = u[4 * k + 2], d_k = u[4 * k + 3];
          F[row++] = d_k - x1_end;
          F[row++] = c_k - x2_end;
          F[row++] = (y - d_k) * inv_var_m + f0 * (-a_k + a);
          F[row++] = f0 * (b_k - lam2_end);
        } else {
          F[row++] = (y - x1_end) * inv_var_m + f0 * a;
          F[row++] = f0 * (0.0 - lam2_end);
        }
      } else {
        const double a0 = u[0], b0 = u[1], d0 = u[3];
        F[row++] = (y - d0) * inv_var_m + f0 * (-a0);
        F[row++] = f0 * b0;
      }
    }
    return F;
  }

  Mat jacobian(const Vec& u) const {
    Mat J = Mat::Zero(4 * K, 4 * K);
    int row = 0;
    for (int k = 0; k <= K; ++k) {
      if (k > 0) {
        const int p = 4 * (k - 1);
        const double a = u[p], b = u[p + 1];
        const double gap = ms->gap(k - 1);
        const auto ints = alpha_family::segment_integrals(prm, a, b, gap);
        // Partials of the segment end values in (a, b, c, d).
        const double x1_da = ints.dI1_da, x1_db = ints.dI1_db;
        const double x2_da = ints.dI2_da, x2_db = ints.dI2_db;
        if (k < K) {
          const int q = 4 * k;
          J(row, q + 3) = 1.0;
          J(row, p) = -x1_da;
          J(row, p + 1) = -x1_db;
          J(row, p + 2) = -gap;
          J(row, p + 3) = -1.0;
          ++row;
          J(row, q + 2) = 1.0;
          J(row, p) = -x2_da;
          J(row, p + 1) = -x2_db;
          J(row, p + 2) = -1.0;
          ++row;
          J(row, q + 3) = -inv_var_m;
          J(row, q) = -f0;
          J(row, p) = f0;
          ++row;
          J(row, q + 1) = f0;
          J(row, p) = -f0 * gap;
          J(row, p + 1) = -f0;
          ++row;
        } else {
          J(row, p) = -x1_da * inv_var_m + f0;
          J(row, p + 1) = -x1_db * inv_var_m;
          J(row, p + 2) = -gap * inv_var_m;
          J(row, p + 3) = -inv_var_m;
          ++row;
          J(row, p) = -f0 * gap;
          J(row, p + 1) = -f0;
          ++row;
        }
      } else {
        J(row, 0) = -f0;
        J(row, 3) = -inv_var_m;
        ++row;
        J(row, 1) = f0;
        ++row;
      }
    }
    return J;
  }
};

Spline package_alpha(const AlphaProblem& prob, const AlphaPreset& preset,
                     const Vec& u) {
  const int K = prob.K;
  const MeasurementSet& ms = *prob.ms;
  Spline spline;
  spline.model = AlphaInfo{preset.alpha, preset.sigma_p};
  spline.f0 = ms.f0();
  spline.knot_times = ms.times();
  for (int k = 0; k < K; ++k) {
    spline.segments.push_back(
        AlphaSegment{u[4 * k], u[4 * k + 1], u[4 * k + 2], u[4 * k + 3]});
  }
  const Vec zero2 = Vec::Zero(2);
  const double var_m = preset.sigma_m * preset.sigma_m;
  for (int k = 0; k <= K; ++k) {
    double x1, x2;
    if (k < K) {
      const auto& seg = std::get<AlphaSegment>(spline.segments[k]);
      x1 = seg.d;
      x2 = seg.c;
    } else {
      const auto& seg = std::get<AlphaSegment>(spline.segments[K - 1]);
      const double gap = ms.gap(K - 1);
      const auto ints = alpha_family::segment_integrals(prob.prm, seg.a, seg.b, gap);
      x1 = seg.d + seg.c * gap + ints.I1;
      x2 = seg.c + ints.I2;
    }
    spline.knot_x.push_back((Vec(2) << x1, x2).finished());
    spline.knot_xdot.push_back((Vec(2) << x2, 0.0).finished());
    spline.knot_v.push_back(Vec::Zero(1));
    spline.knot_lambda.push_back(zero2);
    const double w = ms.value(k)[0] - x1;
    spline.knot_w.push_back((Vec(1) << w).finished());
    spline.knot_eta.push_back((Vec(1) << w / var_m).finished());
    Vec minus = zero2, plus = zero2;
    if (k > 0) {
      const auto& seg = std::get<AlphaSegment>(spline.segments[k - 1]);
      minus = (Vec(2) << -seg.a, seg.a * ms.gap(k - 1) + seg.b).finished();
    }
    if (k < K) {
      const auto& seg = std::get<AlphaSegment>(spline.segments[k]);
      plus = (Vec(2) << -seg.a, seg.b).finished();
    }
    spline.lambda_minus.push_back(minus);
    spline.lambda_plus.push_back(plus);
  }
  spline.validate();
  return spline;
}

}  // namespace

Spline solve_alpha(const AlphaPreset& preset, const MeasurementSet& ms,
                   const NewtonOptions& options) {
  if (preset.alpha < 1) {
    throw std::invalid_argument("solve_alpha: alpha must be a positive integer");
  }
  if (ms.n_y() != 1) {
    throw std::invalid_argument("solve_alpha: expects scalar position measurements");
  }
  AlphaProblem prob;
  prob.prm = alpha_family::Params::make(preset.alpha, preset.sigma_p);
  prob.ms = &ms;
  prob.inv_var_m = 1.0 / (preset.sigma_m * preset.sigma_m);
  prob.f0 = ms.f0();
  prob.K = ms.intervals();

  Vec u = Vec::Zero(4 * prob.K);
  if (preset.alpha > 1) {
    // Newton cannot start at the zero costate: dV/dz is infinite there for
    // alpha >= 2. The Gaussian closed form is the alpha = 1 member of the
    // same parametrization and is an excellent warm start.
    const LinearGaussianPreset gauss =
        preset_double_integrator(preset.sigma_p, preset.sigma_m);
    const Spline warm = solve_spline(gauss.model, ms);
    for (int k = 0; k < prob.K; ++k) {
      const CubicCoefficients cc = cubic_coefficients(warm, k);
      u[4 * k] = cc.a;
      u[4 * k + 1] = cc.b;
      u[4 * k + 2] = cc.c;
      u[4 * k + 3] = cc.d;
    }
  }

  run_newton(
      u, [&prob](const Vec& w) { return prob.residual(w); },
      [&prob](const Vec& w) { return prob.jacobian(w); }, options,
      "alpha junction solve");
  return package_alpha(prob, preset, u);
}

// ---------------------------------------------------------------------------
// Initial guess
// ---------------------------------------------------------------------------

Vec InitialGuess::eval(double t) const {
  if (times.empty()) throw std::invalid_argument("InitialGuess: empty");
  if (t <= times.front()) return states.front();
  if (t >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
  const double s = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - s) * states[k] + s * states[k + 1];
}

InitialGuess initial_guess(const StochasticSystem& sys, const MeasurementSet& ms) {
  if (sys.n_x < 1) throw std::invalid_argument("initial_guess: n_x must be positive");
  const int K = ms.intervals();
  InitialGuess guess;
  guess.times = ms.times();
  guess.states.assign(K + 1, Vec::Zero(sys.n_x));
  for (int k = 0; k <= K; ++k) guess.states[k][0] = ms.value(k)[0];
  // Each unobserved component is the finite-difference slope of the one
  // before it: centered inside, one-sided at the ends.
  for (int c = 1; c < sys.n_x; ++c) {
    for (int k = 0; k <= K; ++k) {
      const int lo = std::max(0, k - 1);
      const int hi = std::min(K, k + 1);
      guess.states[k][c] = (guess.states[hi][c - 1] - guess.states[lo][c - 1]) /
                           (ms.time(hi) - ms.time(lo));
    }
  }
  return guess;
}

// ---------------------------------------------------------------------------
// Collocation
// ---------------------------------------------------------------------------

CollocationMesh make_collocation_mesh(const MeasurementSet& ms, int m) {
  if (m < 3) {
    throw std::invalid_argument("make_collocation_mesh: need at least 3 nodes per interval");
  }
  CollocationMesh mesh;
  mesh.knots = ms.times();
  mesh.nodes_per_interval = m;
  const std::vector<double> ref = numerics::gauss_lobatto_points(m);
  mesh.node_times.reserve(ms.intervals());
  for (int k = 0; k < ms.intervals(); ++k) {
    std::vector<double> nodes(m);
    const double t0 = ms.time(k), gap = ms.gap(k);
    for (int i = 0; i < m; ++i) nodes[i] = t0 + 0.5 * (ref[i] + 1.0) * gap;
    nodes.front() = t0;          // pin endpoints exactly
    nodes.back() = ms.time(k + 1);
    mesh.node_times.push_back(std::move(nodes));
  }
  return mesh;
}

namespace {

/// Gaussian noise data recovered from the callbacks by probing. Gradient
/// probes at two scales guard against silently mis-solving a non-Gaussian
/// model.
struct ExtractedNoise {
  Mat B;        // forcing map, nu(t, v) = B v
  Mat Q;        // process covariance
  Mat W;        // B Q B^T
  Mat D;        // measurement noise map, xi(t, w) = D w
  Mat R;        // measurement covariance
  Mat DRD_inv;  // (D R D^T)^{-1}
};

Mat gradient_curvature(const std::function<Vec(double, const Vec&)>& grad,
                       int dim, double t, const std::string& what) {
  // For a quadratic log-density the gradient is linear: columns of the
  // (negated) Hessian come out exactly at any probe step. Disagreement
  // between steps 1 and 2 flags a non-quadratic density.
  Mat H(dim, dim);
  for (int j = 0; j < dim; ++j) {
    Vec e = Vec::Zero(dim);
    e[j] = 1.0;
    const Vec c1 = (grad(t, e) - grad(t, -e)) / 2.0;
    const Vec c2 = (grad(t, 2.0 * e) - grad(t, -2.0 * e)) / 4.0;
    if ((c1 - c2).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + c1.cwiseAbs().maxCoeff())) {
      throw std::invalid_argument(
          "solve_collocation: " + what +
          " log-density is not quadratic (Gaussian); this solver eliminates "
          "the noise in closed form and supports only Gaussian noise");
    }
    H.col(j) = -c1;
  }
  return H;
}

Mat linear_map(const std::function<Vec(double, const Vec&)>& fn,
               const std::function<Mat(double, const Vec&)>& jac, int rows,
               int cols, double t, const std::string& what) {
  const Mat M = jac(t, Vec::Zero(cols));
  if (M.rows() != rows || M.cols() != cols) {
    throw std::invalid_argument("solve_collocation: " + what +
                                " Jacobian has unexpected shape");
  }
  for (int j = 0; j < cols; ++j) {
    Vec e = Vec::Zero(cols);
    e[j] = 1.0;
    const Vec lin = fn(t, e) - fn(t, Vec::Zero(cols));
    if ((lin - M.col(j)).cwiseAbs().maxCoeff() >
        1e-8 * (1.0 + M.col(j).cwiseAbs().maxCoeff())) {
      throw std::invalid_argument(
          "solve_collocation: " + what +
          " must be linear in the noise for closed-form elimination");
    }
  }
  return M;
}

ExtractedNoise extract_noise(const StochasticSystem& sys, double t_probe) {
  ExtractedNoise out;
  out.B = linear_map(sys.nu, sys.dnu_dv, sys.n_x, sys.n_v, t_probe, "nu");
  out.D = linear_map(sys.xi, sys.dxi_dw, sys.n_y, sys.n_w, t_probe, "xi");
  const Mat Qinv =
      gradient_curvature(sys.dlog_rho_v_dv, sys.n_v, t_probe, "process");
  const Mat Rinv =
      gradient_curvature(sys.dlog_rho_w_dw, sys.n_w, t_probe, "measurement");
  out.Q = Qinv.inverse();
  out.R = Rinv.inverse();
  out.W = out.B * out.Q * out.B.transpose();
  out.DRD_inv = (out.D * out.R * out.D.transpose()).inverse();

  // The junction treatment below relies on measurements that do not involve
  // x' (the costate point value then vanishes at every knot).
  for (int probe = 0; probe < 3; ++probe) {
    Vec xd = Vec::Zero(sys.n_x);
    for (int c = 0; c < sys.n_x; ++c) xd[c] = std::sin(3.7 * probe + 1.3 * c) * 2.0;
    if (sys.g(t_probe, xd).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument(
          "solve_collocation: measurements must not involve x' "
          "(g must vanish identically)");
    }
  }
  return out;
}

struct CollocationProblem {
  const StochasticSystem* sys = nullptr;
  const MeasurementSet* ms = nullptr;
  ExtractedNoise noise;
  CollocationMesh mesh;
  std::vector<Mat> diff;  ///< per-interval differentiation matrix (physical time)
  int m = 0;
  int K = 0;
  int nx = 0;
  double f0 = 1.0;

  int x_index(int k, int node, int comp) const {
    return k * 2 * m * nx + node * nx + comp;
  }
  int lam_index(int k, int node, int comp) const {
    return k * 2 * m * nx + m * nx + node * nx + comp;
  }
  int size() const { return 2 * m * nx * K; }

  Vec knot_state(const Vec& u, int k) const {
    Vec x(nx);
    if (k < K) {
      for (int c = 0; c < nx; ++c) x[c] = u[x_index(k, 0, c)];
    } else {
      for (int c = 0; c < nx; ++c) x[c] = u[x_index(K - 1, m - 1, c)];
    }
    return x;
  }

  Vec eta(const Vec& x_k, int k) const {
    const double t = ms->time(k);
    return noise.DRD_inv * (ms->value(k) - sys->h(t, x_k));
  }

  Vec jump_residual(const Vec& u, int k) const {
    const Vec x_k = knot_state(u, k);
    const double t = ms->time(k);
    Vec lam_plus = Vec::Zero(nx), lam_minus = Vec::Zero(nx);
    if (k < K) {
      for (int c = 0; c < nx; ++c) lam_plus[c] = u[lam_index(k, 0, c)];
    }
    if (k > 0) {
      for (int c = 0; c < nx; ++c) lam_minus[c] = u[lam_index(k - 1, m - 1, c)];
    }
    // The costate point value is zero at knots, so (df/dx)^T lambda drops.
    return sys->dh_dx(t, x_k).transpose() * eta(x_k, k) +
           f0 * (lam_plus - lam_minus);
  }

  Vec residual(const Vec& u) const {
    Vec F(size());
    int row = 0;
    for (int k = 0; k < K; ++k) {
      const auto& nodes = mesh.node_times[k];
      const Mat& Dm = diff[k];
      Mat X(m, nx), L(m, nx);
      for (int i = 0; i < m; ++i) {
        for (int c = 0; c < nx; ++c) {
          X(i, c) = u[x_index(k, i, c)];
          L(i, c) = u[lam_index(k, i, c)];
        }
      }
      const Mat dX = Dm * X;  // interpolant derivatives at the nodes
      const Mat dL = Dm * L;
      // State equation collocated away from the left endpoint (which carries
      // the continuity/jump coupling), costate away from the right.
      for (int i = 1; i < m; ++i) {
        const Vec r = dX.row(i).transpose() -
                      sys->f(nodes[i], X.row(i).transpose()) -
                      noise.W * L.row(i).transpose();
        F.segment(row, nx) = r;
        row += nx;
      }
      for (int i = 0; i + 1 < m; ++i) {
        const Vec r = dL.row(i).transpose() +
                      sys->df_dx(nodes[i], X.row(i).transpose()).transpose() *
                          L.row(i).transpose();
        F.segment(row, nx) = r;
        row += nx;
      }
    }
    for (int k = 1; k < K; ++k) {
      for (int c = 0; c < nx; ++c) {
        F[row + c] = u[x_index(k, 0, c)] - u[x_index(k - 1, m - 1, c)];
      }
      row += nx;
    }
    for (int k = 0; k <= K; ++k) {
      F.segment(row, nx) = jump_residual(u, k);
      row += nx;
    }
    return F;
  }

  Mat jacobian(const Vec& u) const {
    Mat J = Mat::Zero(size(), size());
    int row = 0;
    const double fd = 1e-7;
    for (int k = 0; k < K; ++k) {
      const auto& nodes = mesh.node_times[k];
      const Mat& Dm = diff[k];
      for (int i = 1; i < m; ++i) {
        Vec xi(nx);
        for (int c = 0; c < nx; ++c) xi[c] = u[x_index(k, i, c)];
        const Mat dfdx = sys->df_dx(nodes[i], xi);
        for (int j = 0; j < m; ++j) {
          for (int c = 0; c < nx; ++c) {
            J(row + c, x_index(k, j, c)) += Dm(i, j);
          }
        }
        for (int c = 0; c < nx; ++c) {
          for (int cc = 0; cc < nx; ++cc) {
            J(row + c, x_index(k, i, cc)) -= dfdx(c, cc);
            J(row + c, lam_index(k, i, cc)) -= noise.W(c, cc);
          }
        }
        row += nx;
      }
      for (int i = 0; i + 1 < m; ++i) {
        Vec xi(nx), li(nx);
        for (int c = 0; c < nx; ++c) {
          xi[c] = u[x_index(k, i, c)];
          li[c] = u[lam_index(k, i, c)];
        }
        const Mat dfdxT = sys->df_dx(nodes[i], xi).transpose();
        for (int j = 0; j < m; ++j) {
          for (int c = 0; c < nx; ++c) {
            J(row + c, lam_index(k, j, c)) += Dm(i, j);
          }
        }
        for (int c = 0; c < nx; ++c) {
          for (int cc = 0; cc < nx; ++cc) {
            J(row + c, lam_index(k, i, cc)) += dfdxT(c, cc);
          }
        }
        // Curvature of (df/dx)^T lambda in x, by central differences.
        for (int cc = 0; cc < nx; ++cc) {
          Vec hi = xi, lo = xi;
          hi[cc] += fd;
          lo[cc] -= fd;
          const Vec dcol = (sys->df_dx(nodes[i], hi).transpose() * li -
                            sys->df_dx(nodes[i], lo).transpose() * li) /
                           (2.0 * fd);
          for (int c = 0; c < nx; ++c) J(row + c, x_index(k, i, cc)) += dcol[c];
        }
        row += nx;
      }
    }
    for (int k = 1; k < K; ++k) {
      for (int c = 0; c < nx; ++c) {
        J(row + c, x_index(k, 0, c)) = 1.0;
        J(row + c, x_index(k - 1, m - 1, c)) = -1.0;
      }
      row += nx;
    }
    const double fdj = 1e-7;
    for (int k = 0; k <= K; ++k) {
      const double t = ms->time(k);
      const Vec x_k = knot_state(u, k);
      // d/dx of (dh/dx)^T eta(x), by central differences (exact for linear h).
      for (int cc = 0; cc < nx; ++cc) {
        Vec hi = x_k, lo = x_k;
        hi[cc] += fdj;
        lo[cc] -= fdj;
        const Vec rhi = sys->dh_dx(t, hi).transpose() * eta(hi, k);
        const Vec rlo = sys->dh_dx(t, lo).transpose() * eta(lo, k);
        const Vec dcol = (rhi - rlo) / (2.0 * fdj);
        const int col = k < K ? x_index(k, 0, cc) : x_index(K - 1, m - 1, cc);
        for (int c = 0; c < nx; ++c) J(row + c, col) += dcol[c];
      }
      if (k < K) {
        for (int c = 0; c < nx; ++c) J(row + c, lam_index(k, 0, c)) += f0;
      }
      if (k > 0) {
        for (int c = 0; c < nx; ++c) J(row + c, lam_index(k - 1, m - 1, c)) -= f0;
      }
      row += nx;
    }
    return J;
  }
};

CollocationProblem make_problem(const StochasticSystem& sys,
                                const MeasurementSet& ms, int m) {
  if (sys.n_y != ms.n_y()) {
    throw std::invalid_argument(
        "solve_collocation: measurement dimension does not match the model");
  }
  CollocationProblem prob;
  prob.sys = &sys;
  prob.ms = &ms;
  prob.noise = extract_noise(sys, ms.time(0));
  prob.mesh = make_collocation_mesh(ms, m);
  prob.m = m;
  prob.K = ms.intervals();
  prob.nx = sys.n_x;
  prob.f0 = ms.f0();
  prob.diff.reserve(prob.K);
  for (int k = 0; k < prob.K; ++k) {
    prob.diff.push_back(numerics::differentiation_matrix(prob.mesh.node_times[k]));
  }
  return prob;
}

Vec seed_from_paths(const CollocationProblem& prob,
                    const std::function<Vec(double)>& x_path,
                    const std::function<Vec(double)>& lam_path) {
  Vec u = Vec::Zero(prob.size());
  for (int k = 0; k < prob.K; ++k) {
    const auto& nodes = prob.mesh.node_times[k];
    const double gap = nodes.back() - nodes.front();
    for (int i = 0; i < prob.m; ++i) {
      // Sample strictly inside the segment so one-sided costate limits (not
      // knot point values) seed the endpoint nodes.
      double t = nodes[i];
      if (i == 0) t += 1e-9 * gap;
      if (i == prob.m - 1) t -= 1e-9 * gap;
      const Vec x = x_path(t);
      const Vec lam = lam_path(t);
      for (int c = 0; c < prob.nx; ++c) {
        u[prob.x_index(k, i, c)] = x[c];
        u[prob.lam_index(k, i, c)] = lam[c];
      }
    }
  }
  return u;
}

Spline package_collocation(const CollocationProblem& prob, const Vec& u) {
  const StochasticSystem& sys = *prob.sys;
  const MeasurementSet& ms = *prob.ms;
  const int K = prob.K, m = prob.m, nx = prob.nx;

  Spline spline;
  spline.model = PolynomialInfo{prob.noise.B, prob.noise.Q};
  spline.f0 = ms.f0();
  spline.knot_times = ms.times();
  for (int k = 0; k < K; ++k) {
    PolynomialSegment seg;
    seg.nodes = prob.mesh.node_times[k];
    seg.x_nodes = Mat(m, nx);
    seg.lambda_nodes = Mat(m, nx);
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < nx; ++c) {
        seg.x_nodes(i, c) = u[prob.x_index(k, i, c)];
        seg.lambda_nodes(i, c) = u[prob.lam_index(k, i, c)];
      }
    }
    spline.segments.push_back(std::move(seg));
  }

  const Vec zero_v = Vec::Zero(sys.n_v);
  for (int k = 0; k <= K; ++k) {
    const double t = ms.time(k);
    const Vec x_k = prob.knot_state(u, k);
    const Vec eta = prob.eta(x_k, k);
    spline.knot_x.push_back(x_k);
    spline.knot_lambda.push_back(Vec::Zero(nx));
    spline.knot_v.push_back(zero_v);
    spline.knot_xdot.push_back(sys.f(t, x_k) + sys.nu(t, zero_v));
    spline.knot_eta.push_back(eta);
    spline.knot_w.push_back(prob.noise.R * prob.noise.D.transpose() * eta);
    Vec minus = Vec::Zero(nx), plus = Vec::Zero(nx);
    if (k > 0) {
      const auto& seg = std::get<PolynomialSegment>(spline.segments[k - 1]);
      minus = seg.lambda_nodes.row(m - 1).transpose();
    }
    if (k < K) {
      const auto& seg = std::get<PolynomialSegment>(spline.segments[k]);
      plus = seg.lambda_nodes.row(0).transpose();
    }
    spline.lambda_minus.push_back(minus);
    spline.lambda_plus.push_back(plus);
  }
  spline.validate();
  return spline;
}

Spline solve_collocation_impl(const StochasticSystem& sys, const MeasurementSet& ms,
                              const std::function<Vec(double)>& x_path,
                              const std::function<Vec(double)>& lam_path, int m,
                              const NewtonOptions& options, double refine_tol) {
  CollocationProblem coarse = make_problem(sys, ms, m);
  Vec u = seed_from_paths(coarse, x_path, lam_path);
  run_newton(
      u, [&coarse](const Vec& w) { return coarse.residual(w); },
      [&coarse](const Vec& w) { return coarse.jacobian(w); }, options,
      "collocation solve");
  const Spline at_m = package_collocation(coarse, u);

  // One refinement pass: double the nodes, re-solve from the coarse
  // polynomials, and require the knot states to have settled.
  CollocationProblem fine = make_problem(sys, ms, 2 * m);
  Vec u2 = seed_from_paths(
      fine, [&at_m](double t) { return eval_spline(at_m, t).x; },
      [&at_m](double t) { return eval_spline(at_m, t).lambda; });
  run_newton(
      u2, [&fine](const Vec& w) { return fine.residual(w); },
      [&fine](const Vec& w) { return fine.jacobian(w); }, options,
      "collocation refinement solve");
  const Spline at_2m = package_collocation(fine, u2);

  double moved = 0.0;
  for (int k = 0; k <= ms.intervals(); ++k) {
    moved = std::max(moved,
                     (at_2m.knot_x[k] - at_m.knot_x[k]).cwiseAbs().maxCoeff());
  }
  if (moved > refine_tol) {
    std::ostringstream msg;
    msg << "solve_collocation: mesh not converged, knot state moved " << moved
        << " when refining " << m << " -> " << 2 * m << " nodes per interval";
    throw std::runtime_error(msg.str());
  }
  return at_2m;
}

}  // namespace

Spline solve_collocation(const StochasticSystem& sys, const MeasurementSet& ms,
                         const InitialGuess& init, int m,
                         const NewtonOptions& options, double refine_tol) {
  if (init.times.size() != init.states.size() || init.times.empty()) {
    throw std::invalid_argument("solve_collocation: malformed initial guess");
  }
  const Vec zero_lam = Vec::Zero(sys.n_x);
  return solve_collocation_impl(
      sys, ms, [&init](double t) { return init.eval(t); },
      [&zero_lam](double) { return zero_lam; }, m, options, refine_tol);
}

Spline solve_collocation(const StochasticSystem& sys, const MeasurementSet& ms,
                         const Spline& init, int m, const NewtonOptions& options,
                         double refine_tol) {
  init.validate();
  return solve_collocation_impl(
      sys, ms, [&init](double t) { return eval_spline(init, t).x; },
      [&init](double t) { return eval_spline(init, t).lambda; }, m, options,
      refine_tol);
}

}  // namespace optspline
