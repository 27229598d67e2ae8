#include "optspline/linear_solver.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <stdexcept>

#include "optspline/numerics.hpp"

namespace optspline {

TransitionTriplet transition_matrices(const Mat& A, const Mat& B, const Mat& Q,
                                      double delta) {
  const int n = static_cast<int>(A.rows());
  // Block-exponential construction: with M = [[A, B Q B^T], [0, -A^T]],
  // exp(M delta) = [[Phi, G1], [0, Psi]] and the Gramian is Psi^T G1.
  Mat M = Mat::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = A;
  M.topRightCorner(n, n) = B * Q * B.transpose();
  M.bottomRightCorner(n, n) = -A.transpose();
  const Mat E = (M * delta).exp();

  TransitionTriplet out;
  out.Phi = E.topLeftCorner(n, n);
  out.Psi = E.bottomRightCorner(n, n);
  out.G = out.Psi.transpose() * E.topRightCorner(n, n);
  out.G = 0.5 * (out.G + out.G.transpose()).eval();  // exact result is symmetric
  return out;
}

Mat segment_gramian(const Mat& A, const Mat& B, const Mat& Q, double delta) {
  if (!(delta >= 0.0)) {
    throw std::invalid_argument("segment_gramian: segment length must be nonnegative");
  }
  return transition_matrices(A, B, Q, delta).G;
}

JunctionSystem assemble_junction_system(const LinearGaussianSystem& lgs,
                                        const MeasurementSet& ms) {
  lgs.validate();
  const int nx = lgs.n_x();
  if (ms.n_y() != lgs.n_y()) {
    throw std::invalid_argument(
        "assemble_junction_system: measurement dimension does not match the model");
  }
  const int K = ms.intervals();
  const double f0 = ms.f0();

  const Mat DRD = lgs.D * lgs.R * lgs.D.transpose();
  const Mat DRD_inv = DRD.inverse();
  const Mat S = lgs.C.transpose() * DRD_inv * lgs.C;  // information of one measurement

  JunctionSystem sys;
  sys.transitions.reserve(K);
  for (int k = 0; k < K; ++k) {
    sys.transitions.push_back(transition_matrices(lgs.A, lgs.B, lgs.Q, ms.gap(k)));
  }

  // Unknowns: (c_lambda_k, c_x_k) per segment; lambda(t) = Psi(s) c_lambda_k
  // and x(t) = Phi(s) (G(s) c_lambda_k + c_x_k) on segment k. Rows impose the
  // measurement jump f0 (lambda_plus - lambda_minus) = -C^T (D R D^T)^{-1}
  // (y_k - C x(t_k)) at every knot and continuity of x at interior knots.
  const int dim = 2 * nx * K;
  sys.M = Mat::Zero(dim, dim);
  sys.rhs = Vec::Zero(dim);

  const auto cl = [nx](int k) { return 2 * nx * k; };        // c_lambda_k offset
  const auto cx = [nx](int k) { return 2 * nx * k + nx; };   // c_x_k offset

  int row = 0;
  for (int k = 0; k <= K; ++k) {
    const Vec m_k = lgs.C.transpose() * DRD_inv * ms.value(k);
    if (k == 0) {
      // f0 c_lambda_0 - S c_x_0 = -m_0
      sys.M.block(row, cl(0), nx, nx) = f0 * Mat::Identity(nx, nx);
      sys.M.block(row, cx(0), nx, nx) = -S;
      sys.rhs.segment(row, nx) = -m_k;
      row += nx;
      continue;
    }
    const TransitionTriplet& prev = sys.transitions[k - 1];
    if (k < K) {
      // x continuity: Phi_{k-1} (G_{k-1} c_lambda_{k-1} + c_x_{k-1}) = c_x_k
      sys.M.block(row, cl(k - 1), nx, nx) = prev.Phi * prev.G;
      sys.M.block(row, cx(k - 1), nx, nx) = prev.Phi;
      sys.M.block(row, cx(k), nx, nx) = -Mat::Identity(nx, nx);
      row += nx;
      // jump: f0 (c_lambda_k - Psi_{k-1} c_lambda_{k-1}) - S c_x_k = -m_k
      sys.M.block(row, cl(k), nx, nx) = f0 * Mat::Identity(nx, nx);
      sys.M.block(row, cl(k - 1), nx, nx) = -f0 * prev.Psi;
      sys.M.block(row, cx(k), nx, nx) = -S;
      sys.rhs.segment(row, nx) = -m_k;
      row += nx;
    } else {
      // terminal jump: -f0 Psi_{K-1} c_lambda_{K-1}
      //   - S Phi_{K-1}(G_{K-1} c_lambda_{K-1} + c_x_{K-1}) = -m_K
      sys.M.block(row, cl(k - 1), nx, nx) = -f0 * prev.Psi - S * prev.Phi * prev.G;
      sys.M.block(row, cx(k - 1), nx, nx) = -S * prev.Phi;
      sys.rhs.segment(row, nx) = -m_k;
      row += nx;
    }
  }
  return sys;
}

Spline solve_spline(const LinearGaussianSystem& lgs, const MeasurementSet& ms) {
  JunctionSystem sys = assemble_junction_system(lgs, ms);
  const Vec u = numerics::solve_dense(sys.M, sys.rhs, "junction system");

  const int nx = lgs.n_x();
  const int K = ms.intervals();
  const Mat DRD_inv = (lgs.D * lgs.R * lgs.D.transpose()).inverse();

  Spline spline;
  spline.model = LinearGaussianInfo{lgs.A, lgs.B, lgs.Q};
  spline.f0 = ms.f0();
  spline.knot_times = ms.times();
  spline.segments.reserve(K);
  for (int k = 0; k < K; ++k) {
    LinearGaussianSegment seg;
    seg.c_lambda = u.segment(2 * nx * k, nx);
    seg.c_x = u.segment(2 * nx * k + nx, nx);
    seg.Phi = sys.transitions[k].Phi;
    seg.Psi = sys.transitions[k].Psi;
    seg.G = sys.transitions[k].G;
    spline.segments.push_back(seg);
  }

  const Vec zero_x = Vec::Zero(nx);
  for (int k = 0; k <= K; ++k) {
    Vec x_k;
    if (k < K) {
      x_k = std::get<LinearGaussianSegment>(spline.segments[k]).c_x;
    } else {
      const auto& seg = std::get<LinearGaussianSegment>(spline.segments[K - 1]);
      x_k = seg.Phi * (seg.G * seg.c_lambda + seg.c_x);
    }
    spline.knot_x.push_back(x_k);
    // Measurements involve only x, so the costate point value vanishes and
    // with it the forcing: the knot obeys the raw drift.
    spline.knot_lambda.push_back(zero_x);
    spline.knot_v.push_back(Vec::Zero(lgs.n_v()));
    spline.knot_xdot.push_back(lgs.A * x_k);
    const Vec eta = DRD_inv * (ms.value(k) - lgs.C * x_k);
    spline.knot_eta.push_back(eta);
    spline.knot_w.push_back(lgs.R * lgs.D.transpose() * eta);
    // One-sided costate limits; the convention pins both outer limits to 0.
    Vec minus = zero_x, plus = zero_x;
    if (k > 0) {
      const auto& seg = std::get<LinearGaussianSegment>(spline.segments[k - 1]);
      minus = seg.Psi * seg.c_lambda;
    }
    if (k < K) {
      plus = std::get<LinearGaussianSegment>(spline.segments[k]).c_lambda;
    }
    spline.lambda_minus.push_back(minus);
    spline.lambda_plus.push_back(plus);
  }
  spline.validate();
  return spline;
}

}  // namespace optspline
