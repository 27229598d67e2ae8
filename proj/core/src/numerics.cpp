#include "optspline/numerics.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace optspline::numerics {

Vec solve_dense(const Mat& M, const Vec& rhs, const std::string& context) {
  if (M.rows() != M.cols() || M.rows() != rhs.size()) {
    throw std::invalid_argument("solve_dense: dimension mismatch in " + context);
  }
  const int n = static_cast<int>(M.rows());

  // Row then column equilibration; the systems assembled here mix blocks of
  // wildly different scales (e.g. 1/sigma_m^2 against transition entries),
  // and plain LU would lose most of its accuracy to that scaling.
  Vec row_scale(n), col_scale(n);
  for (int i = 0; i < n; ++i) {
    const double m = M.row(i).cwiseAbs().maxCoeff();
    row_scale[i] = m > 0.0 ? 1.0 / m : 1.0;
  }
  Mat S = row_scale.asDiagonal() * M;
  for (int j = 0; j < n; ++j) {
    const double m = S.col(j).cwiseAbs().maxCoeff();
    col_scale[j] = m > 0.0 ? 1.0 / m : 1.0;
  }
  S = S * col_scale.asDiagonal();

  Eigen::PartialPivLU<Mat> lu(S);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    std::ostringstream msg;
    msg << "degenerate " << context << " (condition estimate "
        << (rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity())
        << ")";
    throw std::runtime_error(msg.str());
  }

  const Vec scaled_rhs = row_scale.asDiagonal() * rhs;
  Vec y = lu.solve(scaled_rhs);
  // One round of iterative refinement in the scaled system.
  y += lu.solve(scaled_rhs - S * y);
  return col_scale.asDiagonal() * y;
}

std::vector<double> gauss_lobatto_points(int m) {
  if (m < 2) {
    throw std::invalid_argument("gauss_lobatto_points: need at least 2 points");
  }
  std::vector<double> pts(m);
  pts.front() = -1.0;
  pts.back() = 1.0;
  const int n = m - 1;  // interior points are roots of P_n'
  for (int i = 1; i < n; ++i) {
    // Chebyshev-Gauss-Lobatto initial guess, polished by Newton on P_n'.
    double x = -std::cos(M_PI * i / n);
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n and P_{n-1} by the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);   // P_n'
      const double d2p = (2.0 * x * dp - n * (n + 1.0) * p1) / (1.0 - x * x);
      const double step = dp / d2p;
      x -= step;
      if (std::abs(step) < 1e-15) break;
    }
    pts[i] = x;
  }
  return pts;
}

std::vector<double> barycentric_weights(const std::vector<double>& nodes) {
  const std::size_t m = nodes.size();
  std::vector<double> w(m, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      w[i] /= (nodes[i] - nodes[j]);
    }
  }
  return w;
}

Mat differentiation_matrix(const std::vector<double>& nodes) {
  const int m = static_cast<int>(nodes.size());
  const std::vector<double> w = barycentric_weights(nodes);
  Mat D = Mat::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    double diag = 0.0;
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      D(i, j) = (w[j] / w[i]) / (nodes[i] - nodes[j]);
      diag -= D(i, j);
    }
    D(i, i) = diag;
  }
  return D;
}

Vec barycentric_eval(const std::vector<double>& nodes,
                     const std::vector<double>& weights, const Mat& values,
                     double t) {
  const int m = static_cast<int>(nodes.size());
  for (int i = 0; i < m; ++i) {
    if (t == nodes[i]) return values.row(i).transpose();
  }
  Vec num = Vec::Zero(values.cols());
  double den = 0.0;
  for (int i = 0; i < m; ++i) {
    const double c = weights[i] / (t - nodes[i]);
    num += c * values.row(i).transpose();
    den += c;
  }
  return num / den;
}

Vec barycentric_eval_derivative(const std::vector<double>& nodes,
                                const std::vector<double>& weights,
                                const Mat& values, double t) {
  const int m = static_cast<int>(nodes.size());
  for (int i = 0; i < m; ++i) {
    if (t == nodes[i]) {
      // At a node, fall back to the differentiation matrix row.
      const Mat D = differentiation_matrix(nodes);
      return (D.row(i) * values).transpose();
    }
  }
  const Vec p = barycentric_eval(nodes, weights, values, t);
  Vec num = Vec::Zero(values.cols());
  double den = 0.0;
  for (int i = 0; i < m; ++i) {
    const double c = weights[i] / (t - nodes[i]);
    num += c * (p - values.row(i).transpose()) / (t - nodes[i]);
    den += c;
  }
  return num / den;
}

}  // namespace optspline::numerics
