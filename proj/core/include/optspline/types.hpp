#pragma once

#include <Eigen/Dense>

namespace optspline {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Closed time window [t0, tf] on which a model and its measurements live.
struct TimeHorizon {
  double t0 = 0.0;
  double tf = 1.0;

  double length() const { return tf - t0; }
  bool contains(double t) const { return t >= t0 && t <= tf; }
  void validate() const;
};

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace optspline
