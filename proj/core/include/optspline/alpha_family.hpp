#pragma once

#include <cmath>

namespace optspline::alpha_family {

// Segment arithmetic for the heavy-tailed process density
//   rho_v(v) proportional to exp(-(v/sigma_p)^{2 alpha} / 2).
//
// Within one inter-measurement segment the costate is
//   lambda = (-a, a s + b),  s = t - t_k,
// and the stationarity condition gives the velocity forcing
//   v(s) = V(a s + b),  V(z) = kappa * sgn(z) |z|^p,
// with p = 1/(2 alpha - 1) and kappa = (sigma_p^{2 alpha} / alpha)^p.
// Positions follow by integrating twice:
//   x2(s) = c + I2(s),  x1(s) = d + c s + I1(s).
// Everything below is exact across sign changes of z = a s + b.

struct Params {
  int alpha = 1;
  double sigma_p = 1.0;
  double p = 1.0;      ///< velocity exponent 1/(2 alpha - 1)
  double q = 2.0;      ///< p + 1
  double kappa = 1.0;  ///< (sigma_p^{2 alpha} / alpha)^p

  static Params make(int alpha, double sigma_p) {
    Params prm;
    prm.alpha = alpha;
    prm.sigma_p = sigma_p;
    prm.p = 1.0 / (2.0 * alpha - 1.0);
    prm.q = prm.p + 1.0;
    prm.kappa = std::pow(std::pow(sigma_p, 2.0 * alpha) / alpha, prm.p);
    return prm;
  }

  /// Exponent of |s| in the non-polynomial part of x1: (4 alpha - 1)/(2 alpha - 1).
  double position_exponent() const { return q + 1.0; }
};

inline double sgn(double z) { return z >= 0.0 ? 1.0 : -1.0; }

/// Velocity profile V(z) = kappa sgn(z) |z|^p.
inline double V(const Params& prm, double z) {
  return prm.kappa * sgn(z) * std::pow(std::abs(z), prm.p);
}

/// Antiderivative of V: P(z) = kappa |z|^q / q (even, nonnegative).
inline double P(const Params& prm, double z) {
  return prm.kappa * std::pow(std::abs(z), prm.q) / prm.q;
}

/// Antiderivative of P: R(z) = kappa sgn(z) |z|^{q+1} / (q (q+1)) (odd).
inline double R(const Params& prm, double z) {
  return prm.kappa * sgn(z) * std::pow(std::abs(z), prm.q + 1.0) /
         (prm.q * (prm.q + 1.0));
}

/// dV/dz away from z = 0 (infinite there for alpha >= 2).
inline double dV(const Params& prm, double z) {
  return prm.kappa * prm.p * std::pow(std::abs(z), prm.p - 1.0);
}

/// Integrals over local time:
///   I2(s) = integral_0^s V(a u + b) du      (velocity increment)
///   I1(s) = integral_0^s I2(u) du           (position increment)
/// and their partial derivatives with respect to a and b. The identities
///   dI2/da = (s V(z_s) - I2)/a, dI2/db = (V(z_s) - V(b))/a,
///   dI1/da = (s I2 - 2 I1)/a,   dI1/db = (I2 - s V(b))/a
/// stay finite where dV blows up. A two-term Taylor expansion handles
/// |a s| << |b|, and a == 0 is exact.
struct SegmentIntegrals {
  double I1 = 0.0, I2 = 0.0;
  double dI1_da = 0.0, dI1_db = 0.0;
  double dI2_da = 0.0, dI2_db = 0.0;
};

inline SegmentIntegrals segment_integrals(const Params& prm, double a, double b,
                                          double s) {
  SegmentIntegrals out;
  const double zs = a * s + b;
  if (a == 0.0 || std::abs(a * s) <= 1e-8 * std::abs(b)) {
    const double vb = V(prm, b);
    // dV(b) is infinite only when b == 0, in which case a*s is also 0 here
    // and every term below vanishes with it.
    const double dvb = (b == 0.0) ? 0.0 : dV(prm, b);
    out.I2 = vb * s + 0.5 * a * dvb * s * s;
    out.I1 = 0.5 * vb * s * s + a * dvb * s * s * s / 6.0;
    out.dI2_db = dvb * s;
    out.dI2_da = 0.5 * dvb * s * s;
    out.dI1_db = 0.5 * dvb * s * s;
    out.dI1_da = dvb * s * s * s / 6.0;
    return out;
  }
  const double vzs = V(prm, zs);
  const double vb = V(prm, b);
  const double Pb = P(prm, b);
  out.I2 = (P(prm, zs) - Pb) / a;
  out.I1 = ((R(prm, zs) - R(prm, b)) / a - Pb * s) / a;
  out.dI2_db = (vzs - vb) / a;
  out.dI2_da = (s * vzs - out.I2) / a;
  out.dI1_db = (out.I2 - s * vb) / a;
  out.dI1_da = (s * out.I2 - 2.0 * out.I1) / a;
  return out;
}

}  // namespace optspline::alpha_family
