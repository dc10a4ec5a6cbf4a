#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "whirl/annulus.hpp"

namespace whirl {

using Eigen::Matrix2d;
using Eigen::VectorXi;

using WindingVector = VectorXi;

/// Rotation by alpha: exp(alpha J) with J12 = -1, so R[pi/2] = J.
inline Matrix2d rotation(double alpha) {
  Matrix2d R;
  R << std::cos(alpha), std::sin(alpha), -std::sin(alpha), std::cos(alpha);
  return R;
}

inline Matrix2d skew_J() {
  Matrix2d J;
  J << 0, 1, -1, 0;
  return J;
}

/// A scalar angle profile on [a,b] with two derivatives.
class AngleProfile {
 public:
  virtual ~AngleProfile() = default;
  virtual double value(double r) const = 0;
  virtual double deriv(double r) const = 0;
  virtual double deriv2(double r) const = 0;
};

class ZeroProfile final : public AngleProfile {
 public:
  double value(double) const override { return 0; }
  double deriv(double) const override { return 0; }
  double deriv2(double) const override { return 0; }
};

/// Straight interpolation between the end conditions; not a solution of the
/// reduced ODE for any coefficient of interest. Used as a negative control.
class LinearProfile final : public AngleProfile {
 public:
  LinearProfile(double a, double b, double end_value) : a_(a), b_(b), v_(end_value) {}
  double value(double r) const override { return v_ * (r - a_) / (b_ - a_); }
  double deriv(double) const override { return v_ / (b_ - a_); }
  double deriv2(double) const override { return 0; }

 private:
  double a_, b_, v_;
};

/// Whirl map u = Q[f](y) x on the canonical maximal torus: f_i(y) =
/// scale_i * base(|y|). The section-6 equal-angle family has scale = 1 and
/// base = G with G(b) = 2 m pi; the closed-form family has base = H-profile
/// normalized to 1 at b and scale_i = 2 pi m_i.
struct WhirlSpec {
  Annulus ann;
  WindingVector m;
  std::shared_ptr<const AngleProfile> base;
  VectorXd scale;

  static WhirlSpec identity(const Annulus& ann) {
    WhirlSpec s{ann, WindingVector::Zero(ann.d()), std::make_shared<ZeroProfile>(),
                VectorXd::Zero(ann.d())};
    return s;
  }
  /// f_i = base(z) for every i (base already carries the winding).
  static WhirlSpec shared_profile(const Annulus& ann, int m,
                                  std::shared_ptr<const AngleProfile> base) {
    WhirlSpec s{ann, WindingVector::Constant(ann.d(), m), std::move(base),
                VectorXd::Ones(ann.d())};
    return s;
  }
  /// f_i = 2 pi m_i * base(z), base normalized so base(b) = 1.
  static WhirlSpec per_component(const Annulus& ann, const WindingVector& m,
                                 std::shared_ptr<const AngleProfile> base) {
    if (m.size() != ann.d()) throw GeometryError("winding vector size must equal d");
    WhirlSpec s{ann, m, std::move(base), VectorXd(ann.d())};
    for (int i = 0; i < ann.d(); ++i) s.scale[i] = 2.0 * M_PI * m[i];
    return s;
  }

  double f(int i, double z) const { return scale[i] * base->value(z); }
  double fdot(int i, double z) const { return scale[i] * base->deriv(z); }
  double fddot(int i, double z) const { return scale[i] * base->deriv2(z); }
};

/// Partials of the profile components f_i(y) = scale_i * base(|y|) with
/// respect to the plane-radial variables y_1..y_N.
struct ProfilePartials {
  MatrixXd df;                // d x N, df(i,l) = d_l f_i
  std::vector<MatrixXd> d2f;  // per i: N x N second partials
};

inline ProfilePartials profile_partials(const WhirlSpec& spec, const VectorXd& y) {
  const int d = spec.ann.d(), N = spec.ann.N();
  const double z = y.norm();
  ProfilePartials p;
  p.df.resize(d, N);
  p.d2f.assign(d, MatrixXd(N, N));
  for (int i = 0; i < d; ++i) {
    const double fd = spec.fdot(i, z), fdd = spec.fddot(i, z);
    for (int l = 0; l < N; ++l) p.df(i, l) = fd * y[l] / z;
    for (int l = 0; l < N; ++l)
      for (int k = 0; k < N; ++k)
        p.d2f[i](l, k) =
            fdd * y[l] * y[k] / (z * z) + fd * ((l == k ? 1.0 : 0.0) - y[l] * y[k] / (z * z)) / z;
  }
  return p;
}

inline MatrixXd assemble_Q(const WhirlSpec& spec, const VectorXd& y) {
  const Annulus& ann = spec.ann;
  const double z = y.norm();
  if (z < ann.a - 1e-9 || z > ann.b + 1e-9)
    throw GeometryError("assemble_Q: point outside the closed annulus");
  MatrixXd Q = MatrixXd::Identity(ann.n, ann.n);
  for (int i = 0; i < ann.d(); ++i)
    Q.block<2, 2>(2 * i, 2 * i) = rotation(spec.f(i, z));
  return Q;
}

/// Pointwise jet of a whirl map: u, grad u, Delta u, |grad u|^2, det, X, Y
/// and the gradient of |grad u|^2, all assembled from the exact block
/// formulas (Q' blocks are never finite-differenced).
struct MapJet {
  VectorXd x, u;
  PlaneFrame frame;
  MatrixXd Q;
  std::vector<MatrixXd> S;               // S_l = Q^t d_l Q (skew, block diag)
  std::vector<std::vector<MatrixXd>> T;  // T_lk = Q^t d2_lk Q
  MatrixXd grad_u;
  VectorXd lap_u;
  double frob2 = 0;   // |grad u|^2
  double det = 0;     // det grad u, evaluated from the assembled gradient
  MatrixXd X, Y;      // Cauchy-Green deviations
  VectorXd grad_xi;   // grad(|grad u|^2)
  MatrixXd df;        // d x N matrix of d_l f_i
  std::vector<MatrixXd> d2f;  // per component i: N x N second partials
};

struct AxisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline MapJet map_jet(const WhirlSpec& spec, const VectorXd& x) {
  const Annulus& ann = spec.ann;
  const int n = ann.n, d = ann.d(), N = ann.N();
  MapJet j;
  j.x = x;
  j.frame = plane_frame(x, ann);
  const VectorXd& y = j.frame.y;
  for (int l = 0; l < d; ++l)
    if (y[l] < ann.delta_axis())
      throw AxisError("map_jet: point within delta_axis of a coordinate axis");

  // radial profile partials: f_i depends on y only through z
  ProfilePartials pp = profile_partials(spec, y);
  j.df = std::move(pp.df);
  j.d2f = std::move(pp.d2f);

  j.Q = assemble_Q(spec, y);
  j.u = j.Q * x;

  const Matrix2d J = skew_J();
  j.S.assign(N, MatrixXd::Zero(n, n));
  j.T.assign(N, std::vector<MatrixXd>(N, MatrixXd::Zero(n, n)));
  for (int l = 0; l < N; ++l) {
    for (int i = 0; i < d; ++i) j.S[l].block<2, 2>(2 * i, 2 * i) = j.df(i, l) * J;
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < d; ++i)
        j.T[l][k].block<2, 2>(2 * i, 2 * i) =
            j.d2f[i](l, k) * J - j.df(i, l) * j.df(i, k) * Matrix2d::Identity();
  }

  std::vector<VectorXd> gy(N), Sx(N);
  for (int l = 0; l < N; ++l) {
    gy[l] = j.frame.grad_y(l, ann);
    Sx[l] = j.S[l] * x;
  }

  // grad u = Q (I + sum_l S_l x (x) grad y_l)
  MatrixXd inner = MatrixXd::Identity(n, n);
  for (int l = 0; l < N; ++l) inner += Sx[l] * gy[l].transpose();
  j.grad_u = j.Q * inner;
  j.det = j.grad_u.determinant();

  // Delta u = Q sum_l [T_ll x + (lap y_l) S_l x + 2 S_l grad y_l]
  VectorXd lap_inner = VectorXd::Zero(n);
  for (int l = 0; l < N; ++l)
    lap_inner += j.T[l][l] * x + j.frame.lap_y(l, ann) * Sx[l] + 2.0 * (j.S[l] * gy[l]);
  j.lap_u = j.Q * lap_inner;

  j.frob2 = n;
  for (int l = 0; l < N; ++l) j.frob2 += Sx[l].squaredNorm();

  j.X = MatrixXd::Zero(n, n);
  for (int l = 0; l < N; ++l) {
    j.X += Sx[l] * gy[l].transpose() + gy[l] * Sx[l].transpose();
    for (int k = 0; k < N; ++k) j.X += Sx[l].dot(Sx[k]) * gy[l] * gy[k].transpose();
  }
  j.Y = MatrixXd::Zero(n, n);
  for (int l = 0; l < N; ++l) {
    const VectorXd Qg = j.Q * gy[l], QSx = j.Q * Sx[l];
    j.Y += Qg * QSx.transpose() + QSx * Qg.transpose() + QSx * QSx.transpose();
  }

  // grad(|grad u|^2), assembled from the second-order block identities
  j.grad_xi = VectorXd::Zero(n);
  for (int l = 0; l < N; ++l) {
    j.grad_xi += 2.0 * (-j.S[l] * gy[l] + j.frame.hess_y(l, ann) * Sx[l] - j.S[l] * Sx[l]);
    for (int k = 0; k < N; ++k) {
      const double c =
          (-j.S[k] * Sx[l] + j.T[l][k] * x).dot(gy[l]) + (j.T[l][k] * x).dot(Sx[l]);
      j.grad_xi += 2.0 * c * gy[k];
    }
  }
  return j;
}

/// Radial/spherical split of a map value-and-gradient pair.
struct RadialSpherical {
  double R;            // |u|
  VectorXd S;          // u/|u|
  VectorXd grad_R;     // [grad u]^t u / |u|
  MatrixXd grad_S;     // (I - S (x) S) grad u / |u|
};

inline RadialSpherical radial_spherical(const VectorXd& u, const MatrixXd& grad_u) {
  const double R = u.norm();
  if (R < 1e-14) throw GeometryError("radial_spherical: |u| below 1e-14");
  RadialSpherical rs;
  rs.R = R;
  rs.S = u / R;
  rs.grad_R = grad_u.transpose() * u / R;
  rs.grad_S = (MatrixXd::Identity(u.size(), u.size()) - rs.S * rs.S.transpose()) * grad_u / R;
  return rs;
}

}  // namespace whirl
