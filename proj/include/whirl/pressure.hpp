#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "whirl/annulus.hpp"
#include "whirl/classify.hpp"
#include "whirl/coeff.hpp"
#include "whirl/numerics.hpp"
#include "whirl/op.hpp"
#include "whirl/reduced.hpp"
#include "whirl/whirl_map.hpp"

namespace whirl {

/// Cumulative radial antiderivative: nodes carry values obtained by
/// quadrature of `slope`, evaluation uses cubic Hermite pieces with the exact
/// nodal slopes.
class RadialAntiderivative {
 public:
  RadialAntiderivative() = default;
  RadialAntiderivative(double a, double b, std::function<double(double)> slope,
                       int grid = 257)
      : r_(chebyshev_nodes(a, b, grid)), v_(grid), slope_(std::move(slope)) {
    v_[0] = 0;
    for (int j = 1; j < grid; ++j) {
      QuadResult q = quad_adaptive(slope_, r_[j - 1], r_[j], 1e-12);
      if (!q.converged) throw NumericsError("radial antiderivative quadrature stalled");
      v_[j] = v_[j - 1] + q.value;
    }
  }

  double operator()(double r) const {
    const double a = r_[0], b = r_[r_.size() - 1];
    if (r < a - 1e-9 || r > b + 1e-9)
      throw NumericsError("radial antiderivative evaluated outside [a,b]");
    r = std::min(std::max(r, a), b);
    const double* lo = r_.data();
    int k = int(std::upper_bound(lo, lo + r_.size(), r) - lo) - 1;
    k = std::min(std::max(k, 0), int(r_.size()) - 2);
    const double h = r_[k + 1] - r_[k], t = (r - r_[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * v_[k] + (t3 - 2 * t2 + t) * h * slope_(r_[k]) +
           (-2 * t3 + 3 * t2) * v_[k + 1] + (t3 - t2) * h * slope_(r_[k + 1]);
  }

 private:
  VectorXd r_, v_;
  std::function<double(double)> slope_;
};

enum class PressureRep { Radial, PathPotential };

struct PressureField {
  PressureRep rep = PressureRep::Radial;
  std::function<double(const VectorXd&)> value;  // P(x) on the closed annulus
  std::function<double(double)> G;               // radial part (Radial rep)
  std::function<double(double, double)> R;       // potential (PathPotential rep)
  MatrixXd generator;                            // skew generator (PathPotential rep)
  double path_split_dev = 0;  // agreement of the two integration paths
};

/// Radial pressure P = A(r, r^2, n + r^2 Gdot^2) + G(r) with
/// G(r) the integral of s [B - A Gdot^2] from a, so G(a) = 0.
inline PressureField radial_pressure(const Coefficient& A, const Coefficient& B,
                                     std::shared_ptr<const RadialProfile> profile,
                                     const Annulus& ann) {
  const int n = ann.n;
  // captured by value: the field's closures may outlive the caller's coefficients
  auto slope = [A, B, profile, n](double s) {
    const double g = profile->deriv(s);
    const double xi = n + s * s * g * g;
    return s * (B(s, s * s, xi) - A(s, s * s, xi) * g * g);
  };
  auto G = std::make_shared<RadialAntiderivative>(ann.a, ann.b, slope);
  PressureField P;
  P.rep = PressureRep::Radial;
  P.G = [G](double r) { return (*G)(r); };
  P.value = [G, A, profile, n](const VectorXd& x) {
    const double r = x.norm();
    const double g = profile->deriv(r);
    return A(r, r * r, n + r * r * g * g) + (*G)(r);
  };
  return P;
}

/// Skew generator diag(2 m_1 pi J, ..., 2 m_d pi J [, 0]).
inline MatrixXd winding_generator(const Annulus& ann, const WindingVector& m) {
  MatrixXd Hg = MatrixXd::Zero(ann.n, ann.n);
  for (int i = 0; i < ann.d(); ++i) {
    Hg(2 * i, 2 * i + 1) = 2 * M_PI * m[i];
    Hg(2 * i + 1, 2 * i) = -2 * M_PI * m[i];
  }
  return Hg;
}

/// Potential pressure for the vanishing-discriminant family:
/// P = H(r, r^2) + R(r, |Hg x|^2), R the line integral of
/// omega = r B(r, r^2, n + hdot^2 z) dr - H(r, r^2) hdot(r)^2 / 2 dz
/// from the base point (a, 0). Closedness of omega is checked up front; the
/// two L-shaped integration paths are compared and their deviation recorded.
/// Equal winding magnitudes degenerate the (r,z) region to a curve, in which
/// case the radial construction is returned instead.
inline PressureField path_potential(const Coefficient& H, const Coefficient& B,
                                    const WindingVector& m, const Annulus& ann) {
  if (m.size() != ann.d())
    throw GeometryError("path_potential: winding vector size must equal d");
  const int n = ann.n;
  auto base = closed_form_profile(H, ann, 1);
  auto hdot = [base](double r) { return base->deriv(r) / (2 * M_PI); };

  double m2min = m.size() ? double(m[0]) * m[0] : 0, m2max = m2min;
  for (int i = 1; i < m.size(); ++i) {
    m2min = std::min(m2min, double(m[i]) * m[i]);
    m2max = std::max(m2max, double(m[i]) * m[i]);
  }
  if (!ann.even()) m2min = 0;  // the trailing generator block is zero

  if (m2min == m2max)
    return radial_pressure(H, B, closed_form_profile(H, ann, int(std::lround(std::sqrt(m2max)))),
                           ann);

  auto xi_range = [&](double r) {
    const double top = 4 * M_PI * M_PI * hdot(r) * hdot(r) * r * r;
    return std::pair<double, double>{n + m2min * top, n + m2max * top};
  };
  Discriminant disc(H, B, n);
  auto decision = disc.identically_zero(ann.a, ann.b, xi_range);
  if (!decision.identically_zero)
    throw DomainError("path_potential: discriminant does not vanish, the form is not closed");

  Coefficient Hc = H;
  Coefficient Bc = B;
  // r-leg at z = 0, shared by the first path; the slope is re-evaluated at the
  // nodes after return, so it must own its coefficient
  auto r_leg0 = std::make_shared<RadialAntiderivative>(
      ann.a, ann.b, [Bc, n](double t) { return t * Bc(t, t * t, double(n)); });
  auto R = [r_leg0, Hc, hdot](double r, double z) {
    // the dz coefficient is z-free, so the z-leg integrates exactly
    return (*r_leg0)(r)-Hc(r, r * r, 0.0) * hdot(r) * hdot(r) * z / 2;
  };
  auto R_alt = [Hc, Bc, hdot, n, a = ann.a](double r, double z) {
    const double leg1 = -Hc(a, a * a, 0.0) * hdot(a) * hdot(a) * z / 2;
    QuadResult q = quad_adaptive(
        [&](double t) { return t * Bc(t, t * t, n + hdot(t) * hdot(t) * z); }, a, r, 1e-12);
    return leg1 + q.value;
  };

  PressureField P;
  P.rep = PressureRep::PathPotential;
  P.generator = winding_generator(ann, m);
  P.R = R;
  const MatrixXd Hg = P.generator;
  P.value = [R, Hc, Hg](const VectorXd& x) {
    const double r = x.norm();
    return Hc(r, r * r, 0.0) + R(r, (Hg * x).squaredNorm());
  };
  // path-independence witness on a coarse lattice of the swept region
  for (int i = 1; i <= 8; ++i) {
    const double r = ann.a + (ann.b - ann.a) * i / 9.0;
    const auto [zlo_xi, zhi_xi] = xi_range(r);
    const double zlo = m2min * 4 * M_PI * M_PI * hdot(r) * hdot(r) * r * r;
    const double zhi = m2max * 4 * M_PI * M_PI * hdot(r) * hdot(r) * r * r;
    (void)zlo_xi;
    (void)zhi_xi;
    for (const double z : {zlo, 0.5 * (zlo + zhi), zhi})
      P.path_split_dev = std::max(P.path_split_dev, std::abs(R(r, z) - R_alt(r, z)));
  }
  return P;
}

struct PdeResidualReport {
  double max_residual = 0;
  double l2_residual = 0;
  double scale = 1;  // 1 + max |L_direct| over the grid
  double boundary_max_dev = 0;
  double det_max_dev = 0;
};

/// End-to-end check of the constrained system: L[u] vs a central-difference
/// gradient of the pressure (deliberately independent of the construction),
/// plus the boundary condition u = x on both spheres and det grad u = 1.
inline PdeResidualReport pde_residual(const WhirlSpec& spec, const Coefficient& A,
                                      const Coefficient& B, const PressureField& P,
                                      const std::vector<VectorXd>& grid) {
  PdeResidualReport rep;
  const Annulus& ann = spec.ann;
  FdConfig fd;
  fd.h0 = 1e-5 * ann.a;
  double sumsq = 0;
  size_t count = 0;
  for (const VectorXd& x : grid) {
    OperatorValue Lv = L_direct(spec, A, B, x);
    VectorXd gradP = fd_gradient(P.value, x, fd);
    const double res = (Lv.L - gradP).norm();
    rep.max_residual = std::max(rep.max_residual, res);
    rep.scale = std::max(rep.scale, 1 + Lv.L.norm());
    sumsq += res * res;
    ++count;
    MapJet j = map_jet(spec, x);
    rep.det_max_dev = std::max(rep.det_max_dev, std::abs(j.det - 1.0));
    for (const double rho : {ann.a, ann.b}) {
      VectorXd xb = x * (rho / x.norm());
      auto [yb, zb] = radial_coords(xb, ann);
      VectorXd ub = assemble_Q(spec, yb) * xb;
      rep.boundary_max_dev = std::max(rep.boundary_max_dev, (ub - xb).norm());
    }
  }
  if (count) rep.l2_residual = std::sqrt(sumsq / count);
  return rep;
}

}  // namespace whirl
