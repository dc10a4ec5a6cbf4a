#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "whirl/annulus.hpp"
#include "whirl/coeff.hpp"
#include "whirl/reduced.hpp"
#include "whirl/whirl_map.hpp"

namespace whirl {

/// Scalar field of the plane-radial variables with an exact gradient.
struct ScalarFieldY {
  std::function<double(const VectorXd&)> value;
  std::function<VectorXd(const VectorXd&)> grad;  // N-vector of y-partials
};

/// Curl of U = sum_k Gamma_k(y) w^k at a point x, with the expansion
/// coefficients kappa(k,l) = d_l Gamma_k / y_l - d_k Gamma_l / y_k over the
/// skew basis w^k (x) w^l - w^l (x) w^k.
struct CurlMatrix {
  MatrixXd M;
  MatrixXd kappa;  // N x N, antisymmetric
};

inline CurlMatrix curl_scalar_combo(const std::vector<ScalarFieldY>& gamma,
                                    const Annulus& ann, const VectorXd& x) {
  const int N = ann.N();
  if (int(gamma.size()) != N)
    throw GeometryError("curl_scalar_combo: need one scalar field per plane variable");
  PlaneFrame fr = plane_frame(x, ann);
  for (int l = 0; l < ann.d(); ++l)
    if (fr.y[l] < ann.delta_axis())
      throw AxisError("curl_scalar_combo: point too close to an axis");
  std::vector<VectorXd> dg(N);
  for (int k = 0; k < N; ++k) dg[k] = gamma[k].grad(fr.y);

  CurlMatrix out;
  out.kappa = MatrixXd::Zero(N, N);
  out.M = MatrixXd::Zero(ann.n, ann.n);
  // grad U - [grad U]^t = sum_k [w^k (x) grad Gamma_k - grad Gamma_k (x) w^k]
  // (the symmetric plane projections drop); grad Gamma_k = sum_l d_l Gamma_k
  // grad y_l with grad y_l = w^l / y_l in every slot, so the pair coefficient
  // over the basis w^k (x) w^l - w^l (x) w^k is kappa(k,l) below. The odd
  // trailing slot divides by the signed y_N, which degenerates with the basis
  // itself as y_N -> 0.
  for (int k = 0; k < N; ++k) {
    VectorXd g = VectorXd::Zero(ann.n);
    for (int l = 0; l < N; ++l) g += dg[k][l] * fr.grad_y(l, ann);
    out.M += fr.w[k] * g.transpose() - g * fr.w[k].transpose();
  }
  for (int k = 0; k < N; ++k)
    for (int l = k + 1; l < N; ++l) {
      out.kappa(k, l) = dg[k][l] / fr.y[l] - dg[l][k] / fr.y[k];
      out.kappa(l, k) = -out.kappa(k, l);
    }
  return out;
}

/// The scalar fields Gamma_k = B - A |grad f_k|^2 of the whirl vector field
/// U = L - grad A (with Gamma_N = B for the odd trailing slot, f_N = 0).
inline std::vector<ScalarFieldY> whirl_gamma_fields(const WhirlSpec& spec,
                                                    const Coefficient& H,
                                                    const Coefficient& B) {
  const Annulus ann = spec.ann;
  const int d = ann.d(), N = ann.N(), n = ann.n;
  std::vector<ScalarFieldY> out(N);
  for (int k = 0; k < N; ++k) {
    auto common = [spec, H, B, ann, d, N, n, k](const VectorXd& y, bool want_grad,
                                                double* val, VectorXd* grad) {
      const double z = y.norm();
      ProfilePartials p = profile_partials(spec, y);
      double xi = n;
      for (int j = 0; j < d; ++j) xi += y[j] * y[j] * p.df.row(j).squaredNorm();
      const double gf2 = k < d ? p.df.row(k).squaredNorm() : 0.0;
      CoeffEval b = B.eval(z, z * z, xi);
      CoeffEval h = H.eval(z, z * z, 0.0);
      if (val) *val = b.value - h.value * gf2;
      if (!want_grad) return;
      VectorXd dxi = xi_gradient_y(ann, y, p);
      VectorXd g(N);
      for (int l = 0; l < N; ++l) {
        double dgf2 = 0;
        if (k < d)
          for (int j = 0; j < N; ++j) dgf2 += 2 * p.df(k, j) * p.d2f[k](j, l);
        g[l] = b.dr * y[l] / z + 2 * y[l] * b.ds + b.dxi * dxi[l] -
               (h.dr * y[l] / z + 2 * y[l] * h.ds) * gf2 - h.value * dgf2;
      }
      *grad = std::move(g);
    };
    out[k].value = [common](const VectorXd& y) {
      double v;
      common(y, false, &v, nullptr);
      return v;
    };
    out[k].grad = [common](const VectorXd& y) {
      VectorXd g;
      common(y, true, nullptr, &g);
      return g;
    };
  }
  return out;
}

struct CurlConditionReport {
  std::vector<MatrixXd> pair_residuals;  // per point: N x N, entry (k,l) =
                                         // y_k d_l Gamma_k - y_l d_k Gamma_l
  double max_abs = 0;
};

/// Pairwise curl-free condition for U = L - grad A on an x-grid.
inline CurlConditionReport curl_condition(const WhirlSpec& spec, const Coefficient& H,
                                          const Coefficient& B,
                                          const std::vector<VectorXd>& x_grid) {
  const Annulus& ann = spec.ann;
  const int N = ann.N();
  auto gamma = whirl_gamma_fields(spec, H, B);
  CurlConditionReport rep;
  rep.pair_residuals.reserve(x_grid.size());
  for (const VectorXd& x : x_grid) {
    PlaneFrame fr = plane_frame(x, ann);
    MatrixXd R = MatrixXd::Zero(N, N);
    std::vector<VectorXd> dg(N);
    for (int k = 0; k < N; ++k) dg[k] = gamma[k].grad(fr.y);
    for (int k = 0; k < N; ++k)
      for (int l = k + 1; l < N; ++l) {
        R(k, l) = fr.y[k] * dg[k][l] - fr.y[l] * dg[l][k];
        R(l, k) = -R(k, l);
        rep.max_abs = std::max(rep.max_abs, std::abs(R(k, l)));
      }
    rep.pair_residuals.push_back(std::move(R));
  }
  return rep;
}

enum class DeltaStatus { IdenticallyZero, Nonzero };

struct Verdict {
  WindingVector m;
  DeltaStatus delta_status;
  Discriminant::ZeroDecision decision{};
  bool admissible = false;
  std::string reason;
};

/// Full admissibility classification of a winding vector for the pair (H, B):
/// with a nonzero discriminant only equal-magnitude windings (even n) or the
/// zero winding (odd n) produce gradient fields; a vanishing discriminant
/// removes the restriction.
inline Verdict classify(const Annulus& ann, const WindingVector& m, const Coefficient& H,
                        const Coefficient& B) {
  if (m.size() != ann.d()) throw GeometryError("classify: winding vector size must equal d");
  Verdict v;
  v.m = m;

  // xi-range swept by the candidate map at radius r
  auto prof = closed_form_profile(H, ann, 1);
  double m2min = std::numeric_limits<double>::max(), m2max = 0;
  for (int i = 0; i < m.size(); ++i) {
    m2min = std::min(m2min, double(m[i]) * m[i]);
    m2max = std::max(m2max, double(m[i]) * m[i]);
  }
  if (m.size() == 0) m2min = m2max = 0;
  auto xi_range = [&](double r) {
    const double hd = prof->deriv(r) / (2.0 * M_PI);
    const double top = 4.0 * M_PI * M_PI * hd * hd * r * r;
    const double lo = ann.even() ? ann.n + m2min * top : double(ann.n);
    return std::pair<double, double>{lo, ann.n + m2max * top};
  };
  Discriminant disc(H, B, ann.n);
  v.decision = disc.identically_zero(ann.a, ann.b, xi_range);
  v.delta_status =
      v.decision.identically_zero ? DeltaStatus::IdenticallyZero : DeltaStatus::Nonzero;

  if (v.delta_status == DeltaStatus::IdenticallyZero) {
    v.admissible = true;
    v.reason = "discriminant vanishes identically: every winding vector is admissible";
    return v;
  }
  if (ann.even()) {
    bool equal = true;
    for (int i = 1; i < m.size(); ++i)
      if (std::abs(m[i]) != std::abs(m[0])) equal = false;
    v.admissible = equal;
    v.reason = equal ? "nonzero discriminant, even dimension: winding magnitudes all equal"
                     : "nonzero discriminant, even dimension: winding magnitudes differ";
  } else {
    v.admissible = m.isZero();
    v.reason = v.admissible
                   ? "nonzero discriminant, odd dimension: zero winding"
                   : "nonzero discriminant, odd dimension: only the zero winding is admissible";
  }
  return v;
}

/// The B family with B_xi = (n+1)/r^2 that forces the discriminant of
/// (H, B) = (1, B) to vanish identically: B = (n+1) xi / r^2.
inline Coefficient degenerate_B(int n) {
  return Coefficient::from_fn(
      [n](auto r, auto, auto xi) { return (n + 1.0) * xi / (r * r); }, CoeffKind::LowerOrder,
      "(n+1) xi / r^2");
}

}  // namespace whirl
