#pragma once

#include <Eigen/Dense>
#include <string>

#include "whirl/annulus.hpp"
#include "whirl/coeff.hpp"
#include "whirl/reduced.hpp"
#include "whirl/whirl_map.hpp"

namespace whirl {

enum class OpRoute { Direct, Whirl, Reduced, Simplified };

inline const char* route_name(OpRoute r) {
  switch (r) {
    case OpRoute::Direct: return "direct";
    case OpRoute::Whirl: return "whirl";
    case OpRoute::Reduced: return "reduced";
    default: return "simplified";
  }
}

struct OperatorValue {
  VectorXd L;
  OpRoute route;
  double r = 0, s = 0, xi = 0;
  bool precondition_ok = true;  // only meaningful for the simplified route
};

/// grad A(|x|, |x|^2, xi(y)) for a whirl, via the chain rule in the plane
/// radial variables (|u|^2 = |x|^2 on whirls).
namespace op_detail {

inline VectorXd grad_A_whirl(const CoeffEval& a, const VectorXd& x, const PlaneFrame& fr,
                             const Annulus& ann, const VectorXd& dxi) {
  const double r = fr.z;
  VectorXd g = (a.dr / r + 2 * a.ds) * x;
  for (int k = 0; k < ann.N(); ++k) g += a.dxi * dxi[k] * fr.grad_y(k, ann);
  return g;
}

}  // namespace op_detail

/// Direct route: L = [grad u]^t [grad u] grad A + A [grad u]^t lap u
/// + B [grad u]^t u, with grad A assembled by chain rule from the jet.
inline OperatorValue L_direct(const WhirlSpec& spec, const Coefficient& A,
                              const Coefficient& B, const VectorXd& x) {
  MapJet j = map_jet(spec, x);
  OperatorValue out;
  out.route = OpRoute::Direct;
  out.r = j.frame.z;
  out.s = j.u.squaredNorm();
  out.xi = j.frob2;
  CoeffEval a = A.eval(out.r, out.s, out.xi);
  const VectorXd grad_s = 2.0 * j.grad_u.transpose() * j.u;
  const VectorXd gradA = (a.dr / out.r) * x + a.ds * grad_s + a.dxi * j.grad_xi;
  out.L = (MatrixXd::Identity(spec.ann.n, spec.ann.n) + j.X) * gradA +
          a.value * j.grad_u.transpose() * j.lap_u +
          B(out.r, out.s, out.xi) * j.grad_u.transpose() * j.u;
  return out;
}

/// Whirl route: everything expressed through the profile partials and the
/// plane frame, with no reference to grad u or the rotation blocks.
inline OperatorValue L_whirl(const WhirlSpec& spec, const Coefficient& A,
                             const Coefficient& B, const VectorXd& x) {
  const Annulus& ann = spec.ann;
  const int d = ann.d(), N = ann.N(), n = ann.n;
  PlaneFrame fr = plane_frame(x, ann);
  for (int l = 0; l < d; ++l)
    if (fr.y[l] < ann.delta_axis()) throw AxisError("L_whirl: point too close to an axis");
  ProfilePartials p = profile_partials(spec, fr.y);
  const VectorXd& y = fr.y;
  const double r = fr.z;

  OperatorValue out;
  out.route = OpRoute::Whirl;
  out.r = r;
  out.s = r * r;
  out.xi = n;
  for (int j = 0; j < d; ++j) out.xi += y[j] * y[j] * p.df.row(j).squaredNorm();
  CoeffEval a = A.eval(out.r, out.s, out.xi);
  VectorXd dxi = xi_gradient_y(ann, y, p);

  VectorXd L = op_detail::grad_A_whirl(a, x, fr, ann, dxi) + B(out.r, out.s, out.xi) * x;

  // gradient-slot terms: A_xi * sum_k d_k(xi) * direction_k
  for (int k = 0; k < N; ++k) {
    VectorXd dir = VectorXd::Zero(n);
    for (int j = 0; j < d; ++j) {
      dir -= p.df(j, k) * fr.wperp[j];
      for (int i = 0; i < N; ++i)
        dir += y[j] * y[j] * p.df(j, i) * p.df(j, k) * fr.grad_y(i, ann);
    }
    L += a.dxi * dxi[k] * dir;
  }

  // lower-order coefficient slots
  {
    VectorXd t = VectorXd::Zero(n);
    for (int l = 0; l < N; ++l) {
      for (int i = 0; i < d; ++i) t -= y[l] * p.df(i, l) * fr.wperp[i];
      double c = 0;
      for (int k = 0; k < N; ++k)
        for (int j = 0; j < d; ++j) c += y[j] * y[j] * y[k] * p.df(j, l) * p.df(j, k);
      t += c * fr.grad_y(l, ann);
    }
    L += (2 * a.ds + a.dr / r) * t;
  }

  // principal part
  {
    VectorXd t = VectorXd::Zero(n);
    for (int l = 0; l < N; ++l)
      for (int i = 0; i < d; ++i) {
        t -= (p.d2f[i](l, l) + fr.lap_y(l, ann) * p.df(i, l)) * fr.wperp[i];
        t -= p.df(i, l) * p.df(i, l) * fr.w[i];
      }
    for (int l = 0; l < d; ++l) t -= (2.0 / y[l]) * p.df(l, l) * fr.wperp[l];
    for (int l = 0; l < N; ++l) {
      double c = 0;
      for (int k = 0; k < N; ++k)
        for (int j = 0; j < d; ++j)
          c += y[j] * y[j] * p.df(j, l) * (p.d2f[j](k, k) + fr.lap_y(k, ann) * p.df(j, k));
      for (int k = 0; k < d; ++k) c += 2 * y[k] * p.df(k, l) * p.df(k, k);
      t += c * fr.grad_y(l, ann);
    }
    L += a.value * t;
  }

  out.L = std::move(L);
  return out;
}

/// Reduced-divergence route: grad A + B x - A sum |grad f_i|^2 w^i plus the
/// divergence terms of the unconstrained system along [w^i]^perp and w^l.
inline OperatorValue L_reduced(const WhirlSpec& spec, const Coefficient& A,
                               const Coefficient& B, const VectorXd& x) {
  const Annulus& ann = spec.ann;
  const int d = ann.d(), N = ann.N(), n = ann.n;
  PlaneFrame fr = plane_frame(x, ann);
  for (int l = 0; l < d; ++l)
    if (fr.y[l] < ann.delta_axis()) throw AxisError("L_reduced: point too close to an axis");
  ProfilePartials p = profile_partials(spec, fr.y);
  const VectorXd& y = fr.y;

  OperatorValue out;
  out.route = OpRoute::Reduced;
  out.r = fr.z;
  out.s = out.r * out.r;
  out.xi = n;
  for (int j = 0; j < d; ++j) out.xi += y[j] * y[j] * p.df.row(j).squaredNorm();
  CoeffEval a = A.eval(out.r, out.s, out.xi);
  VectorXd dxi = xi_gradient_y(ann, y, p);
  VectorXd D = reduced_div_terms(spec, A, y);

  VectorXd L = op_detail::grad_A_whirl(a, x, fr, ann, dxi) + B(out.r, out.s, out.xi) * x;
  for (int i = 0; i < d; ++i) {
    L -= a.value * p.df.row(i).squaredNorm() * fr.w[i];
    L -= D[i] * fr.wperp[i];
  }
  for (int l = 0; l < N; ++l)
    for (int i = 0; i < d; ++i)
      L += p.df(i, l) * y[i] * y[i] * D[i] * fr.grad_y(l, ann);

  out.L = std::move(L);
  return out;
}

/// Post-solution simplification: grad A + B x - A sum |grad f_i|^2 w^i.
/// Valid when the profile solves the unconstrained system; the divergence
/// residual is checked and reported through precondition_ok.
inline OperatorValue L_simplified(const WhirlSpec& spec, const Coefficient& A,
                                  const Coefficient& B, const VectorXd& x,
                                  double residual_tol = 1e-7) {
  const Annulus& ann = spec.ann;
  const int d = ann.d(), n = ann.n;
  PlaneFrame fr = plane_frame(x, ann);
  for (int l = 0; l < d; ++l)
    if (fr.y[l] < ann.delta_axis())
      throw AxisError("L_simplified: point too close to an axis");
  ProfilePartials p = profile_partials(spec, fr.y);
  const VectorXd& y = fr.y;

  OperatorValue out;
  out.route = OpRoute::Simplified;
  out.r = fr.z;
  out.s = out.r * out.r;
  out.xi = n;
  for (int j = 0; j < d; ++j) out.xi += y[j] * y[j] * p.df.row(j).squaredNorm();
  CoeffEval a = A.eval(out.r, out.s, out.xi);
  VectorXd dxi = xi_gradient_y(ann, y, p);

  VectorXd D = reduced_div_terms(spec, A, y);
  out.precondition_ok = D.cwiseAbs().maxCoeff() <= residual_tol * (1 + std::abs(a.value));

  VectorXd L = op_detail::grad_A_whirl(a, x, fr, ann, dxi) + B(out.r, out.s, out.xi) * x;
  for (int i = 0; i < d; ++i) L -= a.value * p.df.row(i).squaredNorm() * fr.w[i];
  out.L = std::move(L);
  return out;
}

inline OperatorValue L_route(OpRoute route, const WhirlSpec& spec, const Coefficient& A,
                             const Coefficient& B, const VectorXd& x) {
  switch (route) {
    case OpRoute::Direct: return L_direct(spec, A, B, x);
    case OpRoute::Whirl: return L_whirl(spec, A, B, x);
    case OpRoute::Reduced: return L_reduced(spec, A, B, x);
    default: return L_simplified(spec, A, B, x);
  }
}

}  // namespace whirl
