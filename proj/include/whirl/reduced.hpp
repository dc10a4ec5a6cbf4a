#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <vector>

#include "whirl/annulus.hpp"
#include "whirl/coeff.hpp"
#include "whirl/numerics.hpp"
#include "whirl/whirl_map.hpp"

namespace whirl {

inline VectorXd chebyshev_nodes(double a, double b, int count) {
  VectorXd r(count);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (int j = 0; j < count; ++j) r[j] = mid - half * std::cos(M_PI * j / (count - 1));
  r[0] = a;
  r[count - 1] = b;
  return r;
}

/// Angle profile G on [a,b] with G(a)=0, G(b)=2 m pi. Values are stored on a
/// Chebyshev grid and interpolated by cubic Hermite pieces with exact nodal
/// slopes; Gdot and Gddot are evaluated pointwise from the conserved flux
/// r^{n+1} A(r, r^2, n + r^2 Gdot^2) Gdot = c, never by differencing G.
class RadialProfile final : public AngleProfile {
 public:
  RadialProfile(VectorXd r, VectorXd G, int m, double flux,
                std::function<double(double)> gdot, std::function<double(double)> gddot)
      : r_(std::move(r)), G_(std::move(G)), m_(m), flux_(flux),
        gdot_(std::move(gdot)), gddot_(std::move(gddot)) {}

  double value(double r) const override {
    const int k = locate(r);
    const double h = r_[k + 1] - r_[k], t = (r - r_[k]) / h;
    const double g0 = G_[k], g1 = G_[k + 1], d0 = gdot_(r_[k]), d1 = gdot_(r_[k + 1]);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * g0 + (t3 - 2 * t2 + t) * h * d0 +
           (-2 * t3 + 3 * t2) * g1 + (t3 - t2) * h * d1;
  }
  double deriv(double r) const override { return gdot_(clamp(r)); }
  double deriv2(double r) const override { return gddot_(clamp(r)); }

  const VectorXd& nodes() const { return r_; }
  const VectorXd& node_values() const { return G_; }
  int winding() const { return m_; }
  double flux() const { return flux_; }

  std::string to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "r,G,Gdot,flux\n";
    for (int j = 0; j < r_.size(); ++j)
      out << r_[j] << ',' << G_[j] << ',' << gdot_(r_[j]) << ',' << flux_ << '\n';
    return out.str();
  }

 private:
  double clamp(double r) const {
    const double a = r_[0], b = r_[r_.size() - 1];
    if (r < a - 1e-9 || r > b + 1e-9)
      throw NumericsError("radial profile evaluated outside [a,b]");
    return std::min(std::max(r, a), b);
  }
  int locate(double r) const {
    const double rc = clamp(r);
    const double* lo = r_.data();
    const double* hi = lo + r_.size();
    int k = int(std::upper_bound(lo, hi, rc) - lo) - 1;
    return std::min(std::max(k, 0), int(r_.size()) - 2);
  }

  VectorXd r_, G_;
  int m_;
  double flux_;
  std::function<double(double)> gdot_, gddot_;
};

inline std::shared_ptr<RadialProfile> zero_radial_profile(const Annulus& ann,
                                                          int grid = 129) {
  return std::make_shared<RadialProfile>(
      chebyshev_nodes(ann.a, ann.b, grid), VectorXd::Zero(grid), 0, 0.0,
      [](double) { return 0.0; }, [](double) { return 0.0; });
}

/// Closed-form profile for a gradient-independent coefficient H:
/// G(r) = 2 m pi K(r)/K(b) with K(r) the integral of dz / (z^{n+1} H(z,z^2)).
inline std::shared_ptr<RadialProfile> closed_form_profile(const Coefficient& H,
                                                          const Annulus& ann, int m,
                                                          int grid = 129) {
  if (m == 0) return zero_radial_profile(ann, grid);
  if (H.kind() != CoeffKind::RadialOnly)
    throw DomainError("closed_form_profile requires a gradient-independent coefficient");
  const int n = ann.n;
  // captured by value so the profile's closures never outlive their inputs
  auto integrand = [H, n](double z) {
    const double h = H(z, z * z, 0.0);
    if (h <= 0) throw DomainError("closed_form_profile: H must be positive on [a,b]");
    return 1.0 / (std::pow(z, n + 1) * h);
  };
  VectorXd r = chebyshev_nodes(ann.a, ann.b, grid);
  VectorXd K(grid);
  K[0] = 0;
  for (int j = 1; j < grid; ++j) {
    QuadResult q = quad_adaptive(integrand, r[j - 1], r[j], 1e-13);
    if (!q.converged) throw NumericsError("closed_form_profile: quadrature stalled");
    K[j] = K[j - 1] + q.value;
  }
  const double Kb = K[grid - 1];
  const double target = 2.0 * M_PI * m;
  VectorXd G = (target / Kb) * K;
  const double flux = target / Kb;
  auto gdot = [integrand, flux](double rr) { return flux * integrand(rr); };
  auto gddot = [H, gdot, n](double rr) {
    CoeffEval h = H.eval(rr, rr * rr, 0.0);
    return -gdot(rr) * ((n + 1) / rr + (h.dr + 2 * rr * h.ds) / h.value);
  };
  return std::make_shared<RadialProfile>(std::move(r), std::move(G), m, flux, gdot, gddot);
}

namespace reduced_detail {

/// g such that r^{n+1} A(r, r^2, n + r^2 g^2) g = c. The left side is strictly
/// increasing in g when A > 0 and A_xi >= 0, and odd in (g, c) jointly.
inline double slope_from_flux(const Coefficient& A, int n, double r, double c) {
  if (c == 0) return 0;
  const double sign = c > 0 ? 1.0 : -1.0;
  const double cc = std::abs(c);
  const double rp = std::pow(r, n + 1);
  auto F = [&](double g) { return rp * A(r, r * r, n + r * r * g * g) * g; };
  double hi = cc / (rp * A(r, r * r, double(n)));  // exact when A is xi-independent
  if (hi <= 0 || !std::isfinite(hi)) hi = 1.0;
  int grow = 0;
  while (F(hi) < cc) {
    hi *= 2;
    if (++grow > 200) throw NumericsError("slope_from_flux: bracket growth failed");
  }
  RootConfig cfg;
  cfg.tol = 1e-9 * (1 + hi);
  double g = solve_bracketed(F, cc, 0.0, hi, cfg);
  // Newton polish to machine precision; F is strictly increasing so the
  // derivative is positive and the bracketed estimate is already close.
  for (int it = 0; it < 4; ++it) {
    CoeffEval e = A.eval(r, r * r, n + r * r * g * g);
    const double dF = rp * (e.value + 2 * r * r * g * g * e.dxi);
    if (!(dF > 0)) break;
    g -= (rp * e.value * g - cc) / dF;
  }
  return sign * g;
}

}  // namespace reduced_detail

/// Two-point solve of d/dr[r^{n+1} A(r, r^2, n + r^2 Gdot^2) Gdot] = 0 with
/// G(a) = 0, G(b) = 2 m pi. Nested monotone root-finds: the inner recovers the
/// slope from a trial flux, the outer adjusts the flux until the winding
/// integral matches. `flux_hint` only seeds the outer bracket growth.
inline std::shared_ptr<RadialProfile> solve_bvp(const Coefficient& A, const Annulus& ann,
                                                int m, int grid = 129,
                                                double flux_hint = 0.0) {
  if (m == 0) return zero_radial_profile(ann, grid);
  const int n = ann.n;
  auto gdot_c = [A, n](double r, double c) {
    return reduced_detail::slope_from_flux(A, n, r, c);
  };
  auto winding = [&](double c) {
    QuadResult q =
        quad_adaptive([&](double r) { return gdot_c(r, c); }, ann.a, ann.b, 1e-12);
    if (!q.converged) throw NumericsError("solve_bvp: winding quadrature stalled");
    return q.value;
  };
  const double target = 2.0 * M_PI * m;
  const double sign = m > 0 ? 1.0 : -1.0;
  double hi = std::abs(flux_hint) > 0 ? std::abs(flux_hint)
                                      : std::abs(target) / (ann.b - ann.a);
  int grow = 0;
  while (sign * winding(sign * hi) < std::abs(target)) {
    hi *= 2;
    if (++grow > 200) throw NumericsError("solve_bvp: flux bracket growth failed");
  }
  RootConfig cfg;
  cfg.tol = 1e-13 * (1 + hi);
  const double c = sign * solve_bracketed([&](double cc) { return sign * winding(sign * cc); },
                                          std::abs(target), 0.0, hi, cfg);

  VectorXd r = chebyshev_nodes(ann.a, ann.b, grid);
  VectorXd G(grid);
  G[0] = 0;
  for (int j = 1; j < grid; ++j) {
    QuadResult q =
        quad_adaptive([&](double rr) { return gdot_c(rr, c); }, r[j - 1], r[j], 1e-13);
    G[j] = G[j - 1] + q.value;
  }
  G *= target / G[grid - 1];  // pin the end condition exactly
  auto gdot = [gdot_c, c](double rr) { return gdot_c(rr, c); };
  auto gddot = [A, gdot, n](double rr) {
    const double g = gdot(rr);
    CoeffEval e = A.eval(rr, rr * rr, n + rr * rr * g * g);
    return -g * ((n + 1) * e.value / rr + e.dr + 2 * rr * e.ds + 2 * rr * g * g * e.dxi) /
           (e.value + 2 * rr * rr * g * g * e.dxi);
  };
  return std::make_shared<RadialProfile>(std::move(r), std::move(G), m, c, gdot, gddot);
}

/// Weights of the unconstrained divergence-form system:
/// A_i(y, grad f) = A(z, z^2, n + sum_l y_l^2 |grad f_l|^2) y_i^2 J(y),
/// J(y) = y_1 ... y_d.
inline VectorXd coeff_field(const Coefficient& A, const Annulus& ann, const VectorXd& y,
                            const MatrixXd& df) {
  const int d = ann.d(), n = ann.n;
  const double z = y.norm();
  double xi = n, jac = 1;
  for (int l = 0; l < d; ++l) xi += y[l] * y[l] * df.row(l).squaredNorm();
  for (int i = 0; i < d; ++i) jac *= y[i];
  const double a = A(z, z * z, xi);
  VectorXd out(d);
  for (int i = 0; i < d; ++i) out[i] = a * y[i] * y[i] * jac;
  return out;
}

struct ReducedResidual {
  std::vector<VectorXd> y;        // sample points
  std::vector<VectorXd> values;   // per point: div[A_i grad f_i] / (J y_i^2), i = 1..d
  double max_abs = 0;
};

/// Partial derivatives of xi(y) = n + sum_j y_j^2 |grad f_j|^2.
inline VectorXd xi_gradient_y(const Annulus& ann, const VectorXd& y,
                              const ProfilePartials& p) {
  const int d = ann.d(), N = ann.N();
  VectorXd dxi = VectorXd::Zero(N);
  for (int k = 0; k < N; ++k) {
    if (k < d) dxi[k] += 2 * y[k] * p.df.row(k).squaredNorm();
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < N; ++l) dxi[k] += 2 * y[j] * y[j] * p.df(j, l) * p.d2f[j](l, k);
  }
  return dxi;
}

/// div[A_i grad f_i] / (J y_i^2) for i = 1..d at a single off-axis point,
/// from the expanded divergence (no numerical differentiation of the
/// coefficient field).
inline VectorXd reduced_div_terms(const WhirlSpec& spec, const Coefficient& A,
                                  const VectorXd& y) {
  const Annulus& ann = spec.ann;
  const int d = ann.d(), N = ann.N(), n = ann.n;
  const double z = y.norm();
  ProfilePartials p = profile_partials(spec, y);
  double xi = n;
  for (int l = 0; l < d; ++l) xi += y[l] * y[l] * p.df.row(l).squaredNorm();
  CoeffEval a = A.eval(z, z * z, xi);
  VectorXd dxi = xi_gradient_y(ann, y, p);

  VectorXd D(d);
  for (int i = 0; i < d; ++i) {
    double v = 0;
    for (int k = 0; k < N; ++k)
      v += (a.dxi * dxi[k] + y[k] * (a.dr / z + 2 * a.ds)) * p.df(i, k);
    for (int k = 0; k < N; ++k) v += a.value * p.d2f[i](k, k);
    v += 2 * a.value * p.df(i, i) / y[i];
    for (int k = 0; k < d; ++k) v += a.value * p.df(i, k) / y[k];
    D[i] = v;
  }
  return D;
}

/// Pointwise residual of the unconstrained system over a grid of y samples.
inline ReducedResidual reduced_residual(const WhirlSpec& spec, const Coefficient& A,
                                        const std::vector<VectorXd>& y_grid) {
  ReducedResidual out;
  out.y = y_grid;
  out.values.reserve(y_grid.size());
  for (const VectorXd& y : y_grid) {
    VectorXd D = reduced_div_terms(spec, A, y);
    out.max_abs = std::max(out.max_abs, D.cwiseAbs().maxCoeff());
    out.values.push_back(std::move(D));
  }
  return out;
}

struct UniquenessReport {
  double max_sup_dev = 0;       // pairwise sup deviation over the grid
  double closed_form_dev = -1;  // vs closed form when A is gradient-independent
  std::vector<double> fluxes;
  bool agree = false;
};

/// Re-runs the two-point solve from several outer bracket seeds (and the
/// closed form when available) and reports the spread. Numerical evidence of
/// uniqueness, not a proof.
inline UniquenessReport uniqueness_crosscheck(const Coefficient& A, const Annulus& ann,
                                              int m, double tol = 1e-7) {
  UniquenessReport rep;
  std::vector<std::shared_ptr<RadialProfile>> profiles;
  const double base = 2.0 * M_PI * std::max(1, std::abs(m)) / (ann.b - ann.a);
  for (int k = 0; k < 8; ++k) {
    profiles.push_back(solve_bvp(A, ann, m, 129, base * std::pow(4.0, k - 3)));
    rep.fluxes.push_back(profiles.back()->flux());
  }
  const VectorXd& r = profiles[0]->nodes();
  for (size_t i = 1; i < profiles.size(); ++i)
    for (int j = 0; j < r.size(); ++j)
      rep.max_sup_dev = std::max(
          rep.max_sup_dev, std::abs(profiles[i]->value(r[j]) - profiles[0]->value(r[j])));
  if (A.kind() == CoeffKind::RadialOnly || m == 0) {
    auto cf = closed_form_profile(A, ann, m);
    rep.closed_form_dev = 0;
    for (int j = 0; j < r.size(); ++j)
      rep.closed_form_dev =
          std::max(rep.closed_form_dev, std::abs(cf->value(r[j]) - profiles[0]->value(r[j])));
  }
  rep.agree = rep.max_sup_dev <= tol && (rep.closed_form_dev < 0 || rep.closed_form_dev <= tol);
  return rep;
}

}  // namespace whirl
