#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "whirl/annulus.hpp"
#include "whirl/coeff.hpp"
#include "whirl/numerics.hpp"
#include "whirl/whirl_map.hpp"

namespace whirl {

/// Stored energy density W(x, u, grad u) = F(|x|, |u|^2, |grad u|^2) together
/// with the induced coefficient pair A = F_xi, B = -F_s of its Euler-Lagrange
/// system. The induced coefficients expose exact first partials taken from
/// the second partials of F (nested duals), so A_s + B_xi = 0 holds by
/// construction and is still checked by sampling in the tests.
class StoredEnergy {
 public:
  explicit StoredEnergy(Coefficient F) : F_(std::move(F)) {
    if (F_.kind() != CoeffKind::Energy)
      throw DomainError("StoredEnergy requires an energy-kind coefficient");
  }

  double operator()(double r, double s, double xi) const { return F_(r, s, xi); }
  const Coefficient& density() const { return F_; }

  Coefficient induced_A() const { return partial(2, +1.0, "F_xi", CoeffKind::General); }
  Coefficient induced_B() const { return partial(1, -1.0, "-F_s", CoeffKind::LowerOrder); }

 private:
  Coefficient partial(int slot, double sign, const std::string& name, CoeffKind kind) const {
    Coefficient F = F_;
    auto fn = [F, slot, sign](const auto& r, const auto& s, const auto& xi) {
      using T = std::decay_t<decltype(r)>;
      if constexpr (std::is_same_v<T, Dual3>) {
        // the arguments arrive basis-seeded, so the point is (r.v, s.v, xi.v)
        return sign * F.eval2(r.v, s.v, xi.v).d[slot];
      } else {
        (void)s;
        (void)xi;
        throw DomainError("second partials of an induced coefficient are not available");
        return T{};
      }
    };
    return Coefficient::from_fn(fn, kind, name + " of " + F_.describe());
  }

  Coefficient F_;
};

/// Exactly divergence-free compactly supported field v = C grad psi with C
/// constant skew and psi the standard bump on a ball: div v = tr[C hess psi]
/// = 0 pointwise, and v vanishes with all derivatives at the support edge.
struct DivFreeField {
  VectorXd center;
  double radius = 0;
  MatrixXd C;  // skew

  VectorXd value(const VectorXd& x) const { return C * grad_psi(x); }
  MatrixXd grad(const VectorXd& x) const { return C * hess_psi(x); }
  double divergence(const VectorXd& x) const { return (C * hess_psi(x)).trace(); }

  VectorXd grad_psi(const VectorXd& x) const {
    const VectorXd w = x - center;
    const double q = w.squaredNorm() / (radius * radius);
    if (q >= 1) return VectorXd::Zero(x.size());
    const double psi = std::exp(1.0 / (q - 1));
    const double psi_q = -psi / ((q - 1) * (q - 1));
    return psi_q * 2.0 / (radius * radius) * w;
  }
  MatrixXd hess_psi(const VectorXd& x) const {
    const int n = int(x.size());
    const VectorXd w = x - center;
    const double q = w.squaredNorm() / (radius * radius);
    if (q >= 1) return MatrixXd::Zero(n, n);
    const double psi = std::exp(1.0 / (q - 1));
    const double qm = q - 1;
    const double psi_q = -psi / (qm * qm);
    const double psi_qq = psi * (1.0 / (qm * qm * qm * qm) + 2.0 / (qm * qm * qm));
    const VectorXd gq = 2.0 / (radius * radius) * w;
    return psi_qq * gq * gq.transpose() +
           psi_q * 2.0 / (radius * radius) * MatrixXd::Identity(n, n);
  }

  /// Seeded field supported in an interior ball of the annulus (the image of
  /// the annulus under any whirl is the annulus itself).
  static DivFreeField random(const Annulus& ann, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    DivFreeField v;
    const double mid = 0.5 * (ann.a + ann.b);
    VectorXd dir(ann.n);
    for (int i = 0; i < ann.n; ++i) dir[i] = gauss(rng);
    dir.normalize();
    v.center = mid * dir;
    v.radius = 0.3 * (ann.b - ann.a);
    MatrixXd M(ann.n, ann.n);
    for (int i = 0; i < ann.n; ++i)
      for (int j = 0; j < ann.n; ++j) M(i, j) = gauss(rng);
    v.C = 0.5 * (M - M.transpose());
    v.C /= std::max(1.0, v.C.norm());
    return v;
  }
};

/// Point of the flow of v at time t starting from y0.
inline VectorXd flow(const DivFreeField& v, const VectorXd& y0, double t) {
  if ((y0 - v.center).norm() >= v.radius) return y0;
  return integrate_adaptive([&v](const VectorXd& y) { return v.value(y); }, y0, t, 1e-12);
}

/// Flow together with its spatial Jacobian (J' = grad v(y) J, J(0) = I).
inline std::pair<VectorXd, MatrixXd> flow_with_jacobian(const DivFreeField& v,
                                                        const VectorXd& y0, double t) {
  const int n = int(y0.size());
  // outside the support the field vanishes identically and the flow is frozen
  if ((y0 - v.center).norm() >= v.radius)
    return {y0, MatrixXd::Identity(n, n)};
  VectorXd state(n + n * n);
  state.head(n) = y0;
  Eigen::Map<MatrixXd>(state.data() + n, n, n) = MatrixXd::Identity(n, n);
  auto rhs = [&v, n](const VectorXd& s) {
    VectorXd ds(s.size());
    const VectorXd y = s.head(n);
    const Eigen::Map<const MatrixXd> J(s.data() + n, n, n);
    ds.head(n) = v.value(y);
    Eigen::Map<MatrixXd>(ds.data() + n, n, n) = v.grad(y) * J;
    return ds;
  };
  VectorXd out = integrate_adaptive(rhs, state, t, 1e-12);
  return {out.head(n), Eigen::Map<MatrixXd>(out.data() + n, n, n)};
}

/// Product quadrature for the annulus: Gauss-Legendre radially and in the
/// polar angles of the positive y-orthant, trapezoid (exact for periodic
/// integrands) in the 2-plane angles. Supported for n = 2, 3, 4.
struct EnergyGrid {
  int radial = 48;
  int angular = 48;  // per 2-plane angle
  int polar = 32;    // per orthant polar angle
};

inline std::vector<std::pair<VectorXd, double>> annulus_quadrature(const Annulus& ann,
                                                                  const EnergyGrid& grid) {
  std::vector<double> zn, zw;
  gauss_legendre(grid.radial, ann.a, ann.b, zn, zw);
  std::vector<std::pair<VectorXd, double>> nodes;
  const int n = ann.n;
  if (n == 2) {
    for (int i = 0; i < grid.radial; ++i)
      for (int j = 0; j < grid.angular; ++j) {
        const double th = 2 * M_PI * j / grid.angular;
        VectorXd x(2);
        x << zn[i] * std::cos(th), zn[i] * std::sin(th);
        nodes.emplace_back(x, zw[i] * zn[i] * 2 * M_PI / grid.angular);
      }
  } else if (n == 3) {
    // x = (y1 cos th, y1 sin th, yN), y1 = z sin phi, yN = z cos phi
    std::vector<double> pn, pw;
    gauss_legendre(grid.polar, 0.0, M_PI, pn, pw);
    for (int i = 0; i < grid.radial; ++i)
      for (int p = 0; p < grid.polar; ++p)
        for (int j = 0; j < grid.angular; ++j) {
          const double th = 2 * M_PI * j / grid.angular;
          const double y1 = zn[i] * std::sin(pn[p]), yN = zn[i] * std::cos(pn[p]);
          VectorXd x(3);
          x << y1 * std::cos(th), y1 * std::sin(th), yN;
          nodes.emplace_back(
              x, zw[i] * pw[p] * zn[i] * zn[i] * std::sin(pn[p]) * 2 * M_PI / grid.angular);
        }
  } else if (n == 4) {
    // y1 = z cos phi, y2 = z sin phi, phi in (0, pi/2); dx = y1 y2 z dz dphi dth1 dth2
    std::vector<double> pn, pw;
    gauss_legendre(grid.polar, 0.0, 0.5 * M_PI, pn, pw);
    for (int i = 0; i < grid.radial; ++i)
      for (int p = 0; p < grid.polar; ++p)
        for (int j = 0; j < grid.angular; ++j)
          for (int k = 0; k < grid.angular; ++k) {
            const double t1 = 2 * M_PI * j / grid.angular, t2 = 2 * M_PI * k / grid.angular;
            const double y1 = zn[i] * std::cos(pn[p]), y2 = zn[i] * std::sin(pn[p]);
            VectorXd x(4);
            x << y1 * std::cos(t1), y1 * std::sin(t1), y2 * std::cos(t2), y2 * std::sin(t2);
            const double w = zw[i] * pw[p] * y1 * y2 * zn[i] *
                             (2 * M_PI / grid.angular) * (2 * M_PI / grid.angular);
            nodes.emplace_back(x, w);
          }
  } else {
    throw NumericsError("annulus_quadrature supports n = 2, 3, 4 only");
  }
  return nodes;
}

/// Energy of a general map given by (u, grad u) samples at the nodes.
template <class MapFn>
double energy_of_map(MapFn&& map, const Annulus& ann, const StoredEnergy& W,
                     const EnergyGrid& grid = {}) {
  double E = 0;
  for (const auto& [x, w] : annulus_quadrature(ann, grid)) {
    auto [u, gu] = map(x);
    E += w * W(x.norm(), u.squaredNorm(), gu.squaredNorm());
  }
  return E;
}

/// Energy of a whirl map.
inline double energy(const WhirlSpec& spec, const StoredEnergy& W,
                     const EnergyGrid& grid = {}) {
  return energy_of_map(
      [&spec](const VectorXd& x) {
        MapJet j = map_jet(spec, x);
        return std::pair<VectorXd, MatrixXd>{j.u, j.grad_u};
      },
      spec.ann, W, grid);
}

/// Central-difference first variation of the energy along the flow of v:
/// u_t(x) = flow(u(x), t), grad u_t = [grad flow](u(x)) grad u(x).
inline double first_variation(const WhirlSpec& spec, const StoredEnergy& W,
                              const DivFreeField& v, double delta = 1e-3,
                              const EnergyGrid& grid = {}) {
  auto flowed = [&](double t) {
    return energy_of_map(
        [&](const VectorXd& x) {
          MapJet j = map_jet(spec, x);
          auto [ut, J] = flow_with_jacobian(v, j.u, t);
          return std::pair<VectorXd, MatrixXd>{ut, J * j.grad_u};
        },
        spec.ann, W, grid);
  };
  return (flowed(delta) - flowed(-delta)) / (2 * delta);
}

}  // namespace whirl
