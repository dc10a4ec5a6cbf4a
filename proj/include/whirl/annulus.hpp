#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace whirl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The annulus {a < |x| < b} in R^n, together with the dimension split
/// n = 2d (even) or n = 2d+1 (odd), N = number of 2-plane radial variables.
struct Annulus {
  int n;
  double a, b;

  Annulus(int n_, double a_, double b_) : n(n_), a(a_), b(b_) {
    if (n < 2) throw GeometryError("annulus dimension must be >= 2");
    if (!(0 < a && a < b)) throw GeometryError("annulus radii must satisfy 0 < a < b");
  }

  int d() const { return n / 2; }
  int N() const { return (n + 1) / 2; }
  bool even() const { return n % 2 == 0; }
  /// Points with some y_l below this are treated as on-axis and excluded
  /// from sampling grids (the frame formulas carry 1/y_l terms).
  double delta_axis() const { return 1e-3 * a; }
};

/// 2-plane radial variables: y_l = (x_{2l-1}^2 + x_{2l}^2)^{1/2} for l <= d,
/// and y_N = x_n when n is odd (sign kept).
inline std::pair<VectorXd, double> radial_coords(const VectorXd& x, const Annulus& ann) {
  if (x.size() != ann.n) throw GeometryError("radial_coords: dimension mismatch");
  VectorXd y(ann.N());
  for (int l = 0; l < ann.d(); ++l) y[l] = std::hypot(x[2 * l], x[2 * l + 1]);
  if (!ann.even()) y[ann.N() - 1] = x[ann.n - 1];
  return {y, y.norm()};
}

/// Orthogonal plane decomposition of x: w^i carries the i-th coordinate
/// 2-plane of x, [w^i]^perp its quarter-turn; w^N = (0,..,0,x_n) with zero
/// perp when n is odd.
struct PlaneFrame {
  std::vector<VectorXd> w, wperp;
  VectorXd y;
  double z = 0;

  /// grad y_l with respect to x (w^l / y_l; e_n for the odd last slot).
  VectorXd grad_y(int l, const Annulus& ann) const {
    if (!ann.even() && l == ann.N() - 1) {
      VectorXd e = VectorXd::Zero(ann.n);
      e[ann.n - 1] = 1;
      return e;
    }
    return w[l] / y[l];
  }
  /// Laplacian of y_l (1/y_l; 0 for the odd last slot).
  double lap_y(int l, const Annulus& ann) const {
    if (!ann.even() && l == ann.N() - 1) return 0;
    return 1.0 / y[l];
  }
  /// Hessian of y_l: (I2 - t (x) t)/y_l on the l-th plane, zero elsewhere.
  MatrixXd hess_y(int l, const Annulus& ann) const {
    MatrixXd H = MatrixXd::Zero(ann.n, ann.n);
    if (!ann.even() && l == ann.N() - 1) return H;
    const double c = x_[2 * l] / y[l], s = x_[2 * l + 1] / y[l];
    H(2 * l, 2 * l) = s * s / y[l];
    H(2 * l + 1, 2 * l + 1) = c * c / y[l];
    H(2 * l, 2 * l + 1) = H(2 * l + 1, 2 * l) = -c * s / y[l];
    return H;
  }

  VectorXd x_;
};

inline PlaneFrame plane_frame(const VectorXd& x, const Annulus& ann) {
  if (x.size() != ann.n) throw GeometryError("plane_frame: dimension mismatch");
  PlaneFrame fr;
  fr.x_ = x;
  fr.w.resize(ann.N());
  fr.wperp.resize(ann.N());
  for (int l = 0; l < ann.d(); ++l) {
    fr.w[l] = VectorXd::Zero(ann.n);
    fr.wperp[l] = VectorXd::Zero(ann.n);
    fr.w[l][2 * l] = x[2 * l];
    fr.w[l][2 * l + 1] = x[2 * l + 1];
    fr.wperp[l][2 * l] = -x[2 * l + 1];
    fr.wperp[l][2 * l + 1] = x[2 * l];
  }
  if (!ann.even()) {
    const int N = ann.N();
    fr.w[N - 1] = VectorXd::Zero(ann.n);
    fr.w[N - 1][ann.n - 1] = x[ann.n - 1];
    fr.wperp[N - 1] = VectorXd::Zero(ann.n);
  }
  auto [y, z] = radial_coords(x, ann);
  fr.y = y;
  fr.z = z;
  return fr;
}

enum class BoundaryPart { Interior, DirichletInner, DirichletOuter, Neumann, Outside };

/// Classify a point of the reduced domain A_n against the boundary split.
/// Dirichlet (|y| = a or b) takes precedence over Neumann (some y_l = 0).
inline BoundaryPart boundary_part(const VectorXd& y, const Annulus& ann, double tol) {
  if (tol <= 0) throw GeometryError("boundary_part: tol must be positive");
  const double z = y.norm();
  if (z < ann.a - tol || z > ann.b + tol) return BoundaryPart::Outside;
  for (int l = 0; l < ann.d(); ++l)
    if (y[l] < -tol) return BoundaryPart::Outside;
  if (std::abs(z - ann.a) <= tol) return BoundaryPart::DirichletInner;
  if (std::abs(z - ann.b) <= tol) return BoundaryPart::DirichletOuter;
  for (int l = 0; l < ann.d(); ++l)
    if (std::abs(y[l]) <= tol) return BoundaryPart::Neumann;
  return BoundaryPart::Interior;
}

/// Deterministic off-axis interior sample: `shells` radii strictly inside
/// [a,b] crossed with seeded directions (about per_shell per 2-plane).
/// Axis proximity below delta_axis is rejected.
inline std::vector<VectorXd> interior_grid(const Annulus& ann, int shells = 24,
                                           int per_shell = 48, unsigned seed = 12345) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<VectorXd> pts;
  pts.reserve(static_cast<size_t>(shells) * per_shell);
  const double margin = 0.02 * (ann.b - ann.a);
  for (int i = 0; i < shells; ++i) {
    // Chebyshev-distributed shells, pulled off the spheres
    const double t = std::cos(M_PI * (i + 0.5) / shells);
    const double z = 0.5 * (ann.a + margin + ann.b - margin) + 0.5 * (ann.b - ann.a - 2 * margin) * t;
    for (int j = 0; j < per_shell; ++j) {
      for (int attempt = 0; attempt < 64; ++attempt) {
        // split z across the y-coordinates, then spin each 2-plane
        VectorXd y(ann.N());
        for (int l = 0; l < ann.N(); ++l) y[l] = gauss(rng);
        if (!ann.even())
          y[ann.N() - 1] = std::abs(y[ann.N() - 1]) * (rng() % 2 ? 1.0 : -1.0);
        for (int l = 0; l < ann.d(); ++l) y[l] = std::abs(y[l]);
        y *= z / y.norm();
        bool off_axis = true;
        for (int l = 0; l < ann.d(); ++l)
          if (y[l] < ann.delta_axis()) off_axis = false;
        if (!off_axis) continue;
        VectorXd x(ann.n);
        for (int l = 0; l < ann.d(); ++l) {
          const double th = ang(rng);
          x[2 * l] = y[l] * std::cos(th);
          x[2 * l + 1] = y[l] * std::sin(th);
        }
        if (!ann.even()) x[ann.n - 1] = y[ann.N() - 1];
        pts.push_back(std::move(x));
        break;
      }
    }
  }
  return pts;
}

}  // namespace whirl
