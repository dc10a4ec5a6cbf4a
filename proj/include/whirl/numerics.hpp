#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace whirl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Step sizes and stencil order shared by every finite-difference check.
struct FdConfig {
  double h0 = 1e-5;
  int order = 2;  // 2 or 4

  double step(double x) const { return h0 * (1.0 + std::abs(x)); }
};

struct NumericsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class F>
double central_diff(F&& f, double x, double h, int order) {
  if (order == 4)
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
  return (f(x + h) - f(x - h)) / (2 * h);
}

template <class F>
double second_diff(F&& f, double x, double h, int order) {
  if (order == 4)
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) /
           (12 * h * h);
  return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
}

}  // namespace detail

template <class F>
VectorXd fd_gradient(F&& f, const VectorXd& x, const FdConfig& cfg = {}) {
  VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double h = cfg.step(x[i]);
    g[i] = detail::central_diff(
        [&](double t) {
          VectorXd p = x;
          p[i] = t;
          return f(p);
        },
        x[i], h, cfg.order);
  }
  return g;
}

/// Jacobian of f : R^n -> R^m, row i = gradient of f_i.
template <class F>
MatrixXd fd_jacobian(F&& f, const VectorXd& x, const FdConfig& cfg = {}) {
  const VectorXd f0 = f(x);
  MatrixXd J(f0.size(), x.size());
  for (int j = 0; j < x.size(); ++j) {
    const double h = cfg.step(x[j]);
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    if (cfg.order == 4) {
      VectorXd xp2 = x, xm2 = x;
      xp2[j] += 2 * h;
      xm2[j] -= 2 * h;
      J.col(j) = (-f(xp2) + 8 * f(xp) - 8 * f(xm) + f(xm2)) / (12 * h);
    } else {
      J.col(j) = (f(xp) - f(xm)) / (2 * h);
    }
  }
  return J;
}

template <class F>
VectorXd fd_laplacian(F&& f, const VectorXd& x, const FdConfig& cfg = {}) {
  const VectorXd f0 = f(x);
  VectorXd lap = VectorXd::Zero(f0.size());
  for (int j = 0; j < x.size(); ++j) {
    const double h = cfg.step(x[j]);
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    if (cfg.order == 4) {
      VectorXd xp2 = x, xm2 = x;
      xp2[j] += 2 * h;
      xm2[j] -= 2 * h;
      lap += (-f(xp2) + 16 * f(xp) - 30 * f0 + 16 * f(xm) - f(xm2)) / (12 * h * h);
    } else {
      lap += (f(xp) - 2 * f0 + f(xm)) / (h * h);
    }
  }
  return lap;
}

template <class F>
double fd_divergence(F&& f, const VectorXd& x, const FdConfig& cfg = {}) {
  double div = 0;
  for (int j = 0; j < x.size(); ++j) {
    const double h = cfg.step(x[j]);
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    div += (f(xp)[j] - f(xm)[j]) / (2 * h);
  }
  return div;
}

/// curl as the skew matrix [d_j f_i - d_i f_j].
template <class F>
MatrixXd fd_curl(F&& f, const VectorXd& x, const FdConfig& cfg = {}) {
  const MatrixXd J = fd_jacobian(f, x, cfg);
  return J - J.transpose();
}

template <class F>
MatrixXd fd_hessian(F&& f, const VectorXd& x, const FdConfig& cfg = {}) {
  const int n = static_cast<int>(x.size());
  MatrixXd H(n, n);
  for (int i = 0; i < n; ++i) {
    const double hi = cfg.step(x[i]);
    H(i, i) = detail::second_diff(
        [&](double t) {
          VectorXd p = x;
          p[i] = t;
          return f(p);
        },
        x[i], hi, 2);
    for (int j = i + 1; j < n; ++j) {
      const double hj = cfg.step(x[j]);
      auto at = [&](double si, double sj) {
        VectorXd p = x;
        p[i] += si * hi;
        p[j] += sj * hj;
        return f(p);
      };
      H(i, j) = H(j, i) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * hi * hj);
    }
  }
  return H;
}

struct QuadResult {
  double value = 0;
  double err_est = 0;
  bool converged = true;
};

namespace detail {

template <class F>
QuadResult simpson_rec(F&& f, double a, double b, double fa, double fm, double fb, double whole,
                       double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  const double err = (left + right - whole) / 15;
  // Requested tolerances can undershoot the roundoff noise of the integrand,
  // which would drive the recursion to its depth cap. Floor at panel roundoff.
  const double floor_tol = 64 * std::numeric_limits<double>::epsilon() * (b - a) *
                           (std::abs(fa) + std::abs(fm) + std::abs(fb) + 1);
  const double t = std::max(tol, floor_tol);
  if (std::abs(err) <= t || depth >= 48) {
    QuadResult r;
    r.value = left + right + err;
    r.err_est = std::abs(err);
    r.converged = std::abs(err) <= t;
    return r;
  }
  QuadResult rl = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1);
  QuadResult rr = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  return {rl.value + rr.value, rl.err_est + rr.err_est, rl.converged && rr.converged};
}

}  // namespace detail

/// Adaptive Simpson on [a,b] with absolute tolerance.
template <class F>
QuadResult quad_adaptive(F&& f, double a, double b, double abs_tol = 1e-11) {
  if (a == b) return {0, 0, true};
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return detail::simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, 0);
}

/// Gauss-Legendre nodes/weights on [a,b], by Newton iteration on P_n.
inline void gauss_legendre(int npts, double a, double b, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  nodes.resize(npts);
  weights.resize(npts);
  const double xm = 0.5 * (a + b), xl = 0.5 * (b - a);
  const int m = (npts + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 0; j < npts; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      pp = npts * (t * p0 - p1) / (t * t - 1);
      const double dt = p0 / pp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    nodes[i] = xm - xl * t;
    nodes[npts - 1 - i] = xm + xl * t;
    weights[i] = weights[npts - 1 - i] = 2 * xl / ((1 - t * t) * pp * pp);
  }
}

struct RootConfig {
  double tol = 1e-12;
  int max_iter = 200;
};

/// Root of g(x) = target on a bracket, bisection with a secant polish.
/// g need not be monotone globally but g(lo), g(hi) must straddle target.
template <class G>
double solve_bracketed(G&& g, double target, double lo, double hi, const RootConfig& cfg = {}) {
  double flo = g(lo) - target, fhi = g(hi) - target;
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if (flo * fhi > 0) throw NumericsError("solve_bracketed: no straddle");
  for (int it = 0; it < cfg.max_iter; ++it) {
    double mid = 0.5 * (lo + hi);
    // Secant step on alternate iterations, kept only if it stays inside the
    // bracket. Pure false position creeps one-sided on convex functions, so
    // interleaving bisection guarantees the bracket halves every two passes.
    if (it % 2) {
      const double denom = fhi - flo;
      if (denom != 0) {
        const double sec = lo - flo * (hi - lo) / denom;
        if (sec > lo && sec < hi) mid = sec;
      }
    }
    const double fm = g(mid) - target;
    if (std::abs(fm) <= cfg.tol || hi - lo <= 1e-16 * (1 + std::abs(mid))) return mid;
    if (flo * fm <= 0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

/// Grow [lo,hi] geometrically until g straddles target. Returns the bracket.
template <class G>
std::pair<double, double> grow_bracket(G&& g, double target, double lo, double hi,
                                       int max_grow = 200) {
  double flo = g(lo) - target, fhi = g(hi) - target;
  for (int it = 0; it < max_grow && flo * fhi > 0; ++it) {
    const double w = hi - lo;
    if (std::abs(flo) < std::abs(fhi))
      lo -= w;
    else
      hi += w;
    flo = g(lo) - target;
    fhi = g(hi) - target;
  }
  if (flo * fhi > 0) throw NumericsError("grow_bracket: no straddle after growth");
  return {lo, hi};
}

/// One classic RK4 step.
template <class F>
VectorXd rk4_step(F&& f, const VectorXd& y, double h) {
  const VectorXd k1 = f(y);
  const VectorXd k2 = f(y + 0.5 * h * k1);
  const VectorXd k3 = f(y + 0.5 * h * k2);
  const VectorXd k4 = f(y + h * k3);
  return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
}

/// Adaptive RK4 (step doubling) from t=0 to t=T.
template <class F>
VectorXd integrate_adaptive(F&& f, VectorXd y, double T, double tol = 1e-10) {
  if (T == 0) return y;
  const double dir = T > 0 ? 1.0 : -1.0;
  double t = 0;
  double h = dir * std::min(std::abs(T), 0.05);
  int guard = 0;
  while (dir * (T - t) > 0) {
    if (++guard > 100000) throw NumericsError("integrate_adaptive: too many steps");
    if (dir * (t + h) > dir * T) h = T - t;
    const VectorXd big = rk4_step(f, y, h);
    const VectorXd half = rk4_step(f, rk4_step(f, y, 0.5 * h), 0.5 * h);
    const double err = (big - half).norm() / 15.0;
    if (err <= tol * (1 + y.norm()) || std::abs(h) < 1e-14) {
      y = half + (half - big) / 15.0;
      t += h;
      if (err > 0) h *= std::min(2.0, 0.9 * std::pow(tol * (1 + y.norm()) / err, 0.2));
    } else {
      h *= std::max(0.1, 0.9 * std::pow(tol * (1 + y.norm()) / err, 0.2));
    }
  }
  return y;
}

}  // namespace whirl
