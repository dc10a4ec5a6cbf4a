#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "whirl/dual.hpp"
#include "whirl/expr.hpp"

namespace whirl {

using Dual6 = DualT<Dual3>;  // value + first partials, each again a dual: second partials

enum class CoeffKind {
  General,     // A(r,s,xi)
  RadialOnly,  // H(r,s), no xi dependence
  LowerOrder,  // B(r,s,xi)
  Energy       // stored energy F(r,s,xi)
};

struct CoeffEval {
  double value, dr, ds, dxi;
};

/// Rectangular validity box in (r, s, xi).
struct ValidityBox {
  double r_lo = 0.5, r_hi = 4.0;
  double s_lo = 0.25, s_hi = 16.0;
  double xi_lo = 1.0, xi_hi = 1e4;
};

namespace coeff_detail {

struct Impl {
  virtual ~Impl() = default;
  virtual Dual3 eval(const Dual3& r, const Dual3& s, const Dual3& xi) const = 0;
  virtual Dual6 eval2(const Dual6& r, const Dual6& s, const Dual6& xi) const = 0;
  virtual std::string describe() const = 0;
};

template <class Fn>
struct FnImpl final : Impl {
  Fn fn;
  std::string desc;
  FnImpl(Fn f, std::string d) : fn(std::move(f)), desc(std::move(d)) {}
  Dual3 eval(const Dual3& r, const Dual3& s, const Dual3& xi) const override {
    return fn(r, s, xi);
  }
  Dual6 eval2(const Dual6& r, const Dual6& s, const Dual6& xi) const override {
    return fn(r, s, xi);
  }
  std::string describe() const override { return desc; }
};

struct ExprImpl final : Impl {
  std::shared_ptr<const ExprNode> ast;
  std::string src;
  Dual3 eval(const Dual3& r, const Dual3& s, const Dual3& xi) const override {
    return eval_expr(*ast, r, s, xi);
  }
  Dual6 eval2(const Dual6& r, const Dual6& s, const Dual6& xi) const override {
    return eval_expr(*ast, r, s, xi);
  }
  std::string describe() const override { return src; }
};

}  // namespace coeff_detail

/// Scalar nonlinearity with exact first partials via forward-mode duals.
/// A-kind coefficients (General/RadialOnly) are checked for positivity and
/// monotone xi-dependence on a 20x20x20 lattice of the validity box at
/// construction.
class Coefficient {
 public:
  Coefficient() = default;

  CoeffEval eval(double r, double s, double xi) const {
    const Dual3 v = impl_->eval(Dual3::var(0, r), Dual3::var(1, s), Dual3::var(2, xi));
    return {v.v, v.d[0], v.d[1], v.d[2]};
  }
  double operator()(double r, double s, double xi) const { return eval(r, s, xi).value; }

  /// Second partials of the underlying function (used for induced pairs).
  Dual6 eval2(double r, double s, double xi) const {
    return impl_->eval2(Dual6::var(0, Dual3::var(0, r)), Dual6::var(1, Dual3::var(1, s)),
                        Dual6::var(2, Dual3::var(2, xi)));
  }

  CoeffKind kind() const { return kind_; }
  const ValidityBox& box() const { return box_; }
  std::string describe() const { return impl_ ? impl_->describe() : "<none>"; }
  bool valid() const { return impl_ != nullptr; }

  static Coefficient constant(double c, CoeffKind kind = CoeffKind::General,
                              ValidityBox box = {});
  static Coefficient power_law_H(double alpha, double beta, ValidityBox box = {});
  static Coefficient p_growth(double p, ValidityBox box = {});
  static Coefficient from_expr(const std::string& src, CoeffKind kind, ValidityBox box = {});
  template <class Fn>
  static Coefficient from_fn(Fn fn, CoeffKind kind, std::string desc, ValidityBox box = {});

 private:
  Coefficient(std::shared_ptr<const coeff_detail::Impl> impl, CoeffKind kind, ValidityBox box)
      : impl_(std::move(impl)), kind_(kind), box_(box) {
    validate();
  }
  void validate() const;

  std::shared_ptr<const coeff_detail::Impl> impl_;
  CoeffKind kind_ = CoeffKind::General;
  ValidityBox box_;
};

inline void Coefficient::validate() const {
  const bool a_kind = kind_ == CoeffKind::General || kind_ == CoeffKind::RadialOnly;
  constexpr int n = 20;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double r = box_.r_lo + (box_.r_hi - box_.r_lo) * i / (n - 1);
        const double s = box_.s_lo + (box_.s_hi - box_.s_lo) * j / (n - 1);
        const double xi = box_.xi_lo + (box_.xi_hi - box_.xi_lo) * k / (n - 1);
        const CoeffEval e = eval(r, s, xi);
        if (a_kind) {
          if (!(e.value > 0.0))
            throw DomainError("A-kind coefficient not positive on validity box: " +
                              impl_->describe());
          if (!(e.dxi >= 0.0))
            throw DomainError("A-kind coefficient has A_xi < 0 on validity box: " +
                              impl_->describe());
        }
        if (kind_ == CoeffKind::RadialOnly && e.dxi != 0.0)
          throw DomainError("RadialOnly coefficient depends on xi: " + impl_->describe());
      }
}

inline Coefficient Coefficient::constant(double c, CoeffKind kind, ValidityBox box) {
  auto fn = [c](const auto& r, const auto& s, const auto& xi) {
    using T = std::decay_t<decltype(r)>;
    (void)s;
    (void)xi;
    return T(c) + T(0) * r;
  };
  return Coefficient(
      std::make_shared<coeff_detail::FnImpl<decltype(fn)>>(fn, "const " + std::to_string(c)),
      kind, box);
}

inline Coefficient Coefficient::power_law_H(double alpha, double beta, ValidityBox box) {
  auto fn = [alpha, beta](const auto& r, const auto& s, const auto& xi) {
    using T = std::decay_t<decltype(r)>;
    (void)xi;
    return pow(r, T(alpha)) * pow(s, T(beta));
  };
  return Coefficient(std::make_shared<coeff_detail::FnImpl<decltype(fn)>>(
                         fn, "r^" + std::to_string(alpha) + " s^" + std::to_string(beta)),
                     CoeffKind::RadialOnly, box);
}

inline Coefficient Coefficient::p_growth(double p, ValidityBox box) {
  auto fn = [p](const auto& r, const auto& s, const auto& xi) {
    using T = std::decay_t<decltype(r)>;
    (void)r;
    (void)s;
    return pow(xi, T((p - 2.0) / 2.0));
  };
  return Coefficient(std::make_shared<coeff_detail::FnImpl<decltype(fn)>>(
                         fn, "xi^((p-2)/2), p=" + std::to_string(p)),
                     CoeffKind::General, box);
}

inline Coefficient Coefficient::from_expr(const std::string& src, CoeffKind kind,
                                          ValidityBox box) {
  auto impl = std::make_shared<coeff_detail::ExprImpl>();
  impl->ast = std::shared_ptr<const ExprNode>(parse_expr(src).release());
  impl->src = src;
  if (kind == CoeffKind::RadialOnly) {
    std::vector<std::string> vars;
    free_vars(*impl->ast, vars);
    for (const auto& v : vars)
      if (v == "xi") throw DomainError("RadialOnly coefficient depends on xi: " + src);
  }
  return Coefficient(std::move(impl), kind, box);
}

template <class Fn>
Coefficient Coefficient::from_fn(Fn fn, CoeffKind kind, std::string desc, ValidityBox box) {
  return Coefficient(
      std::make_shared<coeff_detail::FnImpl<Fn>>(std::move(fn), std::move(desc)), kind, box);
}

/// Discriminant of (H, B): 2(n+1)H + r H_r + 2 r^2 [H_s - B_xi], with H
/// evaluated at (r, r^2) and B_xi at (r, r^2, xi).
class Discriminant {
 public:
  Discriminant(Coefficient H, Coefficient B, int n) : H_(std::move(H)), B_(std::move(B)), n_(n) {
    if (H_.kind() != CoeffKind::RadialOnly)
      throw DomainError("discriminant requires a xi-independent H");
  }

  double operator()(double r, double xi) const {
    const CoeffEval h = H_.eval(r, r * r, 0.0);
    const CoeffEval b = B_.eval(r, r * r, xi);
    return 2.0 * (n_ + 1) * h.value + r * h.dr + 2.0 * r * r * (h.ds - b.dxi);
  }

  /// Sampled zero decision: 256 radii in [a,b], each probed across the
  /// xi-range swept by the candidate map, against 1e-10 * (1 + |2(n+1)H|).
  struct ZeroDecision {
    bool identically_zero;
    double max_abs;
    double threshold;
    int samples;
  };
  ZeroDecision identically_zero(double a, double b,
                                const std::function<std::pair<double, double>(double)>& xi_range)
      const {
    constexpr int ns = 256;
    double max_abs = 0, max_thr = 0;
    for (int i = 0; i < ns; ++i) {
      const double r = a + (b - a) * (i + 0.5) / ns;
      const auto [xlo, xhi] = xi_range(r);
      const double scale = std::abs(2.0 * (n_ + 1) * H_(r, r * r, 0.0));
      const double thr = 1e-10 * (1.0 + scale);
      for (const double xi : {xlo, 0.5 * (xlo + xhi), xhi})
        max_abs = std::max(max_abs, std::abs((*this)(r, xi)));
      max_thr = std::max(max_thr, thr);
    }
    return {max_abs <= max_thr, max_abs, max_thr, ns * 3};
  }

 private:
  Coefficient H_, B_;
  int n_;
};

inline Discriminant discriminant(Coefficient H, Coefficient B, int n) {
  return Discriminant(std::move(H), std::move(B), n);
}

}  // namespace whirl
