#include <doctest.h>

#include <cmath>
#include <memory>
#include <vector>

#include "whirl/op.hpp"

using namespace whirl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<VectorXd> probes(const Annulus& ann, int count, unsigned seed) {
  return interior_grid(ann, 5, std::max(1, count / 5), seed);
}

double rel_dev(const VectorXd& u, const VectorXd& v) {
  return (u - v).norm() / (1 + std::max(u.norm(), v.norm()));
}

}  // namespace

TEST_CASE("identity map reduces to the lower order terms") {
  // u = x: L = grad A(|x|, |x|^2, n) + B x
  Annulus ann(4, 1.0, 2.0);
  WhirlSpec spec = WhirlSpec::identity(ann);
  Coefficient A = Coefficient::from_expr("r + s + xi", CoeffKind::General);
  Coefficient B = Coefficient::from_expr("s - xi", CoeffKind::LowerOrder);
  for (const VectorXd& x : probes(ann, 20, 7)) {
    const double r = x.norm(), s = r * r;
    VectorXd expect = (1.0 / r + 2.0) * x + (s - 4.0) * x;  // grad(r + s) + B x
    for (OpRoute route : {OpRoute::Direct, OpRoute::Whirl, OpRoute::Reduced,
                          OpRoute::Simplified}) {
      OperatorValue v = L_route(route, spec, A, B, x);
      CAPTURE(route_name(route));
      CHECK((v.L - expect).norm() < 1e-10 * (1 + expect.norm()));
      CHECK(v.xi == doctest::Approx(4.0));
      CHECK(v.s == doctest::Approx(s).epsilon(1e-13));
    }
  }
}

TEST_CASE("routes agree on solution and non-solution profiles") {
  Coefficient A = Coefficient::p_growth(4.0);
  Coefficient B = Coefficient::from_expr("r - xi/2", CoeffKind::LowerOrder);
  for (int n : {2, 3, 4}) {
    CAPTURE(n);
    Annulus ann(n, 1.0, 2.0);
    auto prof = solve_bvp(A, ann, 1);
    std::vector<WhirlSpec> specs;
    specs.push_back(WhirlSpec::shared_profile(ann, 1, prof));
    specs.push_back(WhirlSpec::per_component(
        ann, WindingVector::Ones(ann.d()),
        std::make_shared<LinearProfile>(ann.a, ann.b, 1.0)));
    if (ann.d() >= 2) {
      WindingVector m(ann.d());
      for (int i = 0; i < ann.d(); ++i) m[i] = i + 1;
      specs.push_back(WhirlSpec::per_component(
          ann, m, std::make_shared<LinearProfile>(ann.a, ann.b, 1.0)));
    }
    for (const WhirlSpec& spec : specs) {
      for (const VectorXd& x : probes(ann, 25, 11)) {
        OperatorValue d = L_direct(spec, A, B, x);
        OperatorValue w = L_whirl(spec, A, B, x);
        OperatorValue r = L_reduced(spec, A, B, x);
        CHECK(rel_dev(d.L, w.L) < 1e-8);
        CHECK(rel_dev(d.L, r.L) < 1e-8);
        CHECK(d.xi == doctest::Approx(w.xi).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("angular component on the equal winding solution") {
  // n = 2, A = B = 1, m = 1: along the angular direction the operator reduces
  // to -r Gdot(r)^2 with Gdot = (16 pi / 3) r^-3
  Annulus ann(2, 1.0, 2.0);
  Coefficient one = Coefficient::constant(1.0, CoeffKind::RadialOnly);
  Coefficient B = Coefficient::constant(1.0, CoeffKind::LowerOrder);
  auto prof = closed_form_profile(one, ann, 1);
  WhirlSpec spec = WhirlSpec::shared_profile(ann, 1, prof);
  const double r = 1.3;
  VectorXd x(2);
  x << r * std::cos(0.4), r * std::sin(0.4);
  VectorXd theta(2);
  theta << x[0] / r, x[1] / r;
  OperatorValue v = L_direct(spec, one, B, x);
  const double gdot = 16.0 * M_PI / 3.0 / (r * r * r);
  // radial part: B r (A is constant), angular part: -r Gdot^2
  CHECK(v.L.dot(theta) == doctest::Approx(r - r * gdot * gdot).epsilon(1e-9));
  const double lg = -r * gdot * gdot;
  CHECK(lg == doctest::Approx(-75.61021).epsilon(1e-6));
  CHECK(lg == doctest::Approx(-std::pow(16.0 * M_PI / 3.0, 2) / std::pow(r, 5)));
  VectorXd perp(2);
  perp << -theta[1], theta[0];
  CHECK(std::abs(v.L.dot(perp)) < 1e-9);
}

TEST_CASE("simplified route and its precondition flag") {
  Annulus ann(2, 1.0, 2.0);
  Coefficient A = Coefficient::p_growth(4.0);
  Coefficient B = Coefficient::constant(0.0, CoeffKind::LowerOrder);
  auto prof = solve_bvp(A, ann, 1);
  WhirlSpec good = WhirlSpec::shared_profile(ann, 1, prof);
  WhirlSpec bad = WhirlSpec::per_component(
      ann, WindingVector::Ones(1), std::make_shared<LinearProfile>(ann.a, ann.b, 1.0));
  for (const VectorXd& x : probes(ann, 15, 3)) {
    OperatorValue s = L_simplified(good, A, B, x);
    OperatorValue full = L_reduced(good, A, B, x);
    CHECK(s.precondition_ok);
    CHECK(rel_dev(s.L, full.L) < 1e-8);
    OperatorValue sb = L_simplified(bad, A, B, x);
    CHECK_FALSE(sb.precondition_ok);
  }
}

TEST_CASE("perpendicular projections recover the divergence terms") {
  Annulus ann(4, 1.0, 2.0);
  Coefficient A = Coefficient::p_growth(3.0);
  Coefficient B = Coefficient::constant(0.5, CoeffKind::LowerOrder);
  WindingVector m(2);
  m << 1, 2;
  WhirlSpec spec = WhirlSpec::per_component(
      ann, m, std::make_shared<LinearProfile>(ann.a, ann.b, 1.0));
  for (const VectorXd& x : probes(ann, 10, 19)) {
    PlaneFrame fr = plane_frame(x, ann);
    VectorXd D = reduced_div_terms(spec, A, fr.y);
    OperatorValue v = L_reduced(spec, A, B, x);
    for (int i = 0; i < ann.d(); ++i) {
      // <L, [w^i]^perp> = -y_i^2 D_i since the perp frame is orthogonal to
      // every w^l and every grad y_l
      const double proj = v.L.dot(fr.wperp[i]);
      CHECK(proj == doctest::Approx(-fr.y[i] * fr.y[i] * D[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("axis guard on frame based routes") {
  Annulus ann(4, 1.0, 2.0);
  Coefficient A = Coefficient::constant(1.0);
  Coefficient B = Coefficient::constant(0.0, CoeffKind::LowerOrder);
  WhirlSpec spec = WhirlSpec::per_component(
      ann, WindingVector::Ones(2), std::make_shared<LinearProfile>(ann.a, ann.b, 1.0));
  VectorXd x(4);
  x << 1.4, 0.0, 1e-7, 0.0;
  CHECK_THROWS_AS(L_whirl(spec, A, B, x), AxisError);
  CHECK_THROWS_AS(L_reduced(spec, A, B, x), AxisError);
  CHECK_THROWS_AS(L_simplified(spec, A, B, x), AxisError);
}
