#include <doctest.h>

#include <cmath>
#include <memory>

#include "whirl/reduced.hpp"
#include "whirl/variation.hpp"

using namespace whirl;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("stored energy requires the energy kind") {
  CHECK_THROWS_AS(StoredEnergy(Coefficient::constant(1.0, CoeffKind::General)), DomainError);
  StoredEnergy W(Coefficient::from_expr("xi/2", CoeffKind::Energy));
  CHECK(W(1.0, 2.0, 6.0) == doctest::Approx(3.0));
}

TEST_CASE("induced coefficient pair") {
  StoredEnergy W(Coefficient::from_expr("xi^2/4 + r*s", CoeffKind::Energy));
  Coefficient A = W.induced_A();
  Coefficient B = W.induced_B();
  CHECK(A(1.2, 1.44, 6.0) == doctest::Approx(3.0));   // F_xi = xi/2
  CHECK(B(1.2, 1.44, 6.0) == doctest::Approx(-1.2));  // -F_s = -r
  CoeffEval a = A.eval(1.2, 1.44, 6.0);
  CHECK(a.dxi == doctest::Approx(0.5));
  CHECK(a.dr == doctest::Approx(0.0));
  // the pair always satisfies A_s + B_xi = 0
  StoredEnergy W2(Coefficient::from_expr("r*s + s*xi + xi^2/4 + xi", CoeffKind::Energy));
  Coefficient A2 = W2.induced_A();
  Coefficient B2 = W2.induced_B();
  for (double r : {0.9, 1.3})
    for (double s : {1.0, 2.5})
      for (double xi : {2.0, 5.0}) {
        CHECK(A2.eval(r, s, xi).ds + B2.eval(r, s, xi).dxi == doctest::Approx(0.0));
        CHECK(A2.eval(r, s, xi).ds == doctest::Approx(1.0));
      }
  CHECK_THROWS_AS(A.eval2(1.2, 1.44, 6.0), DomainError);
}

TEST_CASE("divergence free test fields") {
  Annulus ann(3, 1.0, 2.0);
  DivFreeField v = DivFreeField::random(ann, 42);
  CHECK((v.C + v.C.transpose()).norm() < 1e-14);
  FdConfig fd;
  fd.order = 4;
  fd.h0 = 1e-5;
  for (double frac : {0.1, 0.5, 0.9}) {
    VectorXd x = v.center;
    x[0] += frac * v.radius;
    CHECK(std::abs(v.divergence(x)) < 1e-13);
    auto field = [&](const VectorXd& p) { return v.value(p); };
    CHECK(std::abs(fd_divergence(field, x, fd)) < 1e-7);
    MatrixXd gfd = fd_jacobian(field, x, fd);
    CHECK((gfd - v.grad(x)).norm() < 1e-6 * (1 + v.grad(x).norm()));
  }
  // compact support
  VectorXd far = v.center;
  far[1] += 1.01 * v.radius;
  CHECK(v.value(far).norm() == 0.0);
  CHECK(v.grad(far).norm() == 0.0);
}

TEST_CASE("flow reversibility and volume conservation") {
  Annulus ann(2, 1.0, 2.0);
  DivFreeField v = DivFreeField::random(ann, 7);
  VectorXd y0 = v.center;
  y0[0] += 0.3 * v.radius;
  y0[1] -= 0.2 * v.radius;
  const double t = 0.05;
  VectorXd yt = flow(v, y0, t);
  CHECK((flow(v, yt, -t) - y0).norm() < 1e-9);
  auto [yj, J] = flow_with_jacobian(v, y0, t);
  CHECK((yj - yt).norm() < 1e-9);
  CHECK(std::abs(J.determinant() - 1.0) < 1e-7);
  // frozen outside the support
  VectorXd far = v.center + VectorXd::Constant(2, v.radius);
  CHECK((flow(v, far, t) - far).norm() == 0.0);
}

TEST_CASE("annulus quadrature integrates volumes") {
  StoredEnergy one(Coefficient::constant(1.0, CoeffKind::Energy));
  auto id = [](const VectorXd& x) {
    return std::pair<VectorXd, MatrixXd>{x, MatrixXd::Identity(x.size(), x.size())};
  };
  {
    Annulus ann(2, 1.0, 2.0);
    CHECK(energy_of_map(id, ann, one) == doctest::Approx(3.0 * M_PI).epsilon(1e-10));
  }
  {
    Annulus ann(3, 1.0, 2.0);
    CHECK(energy_of_map(id, ann, one) == doctest::Approx(28.0 * M_PI / 3.0).epsilon(1e-8));
  }
  {
    Annulus ann(4, 1.0, 2.0);
    EnergyGrid g;
    g.angular = 24;
    CHECK(energy_of_map(id, ann, one, g) == doctest::Approx(7.5 * M_PI * M_PI).epsilon(1e-8));
  }
  {
    Annulus ann(5, 1.0, 2.0);
    CHECK_THROWS_AS(annulus_quadrature(ann, EnergyGrid{}), NumericsError);
  }
}

TEST_CASE("dirichlet energy of whirls") {
  Annulus ann(2, 1.0, 2.0);
  StoredEnergy W(Coefficient::from_expr("xi/2", CoeffKind::Energy));
  WhirlSpec id = WhirlSpec::identity(ann);
  CHECK(energy(id, W) == doctest::Approx(3.0 * M_PI).epsilon(1e-10));

  Coefficient A = W.induced_A();  // constant 1/2
  auto prof = solve_bvp(A, ann, 1);
  WhirlSpec spec = WhirlSpec::shared_profile(ann, 1, prof);
  // E = 3 pi + pi int_a^b r^3 Gdot^2 dr
  QuadResult q = quad_adaptive(
      [&](double r) {
        const double g = prof->deriv(r);
        return r * r * r * g * g;
      },
      ann.a, ann.b, 1e-11);
  CHECK(energy(spec, W) == doctest::Approx(3.0 * M_PI + M_PI * q.value).epsilon(1e-8));

  // reversing the winding leaves the energy unchanged
  auto prof_m = solve_bvp(A, ann, -1);
  WhirlSpec spec_m = WhirlSpec::shared_profile(ann, -1, prof_m);
  CHECK(energy(spec_m, W) == doctest::Approx(energy(spec, W)).epsilon(1e-12));
}

TEST_CASE("first variation vanishes at the solution") {
  Annulus ann(2, 1.0, 2.0);
  StoredEnergy W(Coefficient::from_expr("xi^2/4", CoeffKind::Energy));
  Coefficient A = W.induced_A();
  auto prof = solve_bvp(A, ann, 1);
  WhirlSpec solution = WhirlSpec::shared_profile(ann, 1, prof);
  WhirlSpec linear = WhirlSpec::per_component(
      ann, WindingVector::Ones(1), std::make_shared<LinearProfile>(ann.a, ann.b, 1.0));
  EnergyGrid grid;
  grid.radial = 40;
  grid.angular = 40;
  const double E = energy(solution, W, grid);

  DivFreeField v = DivFreeField::random(ann, 11);
  const double dv_zero = first_variation(solution, W, DivFreeField{VectorXd::Zero(2), 0.1,
                                                                   MatrixXd::Zero(2, 2)},
                                         1e-3, grid);
  CHECK(dv_zero == doctest::Approx(0.0));
  const double dv_sol = std::abs(first_variation(solution, W, v, 1e-3, grid));
  const double dv_lin = std::abs(first_variation(linear, W, v, 1e-3, grid));
  CHECK(dv_sol < 1e-4 * (1 + E));
  CHECK(dv_lin > 10.0 * dv_sol);
}
