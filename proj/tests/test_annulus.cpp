#include <doctest.h>

#include <cmath>

#include "whirl/annulus.hpp"
#include "whirl/numerics.hpp"

using namespace whirl;
using Eigen::VectorXd;

TEST_CASE("dimension split") {
  Annulus e(4, 1.0, 2.0);
  CHECK(e.d() == 2);
  CHECK(e.N() == 2);
  CHECK(e.even());
  Annulus o(5, 1.0, 2.0);
  CHECK(o.d() == 2);
  CHECK(o.N() == 3);
  CHECK_FALSE(o.even());
  CHECK_THROWS_AS(Annulus(1, 1.0, 2.0), GeometryError);
  CHECK_THROWS_AS(Annulus(3, 2.0, 1.0), GeometryError);
}

TEST_CASE("plane radial coordinates") {
  Annulus ann(5, 0.5, 3.0);
  VectorXd x(5);
  x << 3, 4, 0.3, -0.4, -1.2;
  auto [y, z] = radial_coords(x, ann);
  CHECK(y[0] == doctest::Approx(5.0));
  CHECK(y[1] == doctest::Approx(0.5));
  CHECK(y[2] == doctest::Approx(-1.2));  // odd slot keeps the sign
  CHECK(z == doctest::Approx(x.norm()));
}

TEST_CASE("frame derivative formulas match finite differences") {
  Annulus ann(5, 0.5, 3.0);
  VectorXd x(5);
  x << 1.1, 0.6, -0.8, 0.9, 0.7;
  PlaneFrame fr = plane_frame(x, ann);
  FdConfig fd;
  fd.order = 4;
  fd.h0 = 1e-3;  // second-difference roundoff dominates at smaller steps
  for (int l = 0; l < ann.N(); ++l) {
    auto yl = [&](const VectorXd& p) {
      return radial_coords(p, ann).first[l];
    };
    auto yl_vec = [&](const VectorXd& p) { return VectorXd::Constant(1, yl(p)).eval(); };
    VectorXd g = fd_gradient(yl, x, fd);
    CHECK((g - fr.grad_y(l, ann)).norm() < 1e-8);
    CHECK(fd_laplacian(yl_vec, x, fd)[0] == doctest::Approx(fr.lap_y(l, ann)).epsilon(1e-6));
    Eigen::MatrixXd Hfd = fd_hessian(yl, x, fd);
    CHECK((Hfd - fr.hess_y(l, ann)).norm() < 1e-6);
  }
  // frame orthogonality
  for (int l = 0; l < ann.d(); ++l) {
    CHECK(fr.w[l].dot(fr.wperp[l]) == doctest::Approx(0.0));
    CHECK(fr.w[l].norm() == doctest::Approx(fr.y[l]));
  }
}

TEST_CASE("boundary classification with Dirichlet precedence") {
  Annulus ann(4, 1.0, 2.0);
  VectorXd y(2);
  y << 1.0, 0.0;  // |y| = a and on an axis: Dirichlet wins
  CHECK(boundary_part(y, ann, 1e-9) == BoundaryPart::DirichletInner);
  y << 2.0, 0.0;
  CHECK(boundary_part(y, ann, 1e-9) == BoundaryPart::DirichletOuter);
  y << 1.5, 0.0;
  CHECK(boundary_part(y, ann, 1e-9) == BoundaryPart::Neumann);
  y << 1.0, 1.0;
  CHECK(boundary_part(y, ann, 1e-9) == BoundaryPart::Interior);
  y << 0.5, 0.1;
  CHECK(boundary_part(y, ann, 1e-9) == BoundaryPart::Outside);
  CHECK_THROWS_AS(boundary_part(y, ann, -1.0), GeometryError);
}

TEST_CASE("interior sample grid is deterministic, interior and off-axis") {
  Annulus ann(4, 1.0, 2.0);
  auto g1 = interior_grid(ann, 8, 16, 42);
  auto g2 = interior_grid(ann, 8, 16, 42);
  REQUIRE(g1.size() == g2.size());
  CHECK(g1.size() == 8 * 16);
  for (size_t i = 0; i < g1.size(); ++i) CHECK((g1[i] - g2[i]).norm() == 0.0);
  for (const auto& x : g1) {
    auto [y, z] = radial_coords(x, ann);
    CHECK(z > ann.a);
    CHECK(z < ann.b);
    for (int l = 0; l < ann.d(); ++l) CHECK(y[l] >= ann.delta_axis());
  }
  auto g3 = interior_grid(ann, 8, 16, 43);
  bool different = false;
  for (size_t i = 0; i < g1.size(); ++i)
    if ((g1[i] - g3[i]).norm() > 0) different = true;
  CHECK(different);
}
