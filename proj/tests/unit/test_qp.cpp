#include "safelearn/qp.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace safelearn;
using namespace safelearn::test;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

void check_farkas(const ProjectionResult& res, const Matrix& G, const Vector& g) {
  REQUIRE(res.farkas_ray.size() == G.rows());
  CHECK(res.farkas_ray.minCoeff() >= 0.0);
  const double scale = res.farkas_ray.lpNorm<1>();
  REQUIRE(scale > 0.0);
  CHECK((G.transpose() * res.farkas_ray).norm() / scale < 1e-9);
  CHECK(g.dot(res.farkas_ray) / scale < 0.0);
}

}  // namespace

TEST_CASE("projection onto a single halfspace inside an interval") {
  Matrix G(3, 1);
  G << 1.0, 1.0, -1.0;
  const Vector g = vec({1.0, 3.0, 3.0});
  const auto res = project_onto_polyhedron(vec({2.0}), G, g);
  REQUIRE(res.feasible);
  CHECK(res.u(0) == doctest::Approx(1.0));
  CHECK(res.multipliers(0) == doctest::Approx(1.0));
  CHECK(res.kkt_residual <= 1e-12);
}

TEST_CASE("feasible target is returned unchanged") {
  Matrix G(2, 1);
  G << 1.0, -1.0;
  const auto res = project_onto_polyhedron(vec({0.3}), G, vec({1.0, 1.0}));
  REQUIRE(res.feasible);
  CHECK(res.u(0) == 0.3);
  CHECK(res.multipliers.isZero());
}

TEST_CASE("symmetric projection onto a line in 2-D") {
  Matrix G(5, 2);
  G << 1.0, 1.0, Matrix::Identity(2, 2), -Matrix::Identity(2, 2);
  const Vector g = vec({2.0, 5.0, 5.0, 5.0, 5.0});
  const auto res = project_onto_polyhedron(vec({2.0, 2.0}), G, g);
  REQUIRE(res.feasible);
  CHECK((res.u - vec({1.0, 1.0})).norm() < 1e-12);
}

TEST_CASE("contradictory bounds are infeasible with a Farkas ray") {
  Matrix G(2, 1);
  G << 1.0, -1.0;
  const Vector g = vec({-1.0, -1.0});  // u <= -1 and u >= 1
  const auto res = project_onto_polyhedron(vec({0.0}), G, g);
  CHECK_FALSE(res.feasible);
  check_farkas(res, G, g);
  CHECK(res.max_violation == doctest::Approx(1.0));
  CHECK(res.u(0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("phase one keeps hard rows satisfied") {
  // Rows 0-1 conflict and may be relaxed; the box rows stay hard.
  Matrix G(4, 1);
  G << 1.0, -1.0, 1.0, -1.0;
  const Vector g = vec({-3.0, 1.0, 2.0, 2.0});  // u <= -3, u >= -1, |u| <= 2
  Vector w(4);
  w << 1.0, 1.0, 0.0, 0.0;
  const auto res = project_onto_polyhedron(vec({0.0}), G, g, {}, w);
  CHECK_FALSE(res.feasible);
  check_farkas(res, G, g);
  CHECK(res.u(0) >= -2.0 - 1e-10);
  CHECK(res.u(0) <= 2.0 + 1e-10);
  CHECK(res.u(0) == doctest::Approx(-2.0).epsilon(1e-8));
  CHECK(res.max_violation == doctest::Approx(1.0).epsilon(1e-8));

  Vector hard_only(4);
  hard_only << 0.0, 0.0, 1.0, 1.0;
  Vector g_bad = g;
  g_bad(2) = -3.0;  // the hard rows alone are empty
  CHECK_THROWS_AS(project_onto_polyhedron(vec({0.0}), G, g_bad, {}, hard_only),
                  std::invalid_argument);
}

TEST_CASE("zero rows are handled by sign") {
  Matrix G = Matrix::Zero(1, 2);
  CHECK(project_onto_polyhedron(vec({1.0, 2.0}), G, vec({0.0})).feasible);
  const auto res = project_onto_polyhedron(vec({1.0, 2.0}), G, vec({-1.0}));
  CHECK_FALSE(res.feasible);
  check_farkas(res, G, vec({-1.0}));
}

TEST_CASE("no constraints returns the target") {
  const auto res = project_onto_polyhedron(vec({1.0, -2.0}), Matrix(0, 2), Vector(0));
  REQUIRE(res.feasible);
  CHECK(res.u == vec({1.0, -2.0}));
}

TEST_CASE("random projections match the grid oracle") {
  RandomStream rng(2024);
  for (int trial = 0; trial < 24; ++trial) {
    const Eigen::Index m = 1 + trial % 3;
    const double half = grid_box_half_width(m);
    const ProjectionInstance inst =
        random_projection_instance(m, 1 + trial % 4, half, rng);
    const auto res = project_onto_polyhedron(inst.target, inst.G, inst.g);
    REQUIRE(res.feasible);
    CHECK(res.kkt_residual <= 1e-6);
    CHECK(((inst.G * res.u) - inst.g).maxCoeff() <= 1e-9);

    const double d_qp = (res.u - inst.target).norm();
    const double d_grid = grid_min_distance(inst.target, inst.G, inst.g, inst.lo, inst.hi, 1e-3);
    CHECK(d_qp <= d_grid + 1e-9);
    CHECK(std::abs(d_qp - d_grid) <= 1e-2);

    const auto again = project_onto_polyhedron(res.u, inst.G, inst.g);
    REQUIRE(again.feasible);
    CHECK((again.u - res.u).norm() <= 1e-10);
  }
}

TEST_CASE("kkt_residual flags each violated condition") {
  Matrix G(1, 1);
  G << 1.0;
  const Vector g = vec({1.0});
  CHECK(kkt_residual(vec({2.0}), G, g, vec({1.0}), vec({1.0})) == doctest::Approx(0.0));
  CHECK(kkt_residual(vec({2.0}), G, g, vec({1.0}), vec({0.5})) == doctest::Approx(0.5));
  CHECK(kkt_residual(vec({2.0}), G, g, vec({1.5}), vec({0.5})) >= 0.5);
  CHECK(kkt_residual(vec({0.0}), G, g, vec({0.0}), vec({-0.25})) >= 0.25);
}

TEST_CASE("recession cone test") {
  Matrix box(4, 2);
  box << Matrix::Identity(2, 2), -Matrix::Identity(2, 2);
  CHECK(recession_cone_trivial(box));
  Matrix half(1, 2);
  half << 1.0, 0.0;
  CHECK_FALSE(recession_cone_trivial(half));
  Matrix simplex(3, 2);
  simplex << 1.0, 1.0, -2.0, 1.0, 1.0, -2.0;
  CHECK(recession_cone_trivial(simplex));
  Matrix strip(2, 2);
  strip << 1.0, 0.0, -1.0, 0.0;
  CHECK_FALSE(recession_cone_trivial(strip));
}
