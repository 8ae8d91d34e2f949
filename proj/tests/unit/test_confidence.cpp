#include "safelearn/confidence.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace safelearn;
using namespace safelearn::test;

namespace {

ConfidenceConfig make_cfg(double r, double s, double lambda, Eigen::Index n, Eigen::Index m) {
  ConfidenceConfig c;
  c.r = r;
  c.s = s;
  c.lambda = lambda;
  c.n = n;
  c.m = m;
  return c;
}

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Eigen::LLT<Matrix> llt_of(const Matrix& V) { return Eigen::LLT<Matrix>(V); }

}  // namespace

TEST_CASE("beta at k = 0 collapses to the closed form") {
  const ConfidenceConfig cfg = make_cfg(1.0, 1.0, 1.0, 1, 1);
  const double b = beta(cfg, 0.0, 0.1);
  CHECK(b == doctest::Approx(std::sqrt(2.0 * std::log(10.0)) + 1.0).epsilon(1e-12));
  CHECK(b == doctest::Approx(3.1460).epsilon(1e-4));

  // delta_arg -> 1 leaves only sqrt(lambda) s
  CHECK(beta(cfg, 0.0, 1.0 - 1e-12) == doctest::Approx(1.0).epsilon(1e-5));

  // The default exponent makes the ratio exactly one for V = lambda I.
  const ConfidenceConfig c4 = make_cfg(1.0, 1.0, 4.0, 2, 1);
  CHECK(beta(c4, 3.0 * std::log(4.0), 0.1) ==
        doctest::Approx(std::sqrt(2.0 * std::log(10.0)) + 2.0).epsilon(1e-12));
}

TEST_CASE("beta against an independent scalar evaluation") {
  ConfidenceConfig cfg = make_cfg(2.0, 0.5, 1.0, 1, 1);
  const double expected = 2.0 * std::sqrt(2.0 * (0.5 * std::log(4.0) - std::log(0.05))) + 0.5;
  CHECK(beta(cfg, std::log(4.0), 0.05) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("beta domain and clamping") {
  const ConfidenceConfig cfg = make_cfg(1.0, 1.0, 1.0, 1, 1);
  CHECK_THROWS_AS(beta(cfg, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(beta(cfg, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(beta(cfg, 0.0, -0.5), std::invalid_argument);

  // Strict exponent with lambda < 1 pushes the radicand below zero at V = lambda I.
  ConfidenceConfig strict = make_cfg(1.0, 1.0, 1e-6, 1, 3);
  strict.strict_state_exponent = true;
  CHECK(beta(strict, 4.0 * std::log(1e-6), 0.9) == std::sqrt(1e-6));
}

TEST_CASE("strict mode uses the state dimension in the exponent") {
  ConfidenceConfig cfg = make_cfg(1.0, 1.0, 4.0, 2, 1);
  cfg.strict_state_exponent = true;
  const double logdet = 3.0 * std::log(4.0);
  const double expected =
      std::sqrt(2.0 * (0.5 * logdet - 0.5 * 2.0 * std::log(4.0) - std::log(0.1))) + 2.0;
  CHECK(beta(cfg, logdet, 0.1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("beta scales linearly in r") {
  RandomStream rng(3);
  for (int i = 0; i < 100; ++i) {
    const double r = rng.uniform(0.01, 5.0);
    const double c = rng.uniform(0.1, 10.0);
    const double lambda = rng.uniform(0.1, 10.0);
    ConfidenceConfig a = make_cfg(r, 1.3, lambda, 2, 1);
    ConfidenceConfig b = make_cfg(c * r, 1.3, lambda, 2, 1);
    const double logdet = 3.0 * std::log(lambda) + rng.uniform(0.0, 20.0);
    const double delta = rng.uniform(0.01, 0.9);
    const double base = std::sqrt(lambda) * 1.3;
    CHECK(beta(b, logdet, delta) - base ==
          doctest::Approx(c * (beta(a, logdet, delta) - base)).epsilon(1e-12));
  }
}

TEST_CASE("ConfidenceConfig validation") {
  CHECK_NOTHROW(make_cfg(1.0, 1.0, 1.0, 1, 1).validate());
  CHECK_THROWS_AS(make_cfg(0.0, 1.0, 1.0, 1, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_cfg(1.0, -1.0, 1.0, 1, 1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(make_cfg(1.0, 1.0, 0.0, 1, 1).validate(), std::invalid_argument);
  ConfidenceConfig bad = make_cfg(1.0, 1.0, 1.0, 1, 1);
  bad.delta = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("zeta examples") {
  const InputSet U = InputSet::box(vec({-1.0}), vec({1.0}));
  CHECK(zeta(llt_of(Matrix::Identity(2, 2)), vec({1.0}), U) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(zeta(llt_of(4.0 * Matrix::Identity(2, 2)), vec({1.0}), U) ==
        doctest::Approx(std::sqrt(2.0) / 2.0).epsilon(1e-14));
}

TEST_CASE("zeta matches a dense grid over a 2-D box") {
  RandomStream rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix V = random_spd(3, rng);
    const auto llt = llt_of(V);
    const Vector x = rng.normal_vector(1);
    const Vector lo = rng.uniform_vector(2, -2.0, 0.0);
    const Vector hi = lo + rng.uniform_vector(2, 0.5, 2.0);
    const double z = zeta(llt, x, InputSet::box(lo, hi));

    const Matrix Vinv = V.inverse();
    double grid = 0.0;
    Vector s(3);
    s(0) = x(0);
    for (int a = 0; a <= 200; ++a) {
      s(1) = lo(0) + (hi(0) - lo(0)) * a / 200.0;
      for (int b = 0; b <= 200; ++b) {
        s(2) = lo(1) + (hi(1) - lo(1)) * b / 200.0;
        grid = std::max(grid, std::sqrt(s.dot(Vinv * s)));
      }
    }
    CHECK(grid <= z + 1e-12);
    CHECK(z == doctest::Approx(grid).epsilon(1e-6));
  }
}

TEST_CASE("zeta is positively homogeneous of degree -1 in sqrt(V)") {
  RandomStream rng(22);
  const InputSet U = InputSet::box(vec({-1.0, -0.5}), vec({2.0, 0.5}));
  for (int i = 0; i < 50; ++i) {
    const Matrix V = random_spd(4, rng);
    const Vector x = rng.normal_vector(2);
    const double c = rng.uniform(0.1, 10.0);
    CHECK(zeta(llt_of(c * c * V), x, U) ==
          doctest::Approx(zeta(llt_of(V), x, U) / c).epsilon(1e-12));
  }
}

TEST_CASE("confidence_holds examples") {
  RandomStream rng(4);
  const Matrix theta = random_matrix(3, 2, rng);
  std::vector<ThetaRow> rows{ThetaRow(theta.col(0), 2, 1), ThetaRow(theta.col(1), 2, 1)};
  CHECK(confidence_holds(rows, theta, llt_of(random_spd(3, rng)), 0.0));

  const std::vector<ThetaRow> one{ThetaRow(vec({0.0, 0.0}), 1, 1)};
  Matrix est(2, 1);
  est << 2.0, 0.0;
  CHECK_FALSE(confidence_holds(one, est, llt_of(Matrix::Identity(2, 2)), 1.0));

  Matrix V(2, 2);
  V << 4.0, 0.0, 0.0, 1.0;
  est << 1.0, 0.0;
  CHECK(max_weighted_error(one, est, llt_of(V)) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(confidence_holds(one, est, llt_of(V), 2.0));
}

TEST_CASE("max_weighted_error matches the quadratic form") {
  RandomStream rng(6);
  const Matrix V = random_spd(4, rng);
  const Matrix truth = random_matrix(4, 3, rng);
  const Matrix est = truth + random_matrix(4, 3, rng, 0.1);
  std::vector<ThetaRow> rows;
  for (Eigen::Index i = 0; i < 3; ++i) rows.emplace_back(truth.col(i), 3, 1);
  double expected = 0.0;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const Vector e = est.col(i) - truth.col(i);
    expected = std::max(expected, std::sqrt(e.dot(V * e)));
  }
  CHECK(max_weighted_error(rows, est, llt_of(V)) == doctest::Approx(expected).epsilon(1e-12));
}
