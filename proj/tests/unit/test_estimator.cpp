#include "safelearn/estimator.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace safelearn;
using namespace safelearn::test;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::vector<Transition> random_transitions(const LtiModel& model, std::size_t count,
                                           double noise, RandomStream& rng,
                                           double input_amplitude = 1.0) {
  std::vector<Transition> out;
  Vector x = rng.normal_vector(model.n());
  for (std::size_t k = 0; k < count; ++k) {
    const Vector u = rng.uniform_vector(model.m(), -input_amplitude, input_amplitude);
    const Vector next = model.predict(x, u) + noise * rng.normal_vector(model.n());
    out.push_back({x, u, next});
    x = next;
  }
  return out;
}

LtiModel random_model(Eigen::Index n, Eigen::Index m, RandomStream& rng) {
  Matrix A = random_matrix(n, n, rng, 0.3);
  return {A, random_matrix(n, m, rng)};
}

}  // namespace

TEST_CASE("initial state") {
  const Estimator e(1, 1, 1.0);
  CHECK(e.gram().isApprox(Matrix::Identity(2, 2)));
  CHECK(e.logdet_gram() == 0.0);
  CHECK(e.theta_hat().isZero());
  CHECK(e.count() == 0);

  const Estimator e4(2, 1, 4.0);
  CHECK(e4.logdet_gram() == doctest::Approx(3.0 * std::log(4.0)));
  CHECK(e4.logdet_gram() == doctest::Approx(4.1589).epsilon(1e-4));

  CHECK_THROWS_AS(Estimator(1, 1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(Estimator(1, 1, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(Estimator(0, 1, 1.0), std::invalid_argument);
}

TEST_CASE("single update against a hand-solved 2x2 system") {
  Estimator e(1, 1, 1.0);
  e.update(vec({1.0}), vec({1.0}), vec({2.0}));
  Matrix V(2, 2);
  V << 2.0, 1.0, 1.0, 2.0;
  CHECK(e.gram().isApprox(V));
  CHECK(e.cross_moment().col(0).isApprox(vec({2.0, 2.0})));
  // (I + z z^T) theta = 2 z with z = [1; 1]: theta = 2/3 [1; 1]
  CHECK(e.theta_hat()(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(e.theta_hat()(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(e.logdet_gram() == doctest::Approx(std::log(3.0)));
  CHECK(e.count() == 1);

  const LtiModel batch = estimator_batch({{vec({1.0}), vec({1.0}), vec({2.0})}}, 1.0);
  CHECK(batch.A(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(batch.B(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("update rejects bad input and leaves the state untouched") {
  Estimator e(1, 1, 1.0);
  e.update(vec({1.0}), vec({1.0}), vec({2.0}));
  const Matrix V = e.gram();
  CHECK_THROWS_AS(e.update(vec({std::nan("")}), vec({1.0}), vec({2.0})), std::invalid_argument);
  CHECK_THROWS_AS(e.update(vec({1.0, 2.0}), vec({1.0}), vec({2.0})), std::invalid_argument);
  CHECK(e.gram() == V);
  CHECK(e.count() == 1);
}

TEST_CASE("state invariants hold along random updates") {
  RandomStream rng(7);
  const LtiModel truth = random_model(3, 2, rng);
  Estimator e(3, 2, 0.5);
  double prev_logdet = e.logdet_gram();
  Matrix prev_V = e.gram();
  for (const Transition& t : random_transitions(truth, 200, 0.1, rng)) {
    e.update(t.x_prev, t.u_prev, t.x_next);
    const Matrix L = e.gram_cholesky();
    CHECK(rel_fro(L * L.transpose(), e.gram()) <= 1e-9);
    CHECK(rel_fro(e.gram() * e.theta_hat(), e.cross_moment()) <= 1e-9);
    CHECK(e.logdet_gram() ==
          doctest::Approx(2.0 * L.diagonal().array().log().sum()).epsilon(1e-9));
    CHECK(e.logdet_gram() >= prev_logdet);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(e.gram() - prev_V);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9);
    Eigen::SelfAdjointEigenSolver<Matrix> floor(e.gram() - 0.5 * Matrix::Identity(5, 5));
    CHECK(floor.eigenvalues().minCoeff() >= -1e-9);
    prev_logdet = e.logdet_gram();
    prev_V = e.gram();
  }
}

TEST_CASE("recursive and batch estimates agree") {
  RandomStream rng(99);
  for (double lambda : {0.01, 1.0, 100.0}) {
    const LtiModel truth = random_model(2, 2, rng);
    const auto data = random_transitions(truth, 50, 0.2, rng);
    Estimator e(2, 2, lambda);
    for (const Transition& t : data) e.update(t.x_prev, t.u_prev, t.x_next);
    const LtiModel batch = estimator_batch(data, lambda);
    CHECK(rel_fro(e.model().stacked(), batch.stacked()) <= 1e-9);
  }
}

TEST_CASE("batch solution is invariant to the order of transitions") {
  RandomStream rng(5);
  const LtiModel truth = random_model(2, 1, rng);
  auto data = random_transitions(truth, 100, 0.1, rng);
  const LtiModel before = estimator_batch(data, 1.0);
  std::reverse(data.begin(), data.end());
  std::swap(data[3], data[70]);
  const LtiModel after = estimator_batch(data, 1.0);
  CHECK(rel_fro(after.stacked(), before.stacked()) <= 1e-9);
}

TEST_CASE("noise-free data with tiny regularization recovers the model") {
  Matrix A(1, 1), B(1, 1);
  A << 0.5;
  B << 1.0;
  const LtiModel truth(A, B);
  RandomStream rng(8);
  const auto data = random_transitions(truth, 200, 0.0, rng);
  const LtiModel est = estimator_batch(data, 1e-8);
  CHECK(est.A(0, 0) == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(est.B(0, 0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("heavy regularization shrinks the estimate to zero") {
  RandomStream rng(9);
  const LtiModel truth = random_model(2, 1, rng);
  const auto data = random_transitions(truth, 30, 0.1, rng);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {1e2, 1e4, 1e6, 1e8}) {
    const double size = estimator_batch(data, lambda).stacked().norm();
    CHECK(size < prev);
    prev = size;
  }
  CHECK(prev < 1e-5);
}

TEST_CASE("consistency on noise-free persistently excited data") {
  RandomStream rng(10);
  Matrix A(2, 2), B(2, 2);
  A << 0.6, 0.2, -0.1, 0.5;
  B << 1.0, 0.0, 0.5, 1.0;
  const LtiModel truth(A, B);
  Estimator e(2, 2, 1.0);
  for (const Transition& t : random_transitions(truth, 1000, 0.0, rng, 3.0)) {
    e.update(t.x_prev, t.u_prev, t.x_next);
  }
  const Matrix err = e.theta_hat() - truth.theta();
  for (Eigen::Index i = 0; i < err.cols(); ++i) CHECK(err.col(i).norm() < 1e-3);
}

TEST_CASE("model layout") {
  Matrix theta(2, 1);
  theta << 0.3, -0.7;
  const LtiModel m1 = model_from_theta(theta, 1);
  CHECK(m1.A(0, 0) == 0.3);
  CHECK(m1.B(0, 0) == -0.7);

  CHECK(Estimator(2, 3, 1.0).model().stacked().isZero());

  RandomStream rng(1);
  Estimator e(2, 1, 1.0);
  for (const Transition& t : random_transitions(random_model(2, 1, rng), 10, 0.1, rng)) {
    e.update(t.x_prev, t.u_prev, t.x_next);
  }
  const Matrix AB = e.model().stacked();
  for (Eigen::Index i = 0; i < 2; ++i) {
    CHECK((AB.row(i).transpose() - e.theta_hat().col(i)).norm() == 0.0);
  }
}

TEST_CASE("checkpoint round trip is exact") {
  RandomStream rng(12);
  Estimator e(2, 1, 0.3);
  for (const Transition& t : random_transitions(random_model(2, 1, rng), 25, 0.1, rng)) {
    e.update(t.x_prev, t.u_prev, t.x_next);
  }
  std::stringstream ss;
  e.save(ss);
  const Estimator back = Estimator::load(ss);
  CHECK(back.count() == e.count());
  CHECK(back.lambda() == e.lambda());
  CHECK(back.gram() == e.gram());
  CHECK(back.cross_moment() == e.cross_moment());
  CHECK(rel_fro(back.theta_hat(), e.theta_hat()) <= 1e-12);

  std::stringstream bad("not-an-estimator\n");
  CHECK_THROWS(Estimator::load(bad));
}
