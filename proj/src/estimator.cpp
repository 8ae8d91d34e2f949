#include "safelearn/estimator.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace safelearn {

namespace {

constexpr const char* kCheckpointHeader = "safelearn-estimator v1";

void write_double(std::ostream& os, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, end - buf);
}

void write_matrix(std::ostream& os, const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      if (j > 0) os << ' ';
      write_double(os, M(i, j));
    }
    os << '\n';
  }
}

void expect_token(std::istream& is, const std::string& token) {
  std::string got;
  if (!(is >> got) || got != token) {
    throw std::runtime_error("estimator checkpoint: expected '" + token + "'");
  }
}

Matrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      std::string tok;
      if (!(is >> tok)) throw std::runtime_error("estimator checkpoint: truncated matrix");
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw std::runtime_error("estimator checkpoint: bad number '" + tok + "'");
      }
      M(i, j) = v;
    }
  }
  return M;
}

}  // namespace

Estimator::Estimator(Eigen::Index n, Eigen::Index m, double lambda)
    : n_(n), m_(m), lambda_(lambda) {
  if (n < 1 || m < 1) throw std::invalid_argument("Estimator: n and m must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("Estimator: lambda must be positive");
  }
  V_ = lambda_ * Matrix::Identity(dim(), dim());
  S_ = Matrix::Zero(dim(), n_);
  llt_.compute(V_);
  refresh();
}

void Estimator::update(const Vector& x_prev, const Vector& u_prev, const Vector& x_next) {
  if (x_prev.size() != n_ || u_prev.size() != m_ || x_next.size() != n_) {
    throw std::invalid_argument("Estimator::update: dimension mismatch");
  }
  if (!x_prev.allFinite() || !u_prev.allFinite() || !x_next.allFinite()) {
    throw std::invalid_argument("Estimator::update: non-finite input");
  }
  Vector z(dim());
  z << x_prev, u_prev;
  V_.noalias() += z * z.transpose();
  S_.noalias() += z * x_next.transpose();
  ++k_;
  if (z.squaredNorm() > 0.0) {
    llt_.rankUpdate(z, 1.0);
    if (llt_.info() != Eigen::Success) llt_.compute(V_);
  }
  refresh();
}

void Estimator::refresh() {
  if (llt_.info() != Eigen::Success) throw std::runtime_error("Estimator: Gram factorization failed");
  theta_ = llt_.solve(S_);
  logdet_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

LtiModel Estimator::model() const { return model_from_theta(theta_, n_); }

void Estimator::save(std::ostream& os) const {
  os << kCheckpointHeader << '\n';
  os << "n " << n_ << '\n' << "m " << m_ << '\n' << "k " << k_ << '\n' << "lambda ";
  write_double(os, lambda_);
  os << "\nV\n";
  write_matrix(os, V_);
  os << "S\n";
  write_matrix(os, S_);
}

Estimator Estimator::load(std::istream& is) {
  std::string line;
  std::getline(is >> std::ws, line);
  if (line != kCheckpointHeader) throw std::runtime_error("estimator checkpoint: bad header");
  Eigen::Index n = 0, m = 0;
  std::size_t k = 0;
  std::string lambda_tok;
  expect_token(is, "n");
  is >> n;
  expect_token(is, "m");
  is >> m;
  expect_token(is, "k");
  is >> k;
  expect_token(is, "lambda");
  is >> lambda_tok;
  if (!is) throw std::runtime_error("estimator checkpoint: truncated header");
  double lambda = 0.0;
  std::from_chars(lambda_tok.data(), lambda_tok.data() + lambda_tok.size(), lambda);

  Estimator est(n, m, lambda);
  expect_token(is, "V");
  est.V_ = read_matrix(is, n + m, n + m);
  expect_token(is, "S");
  est.S_ = read_matrix(is, n + m, n);
  est.k_ = k;
  est.llt_.compute(est.V_);
  if (est.llt_.info() != Eigen::Success) {
    throw std::runtime_error("estimator checkpoint: V is not positive definite");
  }
  est.refresh();
  return est;
}

LtiModel model_from_theta(const Matrix& theta, Eigen::Index n) {
  const Matrix AB = theta.transpose();
  return LtiModel(AB.leftCols(n), AB.rightCols(AB.cols() - n));
}

LtiModel estimator_batch(const std::vector<Transition>& transitions, double lambda) {
  if (transitions.empty()) throw std::invalid_argument("estimator_batch: no transitions");
  if (!(lambda > 0.0)) throw std::invalid_argument("estimator_batch: lambda must be positive");
  const Eigen::Index n = transitions.front().x_prev.size();
  const Eigen::Index m = transitions.front().u_prev.size();
  const Eigen::Index d = n + m;
  const auto k = static_cast<Eigen::Index>(transitions.size());

  Matrix Z = Matrix::Zero(k + d, d);
  Matrix X = Matrix::Zero(k + d, n);
  for (Eigen::Index t = 0; t < k; ++t) {
    const auto& tr = transitions[static_cast<std::size_t>(t)];
    if (tr.x_prev.size() != n || tr.u_prev.size() != m || tr.x_next.size() != n) {
      throw std::invalid_argument("estimator_batch: dimension mismatch");
    }
    Z.block(t, 0, 1, n) = tr.x_prev.transpose();
    Z.block(t, n, 1, m) = tr.u_prev.transpose();
    X.row(t) = tr.x_next.transpose();
  }
  Z.bottomRows(d) = std::sqrt(lambda) * Matrix::Identity(d, d);
  const Matrix theta = Z.householderQr().solve(X);
  return model_from_theta(theta, n);
}

}  // namespace safelearn
