#pragma once

#include "safelearn/core_types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace safelearn {

struct Transition {
  Vector x_prev;
  Vector u_prev;
  Vector x_next;
};

/**
 * Ridge-regression estimate of [A B] from streamed transitions.
 *
 * Holds the Gram matrix V = Z^T Z + lambda I, its Cholesky factor, the
 * cross-moment S = Z^T X and the per-row solutions theta_hat (column i solves
 * V theta = S_i). Each update is a rank-one change of V; the factor is
 * updated in place and theta_hat is re-solved against it.
 */
class Estimator {
 public:
  Estimator(Eigen::Index n, Eigen::Index m, double lambda = 1.0);

  void update(const Vector& x_prev, const Vector& u_prev, const Vector& x_next);

  [[nodiscard]] Eigen::Index n() const { return n_; }
  [[nodiscard]] Eigen::Index m() const { return m_; }
  [[nodiscard]] Eigen::Index dim() const { return n_ + m_; }
  [[nodiscard]] std::size_t count() const { return k_; }
  [[nodiscard]] double lambda() const { return lambda_; }

  [[nodiscard]] const Matrix& gram() const { return V_; }
  /// Lower-triangular L with L L^T = V.
  [[nodiscard]] Matrix gram_cholesky() const { return llt_.matrixL(); }
  [[nodiscard]] const Eigen::LLT<Matrix>& gram_factor() const { return llt_; }
  [[nodiscard]] const Matrix& cross_moment() const { return S_; }
  /// (n+m) x n, column i is theta_hat_i.
  [[nodiscard]] const Matrix& theta_hat() const { return theta_; }
  [[nodiscard]] double logdet_gram() const { return logdet_; }

  [[nodiscard]] LtiModel model() const;

  /// Plain-text checkpoint: header, dimensions, k, lambda, V and S.
  void save(std::ostream& os) const;
  static Estimator load(std::istream& is);

 private:
  void refresh();

  Eigen::Index n_;
  Eigen::Index m_;
  double lambda_;
  std::size_t k_ = 0;
  Matrix V_;
  Eigen::LLT<Matrix> llt_;
  Matrix S_;
  Matrix theta_;
  double logdet_ = 0.0;
};

/// Splits a stacked (n+m) x n parameter matrix into (A, B).
LtiModel model_from_theta(const Matrix& theta, Eigen::Index n);

/// Direct batch ridge solution, independent of the recursive path: solves the
/// augmented least-squares problem [Z; sqrt(lambda) I] theta = [X; 0] by
/// Householder QR.
LtiModel estimator_batch(const std::vector<Transition>& transitions, double lambda);

}  // namespace safelearn
