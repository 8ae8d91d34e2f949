#pragma once

#include "safelearn/core_types.hpp"

#include <vector>

namespace safelearn {

/// Inputs to the confidence radius and tightening: noise bound r (W <= r I),
/// model bound s (||[A B]||_F <= s), regularizer lambda, per-step failure
/// probability delta and the dimensions.
struct ConfidenceConfig {
  double r = 0.0;
  double s = 0.0;
  double lambda = 1.0;
  double delta = 0.1;
  Eigen::Index n = 1;
  Eigen::Index m = 1;
  /// Use lambda^{n/2} in the determinant ratio instead of lambda^{(n+m)/2}.
  /// The latter is the default: it makes the ratio exactly 1 when V = lambda I.
  bool strict_state_exponent = false;

  [[nodiscard]] Eigen::Index dim() const { return n + m; }
  /// Throws std::invalid_argument naming the violated field.
  void validate() const;
};

/**
 * Self-normalized confidence radius
 *
 *   beta = r * sqrt(2 * (logdet_V / 2 - (e/2) log lambda - log delta_arg)) + sqrt(lambda) * s
 *
 * with e = n + m (or e = n in strict mode). The radicand is clamped at zero.
 */
double beta(const ConfidenceConfig& cfg, double logdet_V, double delta_arg);

/// max over the vertices v of U of ||V^{-1/2} [x; v]||_2, with V = L L^T.
double zeta(const Eigen::LLT<Matrix>& gram_factor, const Vector& x, const InputSet& input_set);

/// ||V^{-1/2} z||_2 for a single stacked vector z.
double weighted_norm_inv(const Eigen::LLT<Matrix>& gram_factor, const Vector& z);

/// True iff ||V^{1/2}(theta_hat_i - theta_i)||_2 <= beta_value for every i.
/// theta_hat is (n+m) x n with one column per row of [A B].
bool confidence_holds(const std::vector<ThetaRow>& theta_true, const Matrix& theta_hat,
                      const Eigen::LLT<Matrix>& gram_factor, double beta_value);

/// Largest ||V^{1/2}(theta_hat_i - theta_i)||_2 over i.
double max_weighted_error(const std::vector<ThetaRow>& theta_true, const Matrix& theta_hat,
                          const Eigen::LLT<Matrix>& gram_factor);

}  // namespace safelearn
