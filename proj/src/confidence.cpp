#include "safelearn/confidence.hpp"

#include <algorithm>
#include <cmath>

namespace safelearn {

void ConfidenceConfig::validate() const {
  if (!(r > 0.0)) throw std::invalid_argument("ConfidenceConfig: r must be positive");
  if (!(s > 0.0)) throw std::invalid_argument("ConfidenceConfig: s must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("ConfidenceConfig: lambda must be positive");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("ConfidenceConfig: delta must lie in (0, 1)");
  }
  if (n < 1 || m < 1) throw std::invalid_argument("ConfidenceConfig: n and m must be >= 1");
}

double beta(const ConfidenceConfig& cfg, double logdet_V, double delta_arg) {
  if (!(delta_arg > 0.0 && delta_arg < 1.0)) {
    throw std::invalid_argument("beta: delta_arg must lie in (0, 1)");
  }
  const double exponent =
      static_cast<double>(cfg.strict_state_exponent ? cfg.n : cfg.dim());
  const double log_ratio = 0.5 * logdet_V - 0.5 * exponent * std::log(cfg.lambda);
  const double radicand = std::max(0.0, 2.0 * (log_ratio - std::log(delta_arg)));
  return cfg.r * std::sqrt(radicand) + std::sqrt(cfg.lambda) * cfg.s;
}

double weighted_norm_inv(const Eigen::LLT<Matrix>& gram_factor, const Vector& z) {
  return gram_factor.matrixL().solve(z).norm();
}

double zeta(const Eigen::LLT<Matrix>& gram_factor, const Vector& x, const InputSet& input_set) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = input_set.dim();
  if (gram_factor.rows() != n + m) throw std::invalid_argument("zeta: dimension mismatch");
  Vector z(n + m);
  z.head(n) = x;
  double best = 0.0;
  for (const Vector& v : input_set_vertices(input_set)) {
    z.tail(m) = v;
    best = std::max(best, weighted_norm_inv(gram_factor, z));
  }
  return best;
}

double max_weighted_error(const std::vector<ThetaRow>& theta_true, const Matrix& theta_hat,
                          const Eigen::LLT<Matrix>& gram_factor) {
  if (static_cast<Eigen::Index>(theta_true.size()) != theta_hat.cols()) {
    throw std::invalid_argument("confidence_holds: row count mismatch");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < theta_hat.cols(); ++i) {
    const Vector err = theta_hat.col(i) - theta_true[static_cast<std::size_t>(i)].values();
    // ||V^{1/2} e||^2 = e^T L L^T e
    const double norm = (gram_factor.matrixU() * err).norm();
    worst = std::max(worst, norm);
  }
  return worst;
}

bool confidence_holds(const std::vector<ThetaRow>& theta_true, const Matrix& theta_hat,
                      const Eigen::LLT<Matrix>& gram_factor, double beta_value) {
  return max_weighted_error(theta_true, theta_hat, gram_factor) <= beta_value;
}

}  // namespace safelearn
