#pragma once

#include <cstddef>

namespace safelearn {

/// Upper-tail standard normal quantile for one-sided 99% confidence.
inline constexpr double kZ99 = 2.3263478740408408;

struct BinomialSummary {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double frequency = 0.0;
  double lower = 0.0;  ///< one-sided Wilson score lower bound
  double upper = 1.0;  ///< one-sided Wilson score upper bound
};

/// Wilson score bounds, each one-sided at the level implied by z.
BinomialSummary binomial_summary(std::size_t successes, std::size_t trials, double z = kZ99);

}  // namespace safelearn
