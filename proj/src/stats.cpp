#include "safelearn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace safelearn {

BinomialSummary binomial_summary(std::size_t successes, std::size_t trials, double z) {
  if (successes > trials) throw std::invalid_argument("binomial_summary: successes > trials");
  BinomialSummary s;
  s.successes = successes;
  s.trials = trials;
  if (trials == 0) return s;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
  s.frequency = p;
  s.lower = std::clamp(centre - half, 0.0, 1.0);
  s.upper = std::clamp(centre + half, 0.0, 1.0);
  return s;
}

}  // namespace safelearn
