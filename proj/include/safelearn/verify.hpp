#pragma once

#include "safelearn/config.hpp"
#include "safelearn/safety_filter.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace safelearn {

/// Columns are points of the ball of the given radius in R^dim:
/// `boundary_fraction` of them on the sphere, the rest uniformly inside.
Matrix sample_ball(Eigen::Index dim, double radius, std::size_t count, RandomStream& rng,
                   double boundary_fraction = 0.8);

/// Per row i, max_a H_i v_a + max_b H_i w_b. The sampled disturbance family
/// is the product of the two sample sets, so its supremum splits into the
/// two per-ball maxima.
Vector sampled_disturbance_bound(const Matrix& H, const Matrix& v_samples, const Matrix& w_samples);

/// H (A x + B u) plus the sampled disturbance bound: the largest sampled
/// left-hand side of each robust row.
Vector sampled_worst_rows(const TightenedProgram& prog, const Vector& u,
                          const Vector& disturbance_bound);

struct EquivalenceReport {
  std::size_t instances = 0;
  std::size_t feasible_points = 0;
  /// Sampled constraint values exceeding h by more than the tolerance.
  std::size_t violations = 0;
  double worst_excess = 0.0;
  std::size_t outside_tested = 0;
  std::size_t outside_detected = 0;
  [[nodiscard]] double detection_rate() const {
    return outside_tested == 0 ? 0.0
                               : static_cast<double>(outside_detected) /
                                     static_cast<double>(outside_tested);
  }
  [[nodiscard]] bool pass(double detection_threshold = 0.95) const {
    return violations == 0 && detection_rate() >= detection_threshold;
  }
};

/// Random tightened programs with n, m <= 3: points feasible for the
/// tightened rows must satisfy every sampled robust constraint; points
/// `outside_offset` beyond a tightened row must violate some sampled one.
EquivalenceReport sampled_equivalence_check(std::size_t instances, std::size_t samples,
                                            std::uint64_t seed, double tolerance = 1e-9,
                                            double outside_offset = 1e-3);

struct SuiteResult {
  std::string name;
  double statistic = 0.0;
  double bound = 0.0;      ///< lower confidence bound where applicable
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

/// Decay of tau_k = zeta_k n beta_k(delta / 2n) along one trajectory,
/// compared with the reference rate sqrt(log k / k).
struct DecayAnalysis {
  /// Least-squares c in tau_k ~ c sqrt(log k / k) over k >= 2; empty when
  /// the curve is too short to fit.
  std::optional<double> fit_c;
  /// tau_{10^4} / tau_{10^2} and its allowance 2 sqrt((log 1e4/1e4) / (log 1e2/1e2)).
  std::optional<double> mid_ratio;
  double mid_bound = 0.0;
  /// tau_{10^5} / tau_{10^2}, required to be at most `long_bound`.
  std::optional<double> long_ratio;
  double long_bound = 0.05;

  [[nodiscard]] bool mid_ok() const { return mid_ratio && *mid_ratio <= mid_bound; }
  [[nodiscard]] bool long_ok() const { return long_ratio && *long_ratio <= long_bound; }
};

double reference_rate(std::size_t k);
DecayAnalysis analyze_decay(const std::vector<double>& tau);

/// Coverage, per-step safety and sampled equivalence at the config's scale.
std::vector<SuiteResult> run_verification(const ExperimentConfig& cfg);

}  // namespace safelearn
