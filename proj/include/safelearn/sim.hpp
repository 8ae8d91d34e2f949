#pragma once

#include "safelearn/confidence.hpp"
#include "safelearn/core_types.hpp"
#include "safelearn/estimator.hpp"
#include "safelearn/random.hpp"
#include "safelearn/safety_filter.hpp"
#include "safelearn/stats.hpp"

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <string>
#include <vector>

namespace safelearn {

/// Square root F of a PSD matrix with F F^T = W. Uses Cholesky when W is
/// positive definite and a symmetric eigendecomposition otherwise.
Matrix noise_square_root(const Matrix& W);

/// Ground-truth plant x <- A x + B u + F g with g standard normal.
class Plant {
 public:
  Plant(LtiModel model, NoiseSpec noise, Vector x0, std::uint64_t seed);

  const Vector& step(const Vector& u);
  Vector sample_noise();

  [[nodiscard]] const Vector& state() const { return x_; }
  [[nodiscard]] std::size_t steps() const { return k_; }
  [[nodiscard]] const LtiModel& model() const { return model_; }
  [[nodiscard]] const NoiseSpec& noise() const { return noise_; }
  [[nodiscard]] const Matrix& noise_factor() const { return noise_factor_; }

 private:
  LtiModel model_;
  NoiseSpec noise_;
  Matrix noise_factor_;
  Vector x_;
  std::size_t k_ = 0;
  RandomStream rng_;
};

/// Sliding-window excitation monitor over the last `window` (x, u) pairs:
/// tracks the extreme eigenvalues of sum [x; u][x; u]^T.
class PoeWindow {
 public:
  PoeWindow(std::size_t window, Eigen::Index n, Eigen::Index m);

  struct Extremes {
    double alpha = 0.0;
    double gamma = 0.0;
  };

  Extremes update(const Vector& x, const Vector& u);

  [[nodiscard]] const Matrix& moment() const { return moment_; }
  [[nodiscard]] Extremes extremes() const { return extremes_; }
  [[nodiscard]] bool full() const { return history_.size() == window_; }
  [[nodiscard]] std::size_t window() const { return window_; }

 private:
  std::size_t window_;
  Eigen::Index n_;
  Eigen::Index m_;
  std::deque<Vector> history_;
  Matrix moment_;
  Extremes extremes_;
};

struct Excitation {
  enum class Kind { None, UniformDither, GaussianDither, Prbs };
  Kind kind = Kind::None;
  /// Half-width for uniform, standard deviation for Gaussian, level for PRBS.
  double amplitude = 0.0;

  [[nodiscard]] Vector sample(Eigen::Index m, RandomStream& rng) const;
};

struct NominalPolicy {
  enum class Kind { Zero, Constant, Feedback };
  Kind kind = Kind::Zero;
  Vector value;  ///< Constant
  Matrix K;      ///< Feedback, u = K x

  /// Policy output clipped to U.
  [[nodiscard]] Vector evaluate(const Vector& x, const InputSet& input_set) const;
};

/// Everything that defines one closed-loop experiment apart from its seed.
struct Scenario {
  LtiModel model;
  NoiseSpec noise;
  Vector x0;
  ConfidenceConfig confidence;
  SafetySpec safety;
  NominalPolicy nominal;
  Excitation excitation;
  bool noise_only_switch = false;
  double noise_only_threshold = 1e-6;
  /// Filter with the true model and no model-error tightening.
  bool known_model = false;
  std::size_t poe_window = 0;  ///< 0 selects 50 (n + m)
  std::size_t horizon = 0;

  [[nodiscard]] std::size_t effective_poe_window() const;
};

struct TraceRow {
  std::size_t k = 0;
  Vector x;
  Vector u_nominal;
  Vector u_applied;
  bool safe = true;       ///< H[k] x[k] <= h[k]
  bool next_safe = true;  ///< H[k+1] x[k+1] <= h[k+1]
  bool feasible = true;
  StepDiagnostics diagnostics;
  double distance = 0.0;
  double max_violation = 0.0;  ///< phase-one violation on infeasible steps
  double alpha_hat = 0.0;
  double gamma_hat = 0.0;
  /// Weighted estimation error and beta_k(delta / n) before absorbing step k.
  double weighted_error = 0.0;
  double beta_coverage = 0.0;
  [[nodiscard]] bool coverage() const { return weighted_error <= beta_coverage; }
};

struct RunTrace {
  std::uint64_t seed = 0;
  std::string config_digest;
  std::vector<TraceRow> rows;
  /// Coverage of the confidence sets after all `horizon` transitions.
  double final_weighted_error = 0.0;
  double final_beta_coverage = 0.0;
  double final_min_gram_eigenvalue = 0.0;
  [[nodiscard]] bool final_coverage() const { return final_weighted_error <= final_beta_coverage; }
};

RunTrace run_closed_loop(const Scenario& scenario, std::uint64_t seed,
                         const std::string& config_digest = {});

/// Column names of the trace CSV, in order, for the given dimensions.
std::vector<std::string> trace_columns(Eigen::Index n, Eigen::Index m);
/// Writes "# seed=..,config_digest=.." then the header and one row per step.
void write_trace_csv(std::ostream& os, const RunTrace& trace, Eigen::Index n, Eigen::Index m);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

struct MonteCarloSummary {
  std::size_t runs = 0;
  std::size_t horizon = 0;
  std::size_t feasible_steps = 0;
  std::size_t infeasible_steps = 0;
  /// next state safe, among feasible steps
  BinomialSummary step_safety;
  /// coverage after `horizon` transitions, over runs
  BinomialSummary coverage;
  /// runs in which every feasible step led to a safe state
  BinomialSummary trajectory_safety;
  BinomialSummary infeasibility;
  std::vector<double> mean_model_term;
  std::vector<double> mean_e_bar_max;
  std::vector<double> step_violation_frequency;
  double min_final_alpha = 0.0;
};

struct MonteCarloResult {
  MonteCarloSummary summary;
  std::vector<RunTrace> traces;  ///< the first `keep_traces` runs
};

/// Run i uses seed mix_seed(base_seed, i); aggregation is in run order so
/// the result does not depend on `threads`.
MonteCarloResult monte_carlo(const Scenario& scenario, std::size_t runs,
                             std::uint64_t base_seed, unsigned threads = 1,
                             std::size_t keep_traces = 0, const std::string& config_digest = {});

}  // namespace safelearn
