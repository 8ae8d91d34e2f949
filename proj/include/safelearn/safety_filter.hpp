#pragma once

#include "safelearn/confidence.hpp"
#include "safelearn/core_types.hpp"
#include "safelearn/estimator.hpp"
#include "safelearn/qp.hpp"

#include <optional>

namespace safelearn {

/// Single linear inequality a^T u <= c.
struct Halfspace {
  Vector a;
  double c = 0.0;
};

/// sqrt(radius) * ||W^{-1/2} b||_2: the worst case of b^T w over the
/// ellipsoid {w : w^T W w <= radius}. Throws if W is not positive definite.
double robust_tightening_amount(const Vector& b, const Matrix& W, double radius);

/**
 * Robust counterpart of a halfspace with an additive ellipsoidal disturbance:
 *
 *   {u : a^T u + b^T w <= c  for all w with w^T W w <= radius}
 *     = {u : a^T u <= c - sqrt(radius) * ||W^{-1/2} b||_2}.
 */
Halfspace robust_halfspace_tighten(const Halfspace& hs, const Vector& b, const Matrix& W,
                                   double radius);

struct TightenedProgram {
  LtiModel model;
  Vector x;
  Matrix H_next;
  Vector h_next;
  Vector e_bar;
  /// Per-row model-uncertainty share of e_bar: zeta n beta ||H_i||.
  Vector e_model;
  /// Per-row noise share of e_bar: sqrt(2 r n / delta) ||H_i||.
  Vector e_noise;
  InputSet input_set;
  Vector u_nominal;

  /// Rows of the finite QP in u: the tightened state rows followed by the
  /// input-set halfspaces.
  [[nodiscard]] Halfspaces stacked_constraints() const;
  [[nodiscard]] Eigen::Index state_rows() const { return H_next.rows(); }
};

/// Radius of the model-error ball, zeta * n * beta(delta / 2n).
double model_ball_radius(const ConfidenceConfig& cfg, double beta_val, double zeta_val);
/// Radius of the noise ball, sqrt(2 r n / delta).
double noise_ball_radius(const ConfidenceConfig& cfg);

/// Applies the halfspace tightening twice per row, first against the model
/// error ball and then against the noise ball, both with W = I and b = H_i^T.
TightenedProgram build_tightened_program(const LtiModel& model_est, const Vector& x,
                                         const Matrix& H_next, const Vector& h_next,
                                         const ConfidenceConfig& cfg, double beta_val,
                                         double zeta_val, const InputSet& input_set,
                                         const Vector& u_nominal);

/// Certificate attached to an infeasible result.
struct Infeasibility {
  /// y >= 0 with y^T G = 0 and y^T g < 0 over the stacked constraints.
  Vector farkas_ray;
  /// Input in U closest to u_nominal among those minimizing the largest
  /// violation of the tightened rows.
  Vector least_infeasible_point;
  double max_violation = 0.0;
};

struct FilterResult {
  enum class Status { Feasible, Infeasible };

  Status status = Status::Infeasible;
  std::optional<Vector> u;
  double distance = 0.0;
  double kkt_residual = 0.0;
  Vector active_tightening;
  std::optional<Infeasibility> certificate;

  [[nodiscard]] bool feasible() const { return status == Status::Feasible; }
};

/// Minimizes 1/2||u - u_nominal||^2 over U subject to the tightened rows.
FilterResult solve_projection(const TightenedProgram& prog, const ProjectionOptions& opt = {});

struct FilterOptions {
  /// Swap to the noise-only tightening once the model share drops below
  /// `noise_only_threshold` times the noise share.
  bool noise_only_switch = false;
  double noise_only_threshold = 1e-6;
  /// Replace the estimate with a known model and drop the model share.
  std::optional<LtiModel> known_model;
};

struct StepDiagnostics {
  double beta = 0.0;  ///< beta_k(delta / 2n)
  double zeta = 0.0;
  double model_term = 0.0;  ///< zeta n beta
  double noise_term = 0.0;  ///< sqrt(2 r n / delta)
  double e_bar_max = 0.0;
  /// ||V^{-1/2}[x; u]|| for the input actually returned; never exceeds zeta.
  double zeta_posterior = 0.0;
  bool noise_only = false;
};

struct SafeStep {
  FilterResult result;
  StepDiagnostics diagnostics;
};

/// One filtering step at time k: uses the estimate after k transitions and
/// the constraint pair for time k + 1.
SafeStep safe_step(const Estimator& estimator, const ConfidenceConfig& cfg, const Vector& x,
                   const Vector& u_nominal, const SafetySpec& spec, std::size_t k,
                   const FilterOptions& options = {});

}  // namespace safelearn
