#pragma once

#include "safelearn/core_types.hpp"

#include <stdexcept>

namespace safelearn {

/// The active-set iteration did not terminate within its cap. Distinct from
/// a proven-infeasible problem.
class QpConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProjectionOptions {
  int max_iterations = 500;
  /// Constraint violations below this (scaled by row norm) count as satisfied.
  double feasibility_tol = 1e-11;
  /// Bisection steps used to locate the least-infeasible relaxation.
  int phase_one_iterations = 200;
};

struct ProjectionResult {
  bool feasible = false;
  Vector u;            ///< minimizer, or least-infeasible point when infeasible
  Vector multipliers;  ///< one per row of G (zero for inactive rows)
  double kkt_residual = 0.0;
  int iterations = 0;
  /// Farkas ray y >= 0 with G^T y = 0 and g^T y < 0 (infeasible case only).
  Vector farkas_ray;
  /// max_i (G_i u - g_i) at the least-infeasible point.
  double max_violation = 0.0;
};

/// Minimizes 1/2 ||u - target||^2 subject to G u <= g with a dual active-set
/// (Goldfarb-Idnani) iteration specialised to an identity Hessian. Throws
/// QpConvergenceError if the iteration cap is exhausted.
///
/// When the rows are inconsistent the result carries a Farkas ray and the
/// least-infeasible point: the projection onto {G u <= g + t* w} for the
/// smallest such t*. `relax_weights` (default all ones) picks w; rows with
/// weight zero are never relaxed.
ProjectionResult project_onto_polyhedron(const Vector& target, const Matrix& G, const Vector& g,
                                         const ProjectionOptions& options = {},
                                         const Vector& relax_weights = Vector());

/// Max over KKT conditions: stationarity, primal and dual feasibility and
/// complementary slackness.
double kkt_residual(const Vector& target, const Matrix& G, const Vector& g, const Vector& u,
                    const Vector& multipliers);

/// True iff {d : G d <= 0} = {0}, i.e. every nonempty {G u <= g} is bounded.
bool recession_cone_trivial(const Matrix& G);

}  // namespace safelearn
