#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace safelearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a box input set would need more than the configured number of
/// corners to be enumerated.
class VertexLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Discrete-time LTI model x[k+1] = A x[k] + B u[k] (+ noise).
struct LtiModel {
  Matrix A;
  Matrix B;

  LtiModel() = default;
  LtiModel(Matrix a, Matrix b);

  [[nodiscard]] Eigen::Index n() const { return A.rows(); }
  [[nodiscard]] Eigen::Index m() const { return B.cols(); }

  /// The stacked matrix [A B].
  [[nodiscard]] Matrix stacked() const;
  /// Frobenius norm of [A B].
  [[nodiscard]] double frobenius_norm() const;
  /// theta_i = [A_i^T; B_i^T], one column per state coordinate.
  [[nodiscard]] Matrix theta() const;
  [[nodiscard]] Vector predict(const Vector& x, const Vector& u) const;
};

/// Stacked i-th rows of A and B.
class ThetaRow {
 public:
  ThetaRow(Vector values, Eigen::Index n, Eigen::Index m);
  [[nodiscard]] const Vector& values() const { return values_; }

 private:
  Vector values_;
};

std::vector<ThetaRow> theta_rows(const LtiModel& model);

/// Process noise description. W is only known to the simulator; r is the
/// bound W <= r I that the learner is allowed to use.
struct NoiseSpec {
  Matrix W;
  double r = 0.0;

  NoiseSpec() = default;
  NoiseSpec(Matrix w, double r_bound);

  [[nodiscard]] double max_eigenvalue() const;
};

/// Polyhedral description {u : G u <= g}.
struct Halfspaces {
  Matrix G;
  Vector g;
};

/// Bounded admissible input set. Either an axis-aligned box or a polytope
/// given by both its vertices and its halfspaces.
class InputSet {
 public:
  enum class Kind { Box, VertexPolytope };

  static constexpr std::size_t kDefaultVertexCap = 20;

  static InputSet box(Vector lower, Vector upper);
  static InputSet polytope(std::vector<Vector> vertices, Matrix G, Vector g);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] Eigen::Index dim() const;

  [[nodiscard]] const Vector& lower() const { return lower_; }
  [[nodiscard]] const Vector& upper() const { return upper_; }
  [[nodiscard]] const std::vector<Vector>& listed_vertices() const { return vertices_; }

  [[nodiscard]] Halfspaces halfspaces() const;
  [[nodiscard]] bool contains(const Vector& u, double tol = 1e-9) const;
  /// Euclidean projection onto the set.
  [[nodiscard]] Vector clip(const Vector& u) const;

 private:
  InputSet() = default;

  Kind kind_ = Kind::Box;
  Vector lower_;
  Vector upper_;
  std::vector<Vector> vertices_;
  Matrix G_;
  Vector g_;
};

/// All vertices of the set. For a box, corners are listed with the first
/// coordinate most significant (lower before upper).
std::vector<Vector> input_set_vertices(const InputSet& set,
                                       std::size_t max_box_dim = InputSet::kDefaultVertexCap);

struct SafetyCheck {
  bool safe = true;
  /// max_i (H_i x - h_i); -inf when there are no rows.
  double margin = 0.0;
};

SafetyCheck check_safety(const Matrix& H, const Vector& h, const Vector& x);

/// One time step of linear state constraints H x <= h.
struct ConstraintPair {
  Matrix H;
  Vector h;
};

/// Time-varying constraint schedule plus the input set. Indices past the end
/// of the schedule reuse the last pair.
class SafetySpec {
 public:
  SafetySpec(std::vector<ConstraintPair> schedule, InputSet input_set);

  [[nodiscard]] const ConstraintPair& at(std::size_t k) const;
  [[nodiscard]] const InputSet& input_set() const { return input_set_; }
  [[nodiscard]] const std::vector<ConstraintPair>& schedule() const { return schedule_; }
  [[nodiscard]] Eigen::Index state_dim() const { return schedule_.front().H.cols(); }

 private:
  std::vector<ConstraintPair> schedule_;
  InputSet input_set_;
};

bool all_finite(const Matrix& M);

}  // namespace safelearn
