#include "safelearn/core_types.hpp"

#include "safelearn/qp.hpp"

#include <cmath>
#include <limits>

namespace safelearn {

bool all_finite(const Matrix& M) { return M.allFinite(); }

LtiModel::LtiModel(Matrix a, Matrix b) : A(std::move(a)), B(std::move(b)) {
  if (A.rows() < 1 || A.rows() != A.cols()) {
    throw std::invalid_argument("LtiModel: A must be square with n >= 1");
  }
  if (B.rows() != A.rows() || B.cols() < 1) {
    throw std::invalid_argument("LtiModel: B must be n x m with m >= 1");
  }
  if (!std::isfinite(frobenius_norm())) {
    throw std::invalid_argument("LtiModel: non-finite entries");
  }
}

Matrix LtiModel::stacked() const {
  Matrix AB(A.rows(), A.cols() + B.cols());
  AB << A, B;
  return AB;
}

double LtiModel::frobenius_norm() const {
  return std::sqrt(A.squaredNorm() + B.squaredNorm());
}

Matrix LtiModel::theta() const { return stacked().transpose(); }

Vector LtiModel::predict(const Vector& x, const Vector& u) const { return A * x + B * u; }

ThetaRow::ThetaRow(Vector values, Eigen::Index n, Eigen::Index m) : values_(std::move(values)) {
  if (values_.size() != n + m) {
    throw std::invalid_argument("ThetaRow: expected length n + m");
  }
}

std::vector<ThetaRow> theta_rows(const LtiModel& model) {
  const Matrix theta = model.theta();
  std::vector<ThetaRow> rows;
  rows.reserve(static_cast<std::size_t>(model.n()));
  for (Eigen::Index i = 0; i < model.n(); ++i) rows.emplace_back(theta.col(i), model.n(), model.m());
  return rows;
}

NoiseSpec::NoiseSpec(Matrix w, double r_bound) : W(std::move(w)), r(r_bound) {
  if (W.rows() != W.cols() || W.rows() < 1) throw std::invalid_argument("NoiseSpec: W must be square");
  if (!W.allFinite() || (W - W.transpose()).norm() > 1e-12 * std::max(1.0, W.norm())) {
    throw std::invalid_argument("NoiseSpec: W must be symmetric");
  }
  if (!(r > 0.0)) throw std::invalid_argument("NoiseSpec: r must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(W, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, W.norm())) {
    throw std::invalid_argument("NoiseSpec: W must be positive semi-definite");
  }
}

double NoiseSpec::max_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(W, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

InputSet InputSet::box(Vector lower, Vector upper) {
  if (lower.size() < 1 || lower.size() != upper.size()) {
    throw std::invalid_argument("InputSet::box: bounds must have equal positive length");
  }
  if (!lower.allFinite() || !upper.allFinite()) {
    throw std::invalid_argument("InputSet::box: bounds must be finite");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("InputSet::box: lower must not exceed upper");
  }
  InputSet s;
  s.kind_ = Kind::Box;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

InputSet InputSet::polytope(std::vector<Vector> vertices, Matrix G, Vector g) {
  if (vertices.empty()) throw std::invalid_argument("InputSet::polytope: no vertices");
  const Eigen::Index m = vertices.front().size();
  if (m < 1 || G.cols() != m || G.rows() != g.size()) {
    throw std::invalid_argument("InputSet::polytope: inconsistent dimensions");
  }
  for (const auto& v : vertices) {
    if (v.size() != m) throw std::invalid_argument("InputSet::polytope: vertex dimension mismatch");
    if (G.rows() > 0 && (G * v - g).maxCoeff() > 1e-9) {
      throw std::invalid_argument("InputSet::polytope: vertex violates the halfspaces");
    }
  }
  if (!recession_cone_trivial(G)) {
    throw std::invalid_argument("InputSet::polytope: halfspace set is unbounded");
  }
  InputSet s;
  s.kind_ = Kind::VertexPolytope;
  s.vertices_ = std::move(vertices);
  s.G_ = std::move(G);
  s.g_ = std::move(g);
  return s;
}

Eigen::Index InputSet::dim() const {
  return kind_ == Kind::Box ? lower_.size() : vertices_.front().size();
}

Halfspaces InputSet::halfspaces() const {
  if (kind_ == Kind::VertexPolytope) return {G_, g_};
  const Eigen::Index m = lower_.size();
  Halfspaces hs{Matrix(2 * m, m), Vector(2 * m)};
  hs.G << Matrix::Identity(m, m), -Matrix::Identity(m, m);
  hs.g << upper_, -lower_;
  return hs;
}

bool InputSet::contains(const Vector& u, double tol) const {
  if (u.size() != dim()) return false;
  const Halfspaces hs = halfspaces();
  return (hs.G * u - hs.g).maxCoeff() <= tol;
}

Vector InputSet::clip(const Vector& u) const {
  if (u.size() != dim()) throw std::invalid_argument("InputSet::clip: dimension mismatch");
  if (kind_ == Kind::Box) return u.cwiseMax(lower_).cwiseMin(upper_);
  const Halfspaces hs = halfspaces();
  const ProjectionResult res = project_onto_polyhedron(u, hs.G, hs.g);
  if (!res.feasible) throw std::logic_error("InputSet::clip: empty polytope");
  return res.u;
}

std::vector<Vector> input_set_vertices(const InputSet& set, std::size_t max_box_dim) {
  if (set.kind() == InputSet::Kind::VertexPolytope) return set.listed_vertices();

  const auto m = static_cast<std::size_t>(set.dim());
  if (m > max_box_dim) {
    throw VertexLimitError("vertex enumeration too large: box of dimension " + std::to_string(m) +
                           " exceeds cap " + std::to_string(max_box_dim));
  }
  const std::size_t count = std::size_t{1} << m;
  std::vector<Vector> corners;
  corners.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    Vector v(static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < m; ++j) {
      const bool high = (idx >> (m - 1 - j)) & 1U;
      const auto jj = static_cast<Eigen::Index>(j);
      v(jj) = high ? set.upper()(jj) : set.lower()(jj);
    }
    corners.push_back(std::move(v));
  }
  return corners;
}

SafetyCheck check_safety(const Matrix& H, const Vector& h, const Vector& x) {
  if (H.rows() != h.size() || H.cols() != x.size()) {
    throw std::invalid_argument("check_safety: shape mismatch");
  }
  if (H.rows() == 0) return {true, -std::numeric_limits<double>::infinity()};
  const double margin = (H * x - h).maxCoeff();
  return {margin <= 0.0, margin};
}

SafetySpec::SafetySpec(std::vector<ConstraintPair> schedule, InputSet input_set)
    : schedule_(std::move(schedule)), input_set_(std::move(input_set)) {
  if (schedule_.empty()) throw std::invalid_argument("SafetySpec: empty schedule");
  const Eigen::Index n = schedule_.front().H.cols();
  for (const auto& pair : schedule_) {
    if (pair.H.rows() != pair.h.size()) {
      throw std::invalid_argument("SafetySpec: H rows must match h entries");
    }
    if (pair.H.cols() != n) throw std::invalid_argument("SafetySpec: H column count varies");
  }
}

const ConstraintPair& SafetySpec::at(std::size_t k) const {
  return schedule_[std::min(k, schedule_.size() - 1)];
}

}  // namespace safelearn
