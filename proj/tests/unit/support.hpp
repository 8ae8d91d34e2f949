#pragma once

#include "safelearn/core_types.hpp"
#include "safelearn/random.hpp"

#include <algorithm>
#include <cmath>

namespace safelearn::test {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, RandomStream& rng,
                            double scale = 1.0) {
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) M(i) = scale * rng.normal();
  return M;
}

inline Matrix random_spd(Eigen::Index n, RandomStream& rng) {
  const Matrix G = random_matrix(n, n, rng);
  return G * G.transpose() + 0.5 * Matrix::Identity(n, n);
}

inline double rel_fro(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace safelearn::test

#include "safelearn/qp.hpp"

#include <limits>

namespace safelearn::test {

/// Smallest distance from `target` to a point of the grid with spacing `step`
/// over the box [lo, hi] (m <= 3) that satisfies G u <= g. Infinity when no
/// grid point is feasible.
inline double grid_min_distance(const Vector& target, const Matrix& G, const Vector& g,
                                const Vector& lo, const Vector& hi, double step) {
  const Eigen::Index m = lo.size();
  Eigen::Index counts[3] = {1, 1, 1};
  for (Eigen::Index j = 0; j < m; ++j) {
    counts[j] = static_cast<Eigen::Index>(std::floor((hi(j) - lo(j)) / step + 1e-9)) + 1;
  }
  double best = std::numeric_limits<double>::infinity();
  Vector u(m);
  for (Eigen::Index a = 0; a < counts[0]; ++a) {
    u(0) = lo(0) + static_cast<double>(a) * step;
    for (Eigen::Index b = 0; b < counts[1]; ++b) {
      if (m > 1) u(1) = lo(1) + static_cast<double>(b) * step;
      for (Eigen::Index c = 0; c < counts[2]; ++c) {
        if (m > 2) u(2) = lo(2) + static_cast<double>(c) * step;
        const double d = (u - target).squaredNorm();
        if (d >= best) continue;
        if (((G * u) - g).maxCoeff() <= 1e-12) best = d;
      }
    }
  }
  return std::sqrt(best);
}

/// Random projection onto a box of half-width `half` intersected with
/// `rows` halfspaces that keep a random interior point strictly feasible.
struct ProjectionInstance {
  Vector target;
  Matrix G;  ///< random rows followed by the box rows
  Vector g;
  Vector lo;
  Vector hi;
};

inline ProjectionInstance random_projection_instance(Eigen::Index m, Eigen::Index rows,
                                                     double half, RandomStream& rng) {
  ProjectionInstance inst;
  inst.lo = Vector::Constant(m, -half);
  inst.hi = Vector::Constant(m, half);
  const Vector u0 = rng.uniform_vector(m, -0.5 * half, 0.5 * half);
  Matrix G(rows + 2 * m, m);
  Vector g(rows + 2 * m);
  for (Eigen::Index i = 0; i < rows; ++i) {
    Vector a = rng.normal_vector(m);
    a /= a.norm();
    G.row(i) = a.transpose();
    g(i) = a.dot(u0) + rng.uniform(0.05, 0.5) * half;
  }
  G.bottomRows(2 * m) << Matrix::Identity(m, m), -Matrix::Identity(m, m);
  g.tail(2 * m) = Vector::Constant(2 * m, half);
  inst.G = G;
  inst.g = g;
  inst.target = rng.uniform_vector(m, -3.0 * half, 3.0 * half);
  return inst;
}

/// Half-width keeping a 1e-3 grid over the box to a few million points.
inline double grid_box_half_width(Eigen::Index m) { return m == 3 ? 0.075 : 1.0; }

}  // namespace safelearn::test
