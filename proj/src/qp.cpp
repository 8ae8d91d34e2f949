#include "safelearn/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace safelearn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DualSolve {
  enum class Outcome { Optimal, Infeasible };
  Outcome outcome = Outcome::Optimal;
  Vector u;
  Vector multipliers;
  Vector farkas_ray;
  int iterations = 0;
};

// Goldfarb-Idnani for min 1/2||u - target||^2 s.t. G u <= g. Rows with a zero
// normal are handled by the caller.
DualSolve solve_dual(const Vector& target, const Matrix& G, const Vector& g,
                     const Vector& row_norms, const ProjectionOptions& opt) {
  const Eigen::Index m = target.size();
  const Eigen::Index p = G.rows();

  DualSolve out;
  out.u = target;
  out.multipliers = Vector::Zero(p);

  std::vector<Eigen::Index> active;
  Vector lambda_active;  // multipliers of the active rows, same order

  auto violation = [&](Eigen::Index i, const Vector& u) {
    return (G.row(i).dot(u) - g(i)) / row_norms(i);
  };

  while (true) {
    if (++out.iterations > opt.max_iterations) {
      throw QpConvergenceError("projection did not converge within " +
                               std::to_string(opt.max_iterations) + " iterations");
    }

    Eigen::Index add = -1;
    double worst = opt.feasibility_tol;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (std::find(active.begin(), active.end(), i) != active.end()) continue;
      const double s = violation(i, out.u);
      if (s > worst) {
        worst = s;
        add = i;
      }
    }
    if (add < 0) break;

    const Vector n_add = G.row(add).transpose();
    double lambda_add = 0.0;

    while (true) {
      if (++out.iterations > opt.max_iterations) {
        throw QpConvergenceError("projection did not converge within " +
                                 std::to_string(opt.max_iterations) + " iterations");
      }
      const Eigen::Index q = static_cast<Eigen::Index>(active.size());
      Matrix N(m, q);
      for (Eigen::Index j = 0; j < q; ++j) N.col(j) = G.row(active[j]).transpose();

      // n_add = N r + z with z orthogonal to the active normals.
      Vector r = Vector::Zero(q);
      if (q > 0) r = N.colPivHouseholderQr().solve(n_add);
      const Vector z = n_add - N * r;

      const double z_sq = z.squaredNorm();
      const double slack = G.row(add).dot(out.u) - g(add);
      const bool z_zero = z_sq <= 1e-24 * std::max(1.0, n_add.squaredNorm());

      const double full_step = z_zero ? kInf : slack / z_sq;
      double partial_step = kInf;
      Eigen::Index drop = -1;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (r(j) > 1e-14) {
          const double t = lambda_active(j) / r(j);
          if (t < partial_step) {
            partial_step = t;
            drop = j;
          }
        }
      }

      if (!std::isfinite(full_step) && !std::isfinite(partial_step)) {
        // n_add is a nonpositive combination of active normals: Farkas ray.
        out.outcome = DualSolve::Outcome::Infeasible;
        out.farkas_ray = Vector::Zero(p);
        out.farkas_ray(add) = 1.0;
        for (Eigen::Index j = 0; j < q; ++j) out.farkas_ray(active[j]) = std::max(0.0, -r(j));
        for (Eigen::Index j = 0; j < q; ++j) out.multipliers(active[j]) = lambda_active(j);
        return out;
      }

      if (partial_step < full_step) {
        const double t = partial_step;
        if (!z_zero) out.u -= t * z;
        lambda_active -= t * r;
        lambda_add += t;
        active.erase(active.begin() + drop);
        Vector shrunk(q - 1);
        for (Eigen::Index j = 0, k = 0; j < q; ++j) {
          if (j != drop) shrunk(k++) = lambda_active(j);
        }
        lambda_active = std::move(shrunk);
        continue;
      }

      const double t = full_step;
      out.u -= t * z;
      if (q > 0) lambda_active -= t * r;
      lambda_add += t;
      active.push_back(add);
      lambda_active.conservativeResize(q + 1);
      lambda_active(q) = lambda_add;
      break;
    }
  }

  for (std::size_t j = 0; j < active.size(); ++j) {
    out.multipliers(active[j]) = std::max(0.0, lambda_active(static_cast<Eigen::Index>(j)));
  }
  return out;
}

}  // namespace

double kkt_residual(const Vector& target, const Matrix& G, const Vector& g, const Vector& u,
                    const Vector& multipliers) {
  double res = 0.0;
  if (G.rows() == 0) return (u - target).lpNorm<Eigen::Infinity>();
  res = std::max(res, (u - target + G.transpose() * multipliers).lpNorm<Eigen::Infinity>());
  const Vector slack = G * u - g;
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    res = std::max(res, std::max(0.0, slack(i)));
    res = std::max(res, std::max(0.0, -multipliers(i)));
    res = std::max(res, std::abs(multipliers(i) * slack(i)));
  }
  return res;
}

ProjectionResult project_onto_polyhedron(const Vector& target, const Matrix& G, const Vector& g,
                                         const ProjectionOptions& options,
                                         const Vector& relax_weights) {
  if (G.cols() != target.size() || G.rows() != g.size()) {
    throw std::invalid_argument("project_onto_polyhedron: shape mismatch");
  }
  if (!all_finite(target) || !all_finite(G) || !all_finite(g)) {
    throw std::invalid_argument("project_onto_polyhedron: non-finite input");
  }

  const Eigen::Index p = G.rows();
  ProjectionResult result;
  result.multipliers = Vector::Zero(p);

  // Zero rows are either vacuous or a one-row infeasibility proof.
  std::vector<Eigen::Index> kept;
  Vector norms(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    norms(i) = G.row(i).norm();
    if (norms(i) > 1e-14) {
      kept.push_back(i);
    } else if (g(i) < -options.feasibility_tol) {
      result.feasible = false;
      result.farkas_ray = Vector::Zero(p);
      result.farkas_ray(i) = 1.0;
    }
  }

  const auto q = static_cast<Eigen::Index>(kept.size());
  Matrix Gk(q, G.cols());
  Vector gk(q);
  Vector nk(q);
  for (Eigen::Index j = 0; j < q; ++j) {
    Gk.row(j) = G.row(kept[j]);
    gk(j) = g(kept[j]);
    nk(j) = norms(kept[j]);
  }

  if (result.farkas_ray.size() == 0) {
    DualSolve sol = solve_dual(target, Gk, gk, nk, options);
    result.iterations = sol.iterations;
    if (sol.outcome == DualSolve::Outcome::Optimal) {
      result.feasible = true;
      result.u = sol.u;
      for (Eigen::Index j = 0; j < q; ++j) result.multipliers(kept[j]) = sol.multipliers(j);
      result.kkt_residual = kkt_residual(target, G, g, result.u, result.multipliers);
      return result;
    }
    result.farkas_ray = Vector::Zero(p);
    for (Eigen::Index j = 0; j < q; ++j) result.farkas_ray(kept[j]) = sol.farkas_ray(j);
  }

  // Phase one: smallest relaxation t such that {G u <= g + t w} is nonempty,
  // where w marks the relaxable rows. Hard rows (w = 0) stay exact so the
  // least-infeasible point honours them.
  Vector weights = relax_weights.size() == 0 ? Vector::Ones(p) : relax_weights;
  if (weights.size() != p) throw std::invalid_argument("project_onto_polyhedron: weight size");

  auto relaxed_solve = [&](double t, Vector* point) {
    for (Eigen::Index i = 0; i < p; ++i) {
      if (norms(i) <= 1e-14 && g(i) + t * weights(i) < -options.feasibility_tol) return false;
    }
    Vector shifted(q);
    for (Eigen::Index j = 0; j < q; ++j) shifted(j) = gk(j) + t * weights(kept[j]);
    DualSolve s = solve_dual(target, Gk, shifted, nk, options);
    if (s.outcome != DualSolve::Outcome::Optimal) return false;
    if (point != nullptr) *point = s.u;
    return true;
  };

  Vector start = target;
  if ((weights.array() == 0.0).any()) {
    if (!relaxed_solve(0.0, nullptr)) {
      // Hard rows alone may still be satisfiable; check them in isolation.
      std::vector<Eigen::Index> hard;
      for (Eigen::Index j = 0; j < q; ++j) {
        if (weights(kept[j]) == 0.0) hard.push_back(j);
      }
      Matrix Gh(static_cast<Eigen::Index>(hard.size()), G.cols());
      Vector gh(static_cast<Eigen::Index>(hard.size()));
      Vector nh(static_cast<Eigen::Index>(hard.size()));
      for (std::size_t j = 0; j < hard.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        Gh.row(jj) = Gk.row(hard[j]);
        gh(jj) = gk(hard[j]);
        nh(jj) = nk(hard[j]);
      }
      DualSolve s = solve_dual(target, Gh, gh, nh, options);
      if (s.outcome != DualSolve::Outcome::Optimal) {
        throw std::invalid_argument("project_onto_polyhedron: non-relaxable rows are infeasible");
      }
      start = s.u;
    }
  }

  double lo = 0.0;
  double hi = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    if (weights(i) > 0.0) hi = std::max(hi, (G.row(i).dot(start) - g(i)) / weights(i));
  }
  hi = std::max(hi, 1e-300);
  Vector best = start;
  for (int it = 0; it < options.phase_one_iterations && hi - lo > 1e-13 * std::max(1.0, hi);
       ++it) {
    const double mid = 0.5 * (lo + hi);
    Vector candidate;
    if (relaxed_solve(mid, &candidate)) {
      hi = mid;
      best = candidate;
    } else {
      lo = mid;
    }
  }
  relaxed_solve(hi, &best);
  result.feasible = false;
  result.u = best;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) worst = std::max(worst, G.row(i).dot(best) - g(i));
  result.max_violation = worst;
  return result;
}

bool recession_cone_trivial(const Matrix& G) {
  const Eigen::Index m = G.cols();
  if (m == 0) return true;
  // For each signed axis e, {G d <= 0, e^T d >= 1} must be empty.
  for (Eigen::Index j = 0; j < m; ++j) {
    for (double sign : {1.0, -1.0}) {
      Matrix A(G.rows() + 1, m);
      Vector b = Vector::Zero(G.rows() + 1);
      A.topRows(G.rows()) = G;
      A.row(G.rows()) = Vector::Zero(m).transpose();
      A(G.rows(), j) = -sign;
      b(G.rows()) = -1.0;
      ProjectionOptions opt;
      opt.phase_one_iterations = 0;
      if (project_onto_polyhedron(Vector::Zero(m), A, b, opt).feasible) return false;
    }
  }
  return true;
}

}  // namespace safelearn
