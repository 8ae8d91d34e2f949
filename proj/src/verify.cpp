#include "safelearn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace safelearn {

Matrix sample_ball(Eigen::Index dim, double radius, std::size_t count, RandomStream& rng,
                   double boundary_fraction) {
  Matrix out(dim, static_cast<Eigen::Index>(count));
  const auto on_sphere = static_cast<std::size_t>(boundary_fraction * static_cast<double>(count));
  for (std::size_t i = 0; i < count; ++i) {
    Vector d = rng.normal_vector(dim);
    const double norm = d.norm();
    if (norm == 0.0) {
      d = Vector::Unit(dim, 0);
    } else {
      d /= norm;
    }
    const double scale =
        i < on_sphere ? radius : radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    out.col(static_cast<Eigen::Index>(i)) = scale * d;
  }
  return out;
}

Vector sampled_disturbance_bound(const Matrix& H, const Matrix& v_samples,
                                 const Matrix& w_samples) {
  if (H.rows() == 0) return Vector(0);
  return (H * v_samples).rowwise().maxCoeff() + (H * w_samples).rowwise().maxCoeff();
}

Vector sampled_worst_rows(const TightenedProgram& prog, const Vector& u,
                          const Vector& disturbance_bound) {
  return prog.H_next * (prog.model.A * prog.x + prog.model.B * u) + disturbance_bound;
}

namespace {

struct RandomInstance {
  TightenedProgram prog;
  ConfidenceConfig cfg;
  Vector u_interior;
  double beta = 0.0;
  double zeta = 0.0;
};

RandomInstance random_instance(RandomStream& rng) {
  const auto n = static_cast<Eigen::Index>(1 + (rng.uniform() * 3.0));
  const auto m = static_cast<Eigen::Index>(1 + (rng.uniform() * 3.0));
  const auto p = static_cast<Eigen::Index>(1 + (rng.uniform() * 4.0));

  ConfidenceConfig cfg;
  cfg.n = n;
  cfg.m = m;
  cfg.r = rng.uniform(0.001, 0.05);
  cfg.s = 1.0;
  cfg.delta = rng.uniform(0.05, 0.5);

  Matrix A(n, n), B(n, m), H(p, n);
  for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = 0.5 * rng.normal();
  for (Eigen::Index i = 0; i < B.size(); ++i) B(i) = rng.normal();
  for (Eigen::Index i = 0; i < H.size(); ++i) H(i) = rng.normal();
  const Vector x = rng.normal_vector(n);
  const InputSet U = InputSet::box(Vector::Constant(m, -1.0), Vector::Constant(m, 1.0));
  const Vector u0 = rng.uniform_vector(m, -1.0, 1.0);
  const double zeta_val = rng.uniform(0.05, 1.0);
  const double beta_val = rng.uniform(0.1, 2.0);

  // Start from zero tightening to learn e_bar, then place h so u0 is feasible.
  const LtiModel model(A, B);
  TightenedProgram probe = build_tightened_program(model, x, H, Vector::Zero(p), cfg, beta_val,
                                                   zeta_val, U, Vector::Zero(m));
  Vector h = H * (A * x + B * u0) + probe.e_bar;
  for (Eigen::Index i = 0; i < p; ++i) h(i) += rng.uniform(0.0, 0.5);
  const Vector target = rng.uniform_vector(m, -3.0, 3.0);
  return {build_tightened_program(model, x, H, h, cfg, beta_val, zeta_val, U, target), cfg, u0,
          beta_val, zeta_val};
}

}  // namespace

EquivalenceReport sampled_equivalence_check(std::size_t instances, std::size_t samples,
                                            std::uint64_t seed, double tolerance,
                                            double outside_offset) {
  RandomStream rng(seed);
  EquivalenceReport report;
  for (std::size_t t = 0; t < instances; ++t) {
    const RandomInstance inst = random_instance(rng);
    const TightenedProgram& prog = inst.prog;
    const Eigen::Index n = prog.model.n();
    const double rho_v = model_ball_radius(inst.cfg, inst.beta, inst.zeta);
    const double rho_w = noise_ball_radius(inst.cfg);
    const Vector bound = sampled_disturbance_bound(prog.H_next, sample_ball(n, rho_v, samples, rng),
                                                   sample_ball(n, rho_w, samples, rng));
    ++report.instances;

    std::vector<Vector> feasible{inst.u_interior};
    const FilterResult projected = solve_projection(prog);
    if (projected.feasible()) feasible.push_back(*projected.u);
    for (const Vector& u : feasible) {
      ++report.feasible_points;
      const Vector excess = sampled_worst_rows(prog, u, bound) - prog.h_next;
      const double worst = excess.maxCoeff();
      report.worst_excess = std::max(report.worst_excess, worst);
      if (worst > tolerance) ++report.violations;
    }

    // Step just past the boundary of one tightened row.
    const Halfspaces rows = prog.stacked_constraints();
    Eigen::Index row = 0;
    double best_norm = -1.0;
    for (Eigen::Index i = 0; i < prog.state_rows(); ++i) {
      const double nrm = rows.G.row(i).norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        row = i;
      }
    }
    if (best_norm <= 1e-9) continue;
    const Vector a = rows.G.row(row).transpose();
    const Vector on_boundary =
        inst.u_interior + ((rows.g(row) - a.dot(inst.u_interior)) / a.squaredNorm()) * a;
    const Vector outside = on_boundary + outside_offset * a.normalized();
    ++report.outside_tested;
    const Vector excess = sampled_worst_rows(prog, outside, bound) - prog.h_next;
    if (excess.maxCoeff() > 0.0) ++report.outside_detected;
  }
  return report;
}

double reference_rate(std::size_t k) {
  if (k < 2) return 0.0;
  const double kk = static_cast<double>(k);
  return std::sqrt(std::log(kk) / kk);
}

DecayAnalysis analyze_decay(const std::vector<double>& tau) {
  DecayAnalysis out;
  out.mid_bound = 2.0 * reference_rate(10000) / reference_rate(100);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 2; k < tau.size(); ++k) {
    const double g = reference_rate(k);
    num += tau[k] * g;
    den += g * g;
  }
  if (den > 0.0) out.fit_c = num / den;
  if (tau.size() > 100 && tau[100] > 0.0) {
    if (tau.size() > 10000) out.mid_ratio = tau[10000] / tau[100];
    if (tau.size() > 100000) out.long_ratio = tau[100000] / tau[100];
  }
  return out;
}

std::vector<SuiteResult> run_verification(const ExperimentConfig& cfg) {
  const Scenario& sc = cfg.scenario;
  const MonteCarloResult mc =
      monte_carlo(sc, cfg.run.runs, cfg.run.seed, cfg.run.threads, 0, config_digest(cfg));
  const MonteCarloSummary& s = mc.summary;
  const double target = 1.0 - sc.confidence.delta;

  std::vector<SuiteResult> out;
  out.push_back({"confidence_coverage", s.coverage.frequency, s.coverage.lower, target,
                 s.coverage.lower >= target,
                 std::to_string(s.coverage.successes) + "/" + std::to_string(s.coverage.trials) +
                     " runs covered after " + std::to_string(s.horizon) + " steps"});
  out.push_back({"per_step_safety", s.step_safety.frequency, s.step_safety.lower, target,
                 s.step_safety.trials > 0 && s.step_safety.lower >= target,
                 std::to_string(s.step_safety.successes) + "/" +
                     std::to_string(s.step_safety.trials) + " feasible steps safe; infeasible rate " +
                     format_double(s.infeasibility.frequency)});
  const EquivalenceReport eq = sampled_equivalence_check(
      cfg.verify.equivalence_instances, cfg.verify.equivalence_samples, mix_seed(cfg.run.seed, 7));
  out.push_back({"robust_equivalence", eq.detection_rate(), eq.detection_rate(), 0.95, eq.pass(),
                 std::to_string(eq.violations) + " sampled violations over " +
                     std::to_string(eq.feasible_points) + " feasible points; " +
                     std::to_string(eq.outside_detected) + "/" +
                     std::to_string(eq.outside_tested) + " outside points detected"});
  return out;
}

}  // namespace safelearn
