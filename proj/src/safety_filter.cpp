#include "safelearn/safety_filter.hpp"

#include <algorithm>
#include <cmath>

namespace safelearn {

double robust_tightening_amount(const Vector& b, const Matrix& W, double radius) {
  if (W.rows() != W.cols() || W.rows() != b.size()) {
    throw std::invalid_argument("robust_tightening_amount: shape mismatch");
  }
  if (!(radius >= 0.0)) throw std::invalid_argument("robust_tightening_amount: negative radius");
  Eigen::LLT<Matrix> llt(W);
  if (llt.info() != Eigen::Success || !W.isApprox(W.transpose())) {
    throw std::invalid_argument("robust_tightening_amount: W is not positive definite");
  }
  if (radius == 0.0) return 0.0;
  // ||W^{-1/2} b||^2 = b^T W^{-1} b = ||L^{-1} b||^2
  return std::sqrt(radius) * llt.matrixL().solve(b).norm();
}

Halfspace robust_halfspace_tighten(const Halfspace& hs, const Vector& b, const Matrix& W,
                                   double radius) {
  return {hs.a, hs.c - robust_tightening_amount(b, W, radius)};
}

double model_ball_radius(const ConfidenceConfig& cfg, double beta_val, double zeta_val) {
  return zeta_val * static_cast<double>(cfg.n) * beta_val;
}

double noise_ball_radius(const ConfidenceConfig& cfg) {
  return std::sqrt(2.0 * cfg.r * static_cast<double>(cfg.n) / cfg.delta);
}

Halfspaces TightenedProgram::stacked_constraints() const {
  const Halfspaces input = input_set.halfspaces();
  const Eigen::Index p = H_next.rows();
  const Eigen::Index m = input_set.dim();
  Halfspaces out{Matrix(p + input.G.rows(), m), Vector(p + input.G.rows())};
  if (p > 0) {
    out.G.topRows(p) = H_next * model.B;
    out.g.head(p) = h_next - e_bar - H_next * (model.A * x);
  }
  out.G.bottomRows(input.G.rows()) = input.G;
  out.g.tail(input.G.rows()) = input.g;
  return out;
}

TightenedProgram build_tightened_program(const LtiModel& model_est, const Vector& x,
                                         const Matrix& H_next, const Vector& h_next,
                                         const ConfidenceConfig& cfg, double beta_val,
                                         double zeta_val, const InputSet& input_set,
                                         const Vector& u_nominal) {
  const Eigen::Index n = model_est.n();
  if (x.size() != n || H_next.cols() != n || H_next.rows() != h_next.size() ||
      input_set.dim() != model_est.m() || u_nominal.size() != model_est.m()) {
    throw std::invalid_argument("build_tightened_program: shape mismatch");
  }
  if (!(beta_val >= 0.0) || !(zeta_val >= 0.0)) {
    throw std::invalid_argument("build_tightened_program: beta and zeta must be nonnegative");
  }

  const double model_radius = model_ball_radius(cfg, beta_val, zeta_val);
  const double noise_radius = noise_ball_radius(cfg);
  const Matrix identity = Matrix::Identity(n, n);

  const Eigen::Index p = H_next.rows();
  TightenedProgram prog{model_est, x, H_next, h_next, Vector(p), Vector(p), Vector(p),
                        input_set, u_nominal};
  for (Eigen::Index i = 0; i < p; ++i) {
    const Vector b = H_next.row(i).transpose();
    // eliminate the model error v, then the noise w
    prog.e_model(i) = robust_tightening_amount(b, identity, model_radius * model_radius);
    prog.e_noise(i) = robust_tightening_amount(b, identity, noise_radius * noise_radius);
    prog.e_bar(i) = prog.e_model(i) + prog.e_noise(i);
  }
  return prog;
}

FilterResult solve_projection(const TightenedProgram& prog, const ProjectionOptions& opt) {
  const Halfspaces rows = prog.stacked_constraints();
  const Eigen::Index p = prog.state_rows();
  // only the tightened state rows may be relaxed in phase one
  Vector relax = Vector::Zero(rows.G.rows());
  relax.head(p).setOnes();

  const ProjectionResult qp = project_onto_polyhedron(prog.u_nominal, rows.G, rows.g, opt, relax);

  FilterResult out;
  out.active_tightening = prog.e_bar;
  if (qp.feasible) {
    out.status = FilterResult::Status::Feasible;
    out.u = qp.u;
    out.distance = (qp.u - prog.u_nominal).norm();
    out.kkt_residual = qp.kkt_residual;
    return out;
  }
  out.status = FilterResult::Status::Infeasible;
  out.distance = (qp.u - prog.u_nominal).norm();
  out.certificate = Infeasibility{qp.farkas_ray, qp.u, qp.max_violation};
  return out;
}

SafeStep safe_step(const Estimator& estimator, const ConfidenceConfig& cfg, const Vector& x,
                   const Vector& u_nominal, const SafetySpec& spec, std::size_t k,
                   const FilterOptions& options) {
  const ConstraintPair& next = spec.at(k + 1);
  const double n = static_cast<double>(cfg.n);

  StepDiagnostics diag;
  diag.beta = beta(cfg, estimator.logdet_gram(), cfg.delta / (2.0 * n));
  diag.zeta = zeta(estimator.gram_factor(), x, spec.input_set());
  diag.noise_term = noise_ball_radius(cfg);

  const bool known = options.known_model.has_value();
  const LtiModel model = known ? *options.known_model : estimator.model();
  double beta_used = known ? 0.0 : diag.beta;
  diag.model_term = known ? 0.0 : model_ball_radius(cfg, diag.beta, diag.zeta);
  if (options.noise_only_switch && !known &&
      diag.model_term < options.noise_only_threshold * diag.noise_term) {
    beta_used = 0.0;
    diag.noise_only = true;
  }

  const TightenedProgram prog = build_tightened_program(
      model, x, next.H, next.h, cfg, beta_used, diag.zeta, spec.input_set(), u_nominal);
  SafeStep step{solve_projection(prog), diag};
  step.diagnostics.e_bar_max = prog.e_bar.size() > 0 ? prog.e_bar.maxCoeff() : 0.0;

  const Vector& applied =
      step.result.feasible() ? *step.result.u : step.result.certificate->least_infeasible_point;
  Vector z(x.size() + applied.size());
  z << x, applied;
  step.diagnostics.zeta_posterior = weighted_norm_inv(estimator.gram_factor(), z);
  return step;
}

}  // namespace safelearn
