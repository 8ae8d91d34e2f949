#include "safelearn/sim.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace safelearn {

Matrix noise_square_root(const Matrix& W) {
  Eigen::LLT<Matrix> llt(W);
  if (llt.info() == Eigen::Success) {
    const Matrix L = llt.matrixL();
    if (L.diagonal().minCoeff() > 1e-12 * std::sqrt(std::max(1.0, W.diagonal().maxCoeff()))) {
      return L;
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(W);
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

Plant::Plant(LtiModel model, NoiseSpec noise, Vector x0, std::uint64_t seed)
    : model_(std::move(model)),
      noise_(std::move(noise)),
      noise_factor_(noise_square_root(noise_.W)),
      x_(std::move(x0)),
      rng_(seed) {
  if (x_.size() != model_.n() || noise_.W.rows() != model_.n()) {
    throw std::invalid_argument("Plant: dimension mismatch");
  }
}

Vector Plant::sample_noise() { return noise_factor_ * rng_.normal_vector(model_.n()); }

const Vector& Plant::step(const Vector& u) {
  if (u.size() != model_.m()) throw std::invalid_argument("Plant::step: input dimension");
  if (!u.allFinite()) throw std::invalid_argument("Plant::step: non-finite input");
  Vector next = model_.A * x_ + model_.B * u + sample_noise();
  x_ = std::move(next);
  ++k_;
  return x_;
}

PoeWindow::PoeWindow(std::size_t window, Eigen::Index n, Eigen::Index m)
    : window_(window), n_(n), m_(m), moment_(Matrix::Zero(n + m, n + m)) {
  if (window == 0) throw std::invalid_argument("PoeWindow: window must be positive");
}

PoeWindow::Extremes PoeWindow::update(const Vector& x, const Vector& u) {
  Vector z(n_ + m_);
  z << x, u;
  history_.push_back(std::move(z));
  if (history_.size() > window_) history_.pop_front();
  // Recomputed from the buffer so long runs do not accumulate drift.
  moment_.setZero();
  for (const Vector& h : history_) moment_.noalias() += h * h.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(moment_, Eigen::EigenvaluesOnly);
  extremes_ = {std::max(0.0, eig.eigenvalues().minCoeff()), eig.eigenvalues().maxCoeff()};
  return extremes_;
}

Vector Excitation::sample(Eigen::Index m, RandomStream& rng) const {
  if (amplitude < 0.0) throw std::invalid_argument("Excitation: negative amplitude");
  switch (kind) {
    case Kind::None:
      return Vector::Zero(m);
    case Kind::UniformDither:
      return rng.uniform_vector(m, -amplitude, amplitude);
    case Kind::GaussianDither:
      return amplitude * rng.normal_vector(m);
    case Kind::Prbs: {
      Vector v(m);
      for (Eigen::Index i = 0; i < m; ++i) v(i) = rng.coin() ? amplitude : -amplitude;
      return v;
    }
  }
  return Vector::Zero(m);
}

Vector NominalPolicy::evaluate(const Vector& x, const InputSet& input_set) const {
  const Eigen::Index m = input_set.dim();
  switch (kind) {
    case Kind::Zero:
      return input_set.clip(Vector::Zero(m));
    case Kind::Constant:
      return input_set.clip(value);
    case Kind::Feedback:
      return input_set.clip(K * x);
  }
  return Vector::Zero(m);
}

std::size_t Scenario::effective_poe_window() const {
  return poe_window > 0 ? poe_window : static_cast<std::size_t>(50 * (model.n() + model.m()));
}

RunTrace run_closed_loop(const Scenario& sc, std::uint64_t seed, const std::string& config_digest) {
  const Eigen::Index n = sc.model.n();
  const Eigen::Index m = sc.model.m();

  RunTrace trace;
  trace.seed = seed;
  trace.config_digest = config_digest;
  trace.rows.reserve(sc.horizon);

  Plant plant(sc.model, sc.noise, sc.x0, mix_seed(seed, 0));
  RandomStream excitation_rng(mix_seed(seed, 1));
  Estimator est(n, m, sc.confidence.lambda);
  PoeWindow poe(sc.effective_poe_window(), n, m);

  FilterOptions fopt;
  fopt.noise_only_switch = sc.noise_only_switch;
  fopt.noise_only_threshold = sc.noise_only_threshold;
  if (sc.known_model) fopt.known_model = sc.model;

  const std::vector<ThetaRow> truth = theta_rows(sc.model);
  const double coverage_delta = sc.confidence.delta / static_cast<double>(n);
  const InputSet& U = sc.safety.input_set();

  for (std::size_t k = 0; k < sc.horizon; ++k) {
    TraceRow row;
    row.k = k;
    row.x = plant.state();
    const Vector nominal = sc.nominal.evaluate(row.x, U);
    row.u_nominal = U.clip(nominal + sc.excitation.sample(m, excitation_rng));

    const ConstraintPair& now = sc.safety.at(k);
    row.safe = check_safety(now.H, now.h, row.x).safe;

    row.weighted_error = max_weighted_error(truth, est.theta_hat(), est.gram_factor());
    row.beta_coverage = beta(sc.confidence, est.logdet_gram(), coverage_delta);

    SafeStep step = safe_step(est, sc.confidence, row.x, row.u_nominal, sc.safety, k, fopt);
    row.feasible = step.result.feasible();
    row.diagnostics = step.diagnostics;
    row.distance = step.result.distance;
    if (row.feasible) {
      row.u_applied = *step.result.u;
    } else {
      row.u_applied = step.result.certificate->least_infeasible_point;
      row.max_violation = step.result.certificate->max_violation;
    }

    const Vector& next = plant.step(row.u_applied);
    const ConstraintPair& later = sc.safety.at(k + 1);
    row.next_safe = check_safety(later.H, later.h, next).safe;

    est.update(row.x, row.u_applied, next);
    const PoeWindow::Extremes ex = poe.update(row.x, row.u_applied);
    row.alpha_hat = ex.alpha;
    row.gamma_hat = ex.gamma;
    trace.rows.push_back(std::move(row));
  }

  trace.final_weighted_error = max_weighted_error(truth, est.theta_hat(), est.gram_factor());
  trace.final_beta_coverage = beta(sc.confidence, est.logdet_gram(), coverage_delta);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(est.gram(), Eigen::EigenvaluesOnly);
  trace.final_min_gram_eigenvalue = eig.eigenvalues().minCoeff();
  return trace;
}

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::vector<std::string> trace_columns(Eigen::Index n, Eigen::Index m) {
  std::vector<std::string> cols{"k"};
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back("x" + std::to_string(i));
  for (Eigen::Index i = 0; i < m; ++i) cols.push_back("u_nominal" + std::to_string(i));
  for (Eigen::Index i = 0; i < m; ++i) cols.push_back("u" + std::to_string(i));
  for (const char* c : {"safe", "next_safe", "status", "beta", "zeta", "zeta_posterior",
                        "model_term", "noise_term", "e_bar_max", "distance", "max_violation",
                        "alpha_hat", "gamma_hat", "coverage", "weighted_error", "beta_coverage"}) {
    cols.emplace_back(c);
  }
  return cols;
}

void write_trace_csv(std::ostream& os, const RunTrace& trace, Eigen::Index n, Eigen::Index m) {
  os << "# seed=" << trace.seed << ",config_digest=" << trace.config_digest << '\n';
  const auto cols = trace_columns(n, m);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const TraceRow& r : trace.rows) {
    os << r.k;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(r.x(i));
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << format_double(r.u_nominal(i));
    for (Eigen::Index i = 0; i < m; ++i) os << ',' << format_double(r.u_applied(i));
    const StepDiagnostics& d = r.diagnostics;
    os << ',' << int(r.safe) << ',' << int(r.next_safe) << ','
       << (r.feasible ? "feasible" : "infeasible");
    for (double v : {d.beta, d.zeta, d.zeta_posterior, d.model_term, d.noise_term, d.e_bar_max,
                     r.distance, r.max_violation, r.alpha_hat, r.gamma_hat}) {
      os << ',' << format_double(v);
    }
    os << ',' << int(r.coverage()) << ',' << format_double(r.weighted_error) << ','
       << format_double(r.beta_coverage) << '\n';
  }
}

namespace {

struct RunTally {
  std::vector<unsigned char> feasible;
  std::vector<unsigned char> next_safe;
  std::vector<double> model_term;
  std::vector<double> e_bar_max;
  bool final_coverage = false;
  double final_alpha = 0.0;
};

RunTally tally_of(const RunTrace& t) {
  RunTally d;
  d.final_coverage = t.final_coverage();
  d.final_alpha = t.rows.empty() ? 0.0 : t.rows.back().alpha_hat;
  for (const TraceRow& r : t.rows) {
    d.feasible.push_back(r.feasible);
    d.next_safe.push_back(r.next_safe);
    d.model_term.push_back(r.diagnostics.model_term);
    d.e_bar_max.push_back(r.diagnostics.e_bar_max);
  }
  return d;
}

}  // namespace

MonteCarloResult monte_carlo(const Scenario& scenario, std::size_t runs, std::uint64_t base_seed,
                             unsigned threads, std::size_t keep_traces,
                             const std::string& config_digest) {
  if (runs < 1) throw std::invalid_argument("monte_carlo: runs must be >= 1");
  keep_traces = std::min(keep_traces, runs);

  std::vector<RunTally> tallies(runs);
  std::vector<RunTrace> kept(keep_traces);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs) return;
      try {
        RunTrace t = run_closed_loop(scenario, mix_seed(base_seed, i), config_digest);
        tallies[i] = tally_of(t);
        if (i < keep_traces) kept[i] = std::move(t);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = runs;
      }
    }
  };
  const unsigned pool = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(runs)));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < pool; ++t) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
  }
  if (failure) std::rethrow_exception(failure);

  MonteCarloSummary s;
  s.runs = runs;
  s.horizon = scenario.horizon;
  s.mean_model_term.assign(s.horizon, 0.0);
  s.mean_e_bar_max.assign(s.horizon, 0.0);
  std::vector<std::size_t> feasible_at(s.horizon, 0), violated_at(s.horizon, 0);
  std::size_t safe_steps = 0, covered = 0, clean_runs = 0;
  s.min_final_alpha = std::numeric_limits<double>::infinity();

  for (const RunTally& d : tallies) {
    bool clean = true;
    for (std::size_t k = 0; k < s.horizon; ++k) {
      s.mean_model_term[k] += d.model_term[k];
      s.mean_e_bar_max[k] += d.e_bar_max[k];
      if (!d.feasible[k]) {
        ++s.infeasible_steps;
        continue;
      }
      ++s.feasible_steps;
      ++feasible_at[k];
      if (d.next_safe[k]) {
        ++safe_steps;
      } else {
        ++violated_at[k];
        clean = false;
      }
    }
    covered += d.final_coverage;
    clean_runs += clean;
    s.min_final_alpha = std::min(s.min_final_alpha, d.final_alpha);
  }
  const double inv_runs = 1.0 / static_cast<double>(runs);
  s.step_violation_frequency.assign(s.horizon, 0.0);
  for (std::size_t k = 0; k < s.horizon; ++k) {
    s.mean_model_term[k] *= inv_runs;
    s.mean_e_bar_max[k] *= inv_runs;
    if (feasible_at[k] > 0) {
      s.step_violation_frequency[k] =
          static_cast<double>(violated_at[k]) / static_cast<double>(feasible_at[k]);
    }
  }
  s.step_safety = binomial_summary(safe_steps, s.feasible_steps);
  s.coverage = binomial_summary(covered, runs);
  s.trajectory_safety = binomial_summary(clean_runs, runs);
  s.infeasibility = binomial_summary(s.infeasible_steps, s.feasible_steps + s.infeasible_steps);
  return {std::move(s), std::move(kept)};
}

}  // namespace safelearn
