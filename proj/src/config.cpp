#include "safelearn/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace safelearn {

using nlohmann::json;

namespace {

Matrix matrix_from(const json& j, const char* what, Eigen::Index expected_cols = -1) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + ": expected a list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, std::max<Eigen::Index>(expected_cols, 0));
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument(std::string(what) + ": ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return M;
}

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string(what) + ": expected a list");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

json to_json_matrix(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json_vector(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

InputSet input_set_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "box") return InputSet::box(vector_from(j.at("lower"), "lower"), vector_from(j.at("upper"), "upper"));
  if (type == "polytope") {
    std::vector<Vector> vertices;
    for (const json& v : j.at("vertices")) vertices.push_back(vector_from(v, "vertex"));
    const Eigen::Index m = vertices.empty() ? 0 : vertices.front().size();
    return InputSet::polytope(std::move(vertices), matrix_from(j.at("G"), "G", m),
                              vector_from(j.at("g"), "g"));
  }
  throw std::invalid_argument("input_set: unknown type '" + type + "'");
}

json input_set_json(const InputSet& U) {
  if (U.kind() == InputSet::Kind::Box) {
    return {{"type", "box"}, {"lower", to_json_vector(U.lower())}, {"upper", to_json_vector(U.upper())}};
  }
  json vertices = json::array();
  for (const Vector& v : U.listed_vertices()) vertices.push_back(to_json_vector(v));
  const Halfspaces hs = U.halfspaces();
  return {{"type", "polytope"}, {"vertices", vertices}, {"G", to_json_matrix(hs.G)},
          {"g", to_json_vector(hs.g)}};
}

const char* excitation_name(Excitation::Kind k) {
  switch (k) {
    case Excitation::Kind::None: return "none";
    case Excitation::Kind::UniformDither: return "uniform_dither";
    case Excitation::Kind::GaussianDither: return "gaussian_dither";
    case Excitation::Kind::Prbs: return "prbs";
  }
  return "none";
}

Excitation::Kind excitation_kind(const std::string& s) {
  if (s == "none") return Excitation::Kind::None;
  if (s == "uniform_dither") return Excitation::Kind::UniformDither;
  if (s == "gaussian_dither") return Excitation::Kind::GaussianDither;
  if (s == "prbs") return Excitation::Kind::Prbs;
  throw std::invalid_argument("excitation: unknown kind '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config(const json& j, bool check_assumptions) {
  const json& sys = j.at("system");
  LtiModel model(matrix_from(sys.at("A"), "A"), matrix_from(sys.at("B"), "B"));
  const Eigen::Index n = model.n();
  const Eigen::Index m = model.m();

  const json& asm_ = j.at("assumptions");
  ConfidenceConfig conf;
  conf.r = asm_.at("r").get<double>();
  conf.s = asm_.at("s").get<double>();
  conf.lambda = asm_.value("lambda", 1.0);
  conf.n = n;
  conf.m = m;

  const json filter = j.value("filter", json::object());
  conf.delta = filter.value("delta", 0.1);
  conf.strict_state_exponent = filter.value("strict_state_exponent", false);
  conf.validate();

  NoiseSpec noise(matrix_from(sys.at("W"), "W"), conf.r);
  Vector x0 = sys.contains("x0") ? vector_from(sys.at("x0"), "x0") : Vector::Zero(n);

  const json& safety = j.at("safety");
  std::vector<ConstraintPair> schedule;
  if (safety.contains("schedule")) {
    for (const json& pair : safety.at("schedule")) {
      schedule.push_back({matrix_from(pair.at("H"), "H", n), vector_from(pair.at("h"), "h")});
    }
  }
  if (schedule.empty()) schedule.push_back({Matrix(0, n), Vector(0)});
  SafetySpec spec(std::move(schedule), input_set_from(safety.at("input_set")));

  NominalPolicy nominal;
  const json nom = j.value("nominal", json::object());
  const std::string policy = nom.value("policy", "zero");
  if (policy == "zero") {
    nominal.kind = NominalPolicy::Kind::Zero;
  } else if (policy == "constant") {
    nominal.kind = NominalPolicy::Kind::Constant;
    nominal.value = vector_from(nom.at("value"), "nominal.value");
  } else if (policy == "feedback") {
    nominal.kind = NominalPolicy::Kind::Feedback;
    nominal.K = matrix_from(nom.at("K"), "nominal.K");
  } else {
    throw std::invalid_argument("nominal: unknown policy '" + policy + "'");
  }

  const json exc = j.value("excitation", json::object());
  Excitation excitation{excitation_kind(exc.value("kind", "none")), exc.value("amplitude", 0.0)};

  const json run = j.value("run", json::object());
  ExperimentConfig cfg{
      Scenario{std::move(model), std::move(noise), std::move(x0), conf, std::move(spec),
               std::move(nominal), excitation, filter.value("noise_only_switch", false),
               filter.value("noise_only_threshold", 1e-6), filter.value("known_model", false),
               exc.value("poe_window", std::size_t{0}), run.value("horizon", std::size_t{0})},
      RunBlock{run.value("runs", std::size_t{1}), run.value("seed", std::uint64_t{0}),
               run.value("threads", 1U), run.value("out", std::string("out")),
               run.value("trace_runs", std::size_t{1})},
      VerifyBlock{}};
  const json ver = j.value("verify", json::object());
  cfg.verify.equivalence_instances = ver.value("equivalence_instances", std::size_t{200});
  cfg.verify.equivalence_samples = ver.value("equivalence_samples", std::size_t{100000});

  validate_config(cfg, check_assumptions);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg, bool check_assumptions) {
  const Scenario& sc = cfg.scenario;
  const Eigen::Index n = sc.model.n();
  const Eigen::Index m = sc.model.m();
  sc.confidence.validate();
  if (sc.x0.size() != n) throw std::invalid_argument("system.x0: expected length n");
  if (sc.noise.W.rows() != n) throw std::invalid_argument("system.W: expected n x n");
  if (sc.safety.state_dim() != n) throw std::invalid_argument("safety: H must have n columns");
  if (sc.safety.input_set().dim() != m) throw std::invalid_argument("safety.input_set: expected dimension m");
  if (sc.horizon < 1) throw std::invalid_argument("run.horizon must be >= 1");
  if (cfg.run.runs < 1) throw std::invalid_argument("run.runs must be >= 1");
  if (cfg.run.threads < 1) throw std::invalid_argument("run.threads must be >= 1");
  if (sc.excitation.amplitude < 0.0) throw std::invalid_argument("excitation.amplitude must be >= 0");
  if (sc.nominal.kind == NominalPolicy::Kind::Constant && sc.nominal.value.size() != m) {
    throw std::invalid_argument("nominal.value: expected length m");
  }
  if (sc.nominal.kind == NominalPolicy::Kind::Feedback &&
      (sc.nominal.K.rows() != m || sc.nominal.K.cols() != n)) {
    throw std::invalid_argument("nominal.K: expected m x n");
  }
  if (!check_assumptions) return;

  const double w_max = sc.noise.max_eigenvalue();
  if (sc.confidence.r < w_max) {
    throw AssumptionViolation("noise-bound assumption violated: lambda_max(W) = " +
                              format_double(w_max) + " exceeds r = " +
                              format_double(sc.confidence.r));
  }
  const double ab = sc.model.frobenius_norm();
  if (sc.confidence.s < ab) {
    throw AssumptionViolation("model-norm assumption violated: ||[A B]||_F = " + format_double(ab) +
                              " exceeds s = " + format_double(sc.confidence.s));
  }
}

json to_json(const ExperimentConfig& cfg) {
  const Scenario& sc = cfg.scenario;
  json schedule = json::array();
  for (const ConstraintPair& pair : sc.safety.schedule()) {
    schedule.push_back({{"H", to_json_matrix(pair.H)}, {"h", to_json_vector(pair.h)}});
  }
  json nominal;
  switch (sc.nominal.kind) {
    case NominalPolicy::Kind::Zero: nominal = {{"policy", "zero"}}; break;
    case NominalPolicy::Kind::Constant:
      nominal = {{"policy", "constant"}, {"value", to_json_vector(sc.nominal.value)}};
      break;
    case NominalPolicy::Kind::Feedback:
      nominal = {{"policy", "feedback"}, {"K", to_json_matrix(sc.nominal.K)}};
      break;
  }
  return {
      {"system",
       {{"A", to_json_matrix(sc.model.A)},
        {"B", to_json_matrix(sc.model.B)},
        {"W", to_json_matrix(sc.noise.W)},
        {"x0", to_json_vector(sc.x0)}}},
      {"assumptions",
       {{"r", sc.confidence.r}, {"s", sc.confidence.s}, {"lambda", sc.confidence.lambda}}},
      {"safety", {{"schedule", schedule}, {"input_set", input_set_json(sc.safety.input_set())}}},
      {"filter",
       {{"delta", sc.confidence.delta},
        {"strict_state_exponent", sc.confidence.strict_state_exponent},
        {"noise_only_switch", sc.noise_only_switch},
        {"noise_only_threshold", sc.noise_only_threshold},
        {"known_model", sc.known_model}}},
      {"nominal", nominal},
      {"excitation",
       {{"kind", excitation_name(sc.excitation.kind)},
        {"amplitude", sc.excitation.amplitude},
        {"poe_window", sc.poe_window}}},
      {"run",
       {{"horizon", sc.horizon},
        {"runs", cfg.run.runs},
        {"seed", cfg.run.seed},
        {"threads", cfg.run.threads},
        {"out", cfg.run.out_dir},
        {"trace_runs", cfg.run.trace_runs}}},
      {"verify",
       {{"equivalence_instances", cfg.verify.equivalence_instances},
        {"equivalence_samples", cfg.verify.equivalence_samples}}},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path, bool check_assumptions) {
  std::ifstream in(path);
  if (!in) throw ConfigReadError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path.string() + "': " + e.what());
  }
  try {
    return parse_config(j, check_assumptions);
  } catch (const json::exception& e) {
    throw std::invalid_argument("config '" + path.string() + "': " + e.what());
  }
}

std::string config_digest(const ExperimentConfig& cfg) {
  // Output location and thread count do not change results.
  json j = to_json(cfg);
  j["run"].erase("out");
  j["run"].erase("threads");
  const std::string text = j.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace safelearn
