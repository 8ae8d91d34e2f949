#pragma once

#include "safelearn/sim.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace safelearn {

/// A stated modelling assumption (noise bound or model-norm bound) does not
/// hold for the configured ground truth.
class AssumptionViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The config file could not be opened.
class ConfigReadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunBlock {
  std::size_t runs = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out_dir = "out";
  /// Number of per-run trace CSVs written by a Monte Carlo run.
  std::size_t trace_runs = 1;
};

/// Scale of the sampled robust-equivalence suite run by `verify`.
struct VerifyBlock {
  std::size_t equivalence_instances = 200;
  std::size_t equivalence_samples = 100000;
};

struct ExperimentConfig {
  Scenario scenario;
  RunBlock run;
  VerifyBlock verify;
};

/// Builds a config from its JSON form. With `check_assumptions` the noise
/// bound r >= lambda_max(W) and model bound s >= ||[A B]||_F are enforced.
ExperimentConfig parse_config(const nlohmann::json& j, bool check_assumptions = true);
nlohmann::json to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path, bool check_assumptions = true);

/// Structural checks plus, optionally, the two modelling assumptions.
void validate_config(const ExperimentConfig& cfg, bool check_assumptions);

/// 16 hex digits of FNV-1a over the canonical JSON dump.
std::string config_digest(const ExperimentConfig& cfg);

}  // namespace safelearn
