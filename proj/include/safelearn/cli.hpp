#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace safelearn {

/// Flags shared by every subcommand; unset optionals keep the config value.
struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> runs;
  std::optional<std::string> out_dir;
  std::optional<unsigned> threads;
  bool strict_state_exponent = false;
  /// Test-only: skip the noise-bound and model-norm checks.
  bool skip_assumption_checks = false;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitInvalidConfig = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

/// Closed-loop run or Monte Carlo batch; writes traces, curve.csv and
/// summary.json into the output directory.
int cmd_run(const CliOptions& opt, std::ostream& out, std::ostream& err);
/// One long trajectory; writes decay.csv and decay_summary.json.
int cmd_decay(const CliOptions& opt, std::ostream& out, std::ostream& err);
/// Statistical suites; exit 0 iff every suite passes. Writes verify.csv.
int cmd_verify(const CliOptions& opt, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace safelearn
