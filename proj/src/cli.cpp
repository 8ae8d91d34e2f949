#include "safelearn/cli.hpp"

#include "safelearn/config.hpp"
#include "safelearn/qp.hpp"
#include "safelearn/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

namespace safelearn {

namespace fs = std::filesystem;

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ExperimentConfig prepare(const CliOptions& opt) {
  const bool check = !opt.skip_assumption_checks;
  ExperimentConfig cfg = load_config(opt.config_path, check);
  if (opt.seed) cfg.run.seed = *opt.seed;
  if (opt.runs) cfg.run.runs = *opt.runs;
  if (opt.out_dir) cfg.run.out_dir = *opt.out_dir;
  if (opt.threads) cfg.run.threads = *opt.threads;
  if (opt.strict_state_exponent) cfg.scenario.confidence.strict_state_exponent = true;
  validate_config(cfg, check);
  return cfg;
}

fs::path ensure_out_dir(const ExperimentConfig& cfg) {
  const fs::path dir(cfg.run.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

nlohmann::json binomial_json(const BinomialSummary& b) {
  return {{"successes", b.successes},
          {"trials", b.trials},
          {"frequency", b.frequency},
          {"lower", b.lower},
          {"upper", b.upper}};
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const AssumptionViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed config: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidConfig;
  } catch (const ConfigReadError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace

int cmd_run(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = prepare(opt);
    const fs::path dir = ensure_out_dir(cfg);
    const std::string digest = config_digest(cfg);
    const Scenario& sc = cfg.scenario;
    const Eigen::Index n = sc.model.n();
    const Eigen::Index m = sc.model.m();

    const std::size_t keep = cfg.run.runs == 1 ? 1 : std::min(cfg.run.trace_runs, cfg.run.runs);
    const MonteCarloResult mc =
        monte_carlo(sc, cfg.run.runs, cfg.run.seed, cfg.run.threads, keep, digest);
    const MonteCarloSummary& s = mc.summary;

    for (std::size_t i = 0; i < mc.traces.size(); ++i) {
      char name[32];
      if (cfg.run.runs == 1) {
        std::snprintf(name, sizeof name, "trace.csv");
      } else {
        std::snprintf(name, sizeof name, "trace_%04zu.csv", i);
      }
      auto os = open_out(dir / name);
      write_trace_csv(os, mc.traces[i], n, m);
    }

    {
      auto os = open_out(dir / "curve.csv");
      os << "k,mean_model_term,mean_e_bar_max,step_violation_frequency\n";
      for (std::size_t k = 0; k < s.mean_model_term.size(); ++k) {
        os << k << ',' << format_double(s.mean_model_term[k]) << ','
           << format_double(s.mean_e_bar_max[k]) << ','
           << format_double(s.step_violation_frequency[k]) << '\n';
      }
    }

    nlohmann::json summary = {{"config_digest", digest},
                              {"seed", cfg.run.seed},
                              {"runs", s.runs},
                              {"horizon", s.horizon},
                              {"feasible_steps", s.feasible_steps},
                              {"infeasible_steps", s.infeasible_steps},
                              {"step_safety", binomial_json(s.step_safety)},
                              {"coverage", binomial_json(s.coverage)},
                              {"trajectory_safety", binomial_json(s.trajectory_safety)},
                              {"infeasibility", binomial_json(s.infeasibility)},
                              {"min_final_alpha", s.min_final_alpha},
                              {"strict_state_exponent", sc.confidence.strict_state_exponent}};
    {
      auto os = open_out(dir / "summary.json");
      os << summary.dump(2) << '\n';
    }

    out << "runs=" << s.runs << " horizon=" << s.horizon << " digest=" << digest << '\n'
        << "step safety " << format_double(s.step_safety.frequency) << " (lower "
        << format_double(s.step_safety.lower) << ", " << s.step_safety.trials << " steps)\n"
        << "coverage " << format_double(s.coverage.frequency) << " (lower "
        << format_double(s.coverage.lower) << ")\n"
        << "infeasible steps " << s.infeasible_steps << '\n'
        << "wrote " << dir.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_decay(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = prepare(opt);
    const fs::path dir = ensure_out_dir(cfg);
    const std::string digest = config_digest(cfg);
    const Scenario& sc = cfg.scenario;
    const RunTrace trace = run_closed_loop(sc, mix_seed(cfg.run.seed, 0), digest);

    std::vector<double> tau;
    tau.reserve(trace.rows.size());
    double min_alpha = std::numeric_limits<double>::infinity();
    bool window_filled = false;
    const std::size_t window = sc.effective_poe_window();
    for (const TraceRow& row : trace.rows) {
      tau.push_back(row.diagnostics.model_term);
      if (row.k + 1 >= window) {
        window_filled = true;
        min_alpha = std::min(min_alpha, row.alpha_hat);
      }
    }
    const DecayAnalysis analysis = analyze_decay(tau);

    std::vector<std::string> warnings;
    if (!window_filled) {
      warnings.emplace_back("horizon shorter than the excitation window; PoE not observed");
    } else if (!(min_alpha > 1e-9)) {
      warnings.emplace_back("PoE not observed: windowed moment is singular");
    }
    if (!analysis.fit_c) warnings.emplace_back("curve too short to fit the reference rate");

    {
      auto os = open_out(dir / "decay.csv");
      os << "# seed=" << trace.seed << ",config_digest=" << digest << '\n';
      os << "k,tau,reference,ratio\n";
      for (std::size_t k = 0; k < tau.size(); ++k) {
        os << k << ',' << format_double(tau[k]) << ',';
        if (analysis.fit_c && k >= 2) {
          const double ref = *analysis.fit_c * reference_rate(k);
          os << format_double(ref) << ',' << format_double(tau[k] / ref);
        } else {
          os << ',';
        }
        os << '\n';
      }
    }

    auto opt_json = [](const std::optional<double>& v) {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    nlohmann::json summary = {{"config_digest", digest},
                              {"seed", trace.seed},
                              {"horizon", tau.size()},
                              {"fit_c", opt_json(analysis.fit_c)},
                              {"mid_ratio", opt_json(analysis.mid_ratio)},
                              {"mid_bound", analysis.mid_bound},
                              {"mid_ok", analysis.mid_ratio ? nlohmann::json(analysis.mid_ok())
                                                            : nlohmann::json(nullptr)},
                              {"long_ratio", opt_json(analysis.long_ratio)},
                              {"long_bound", analysis.long_bound},
                              {"long_ok", analysis.long_ratio ? nlohmann::json(analysis.long_ok())
                                                              : nlohmann::json(nullptr)},
                              {"poe_min_alpha", window_filled ? nlohmann::json(min_alpha)
                                                              : nlohmann::json(nullptr)},
                              {"warnings", warnings}};
    {
      auto os = open_out(dir / "decay_summary.json");
      os << summary.dump(2) << '\n';
    }

    for (const std::string& w : warnings) err << "warning: " << w << '\n';
    out << "horizon=" << tau.size() << " digest=" << digest << '\n';
    if (analysis.fit_c) out << "fit c=" << format_double(*analysis.fit_c) << '\n';
    if (analysis.mid_ratio) {
      out << "tau[1e4]/tau[1e2]=" << format_double(*analysis.mid_ratio) << " bound "
          << format_double(analysis.mid_bound) << (analysis.mid_ok() ? " PASS" : " FAIL") << '\n';
    }
    if (analysis.long_ratio) {
      out << "tau[1e5]/tau[1e2]=" << format_double(*analysis.long_ratio) << " bound "
          << format_double(analysis.long_bound) << (analysis.long_ok() ? " PASS" : " FAIL")
          << '\n';
    }
    out << "wrote " << dir.string() << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_verify(const CliOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = prepare(opt);
    const fs::path dir = ensure_out_dir(cfg);
    const std::vector<SuiteResult> suites = run_verification(cfg);

    auto os = open_out(dir / "verify.csv");
    os << "suite,statistic,bound,threshold,pass\n";
    bool all = true;
    for (const SuiteResult& r : suites) {
      all = all && r.pass;
      os << r.name << ',' << format_double(r.statistic) << ',' << format_double(r.bound) << ','
         << format_double(r.threshold) << ',' << (r.pass ? 1 : 0) << '\n';
      out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << " statistic="
          << format_double(r.statistic) << " bound=" << format_double(r.bound)
          << " threshold=" << format_double(r.threshold) << " (" << r.detail << ")\n";
    }
    return static_cast<int>(all ? kExitOk : kExitCheckFailed);
  });
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Safe learning-based control: closed-loop simulation and verification"};
  app.require_subcommand(1);

  CliOptions opt;
  std::uint64_t seed = 0;
  std::size_t runs = 0;
  std::string out_dir;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "base seed, overrides run.seed");
    sub->add_option("--runs", runs, "number of Monte Carlo runs, overrides run.runs");
    sub->add_option("--out", out_dir, "output directory, overrides run.out");
    sub->add_option("--threads", threads, "worker threads, overrides run.threads");
    sub->add_flag("--strict-paper-beta", opt.strict_state_exponent,
                  "use the state dimension n in the log det exponent of beta");
    sub->add_flag("--skip-assumption-checks", opt.skip_assumption_checks)->group("");
  };

  CLI::App* run = app.add_subcommand("run", "simulate and write traces and summaries");
  CLI::App* decay = app.add_subcommand("decay", "one long run and the tightening decay curve");
  CLI::App* verify = app.add_subcommand("verify", "statistical verification suites");
  for (CLI::App* sub : {run, decay, verify}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalidConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--seed") > 0) opt.seed = seed;
  if (chosen->count("--runs") > 0) opt.runs = runs;
  if (chosen->count("--out") > 0) opt.out_dir = out_dir;
  if (chosen->count("--threads") > 0) opt.threads = threads;

  if (chosen == run) return cmd_run(opt, std::cout, std::cerr);
  if (chosen == decay) return cmd_decay(opt, std::cout, std::cerr);
  return cmd_verify(opt, std::cout, std::cerr);
}

}  // namespace safelearn
