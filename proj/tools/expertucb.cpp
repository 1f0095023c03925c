// Command-line entry point: analyze, run, sweep, baseline, print-default-config.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "expertucb/harness/config.hpp"
#include "expertucb/harness/experiment.hpp"

namespace {

using namespace expertucb;
using namespace expertucb::harness;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kAnalysis = 3, kIo = 4 };

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Overrides {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> rounds;
  std::vector<long> t0;
  std::string selector;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = o.config_path.empty() ? default_config() : load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.reps) cfg.repetitions = *o.reps;
  if (o.rounds) cfg.rounds = *o.rounds;
  if (!o.t0.empty()) {
    cfg.sweep_t0 = o.t0;
    cfg.schedule.t0 = o.t0.front();
  }
  if (!o.selector.empty()) cfg.selector = SelectorSpec::parse(o.selector);
  cfg.validate();
  return cfg;
}

std::vector<long> analysis_t0s(const ExperimentConfig& cfg) {
  std::vector<long> t0s{cfg.schedule.t0};
  for (long t : cfg.sweep_t0)
    if (std::find(t0s.begin(), t0s.end(), t) == t0s.end()) t0s.push_back(t);
  return t0s;
}

void write(const std::string& out_dir, const std::vector<std::pair<std::string, std::string>>& files) {
  if (out_dir.empty()) return;
  try {
    write_outputs(out_dir, files);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

int cmd_analyze(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const Scenario scenario = build_scenario(cfg);
  const AnalysisTable table = analyze(scenario, analysis_t0s(cfg));
  std::cout << analysis_text(table);
  write(o.out_dir, {{"analysis.csv", analysis_csv(table)}});
  return table.all_ergodic() ? kOk : kAnalysis;
}

int run_one(const ExperimentConfig& cfg, const std::string& out_dir) {
  const Scenario scenario = build_scenario(cfg);
  const AnalysisTable table = analyze(scenario, analysis_t0s(cfg));
  const AggregateResult result = run_experiment(cfg, scenario, table);
  const std::string summary = summary_text(cfg, table, result);
  std::cout << analysis_text(table) << '\n' << summary;
  write(out_dir, {{"analysis.csv", analysis_csv(table)},
                  {"trace.csv", trace_csv(result)},
                  {"aggregate.csv", aggregate_csv(result)},
                  {"summary.txt", summary}});
  return kOk;
}

int cmd_run(const Overrides& o) { return run_one(resolve(o), o.out_dir); }

int cmd_baseline(Overrides o) {
  if (o.selector.empty()) o.selector = "oracle";
  const ExperimentConfig cfg = resolve(o);
  if (cfg.selector.is_ucb()) throw ConfigError("baseline: --selector must name a baseline, not ucb");
  return run_one(cfg, o.out_dir);
}

int cmd_sweep(const Overrides& o) {
  ExperimentConfig cfg = resolve(o);
  const Scenario scenario = build_scenario(cfg);
  const AnalysisTable table = analyze(scenario, cfg.sweep_t0);
  std::cout << analysis_text(table) << '\n';

  std::vector<std::pair<std::string, std::string>> files{{"analysis.csv", analysis_csv(table)}};
  std::string overview = "t0,final_mean_regret,final_sd_regret,final_mean_avg_cum_reward,regret_bound\n";
  for (long t0 : cfg.sweep_t0) {
    cfg.schedule.t0 = t0;
    const AggregateResult result = run_experiment(cfg, scenario, table);
    const std::string dir = fmt::format("t0_{}/", t0);
    files.emplace_back(dir + "trace.csv", trace_csv(result));
    files.emplace_back(dir + "aggregate.csv", aggregate_csv(result));
    files.emplace_back(dir + "summary.txt", summary_text(cfg, table, result));
    const Index last = result.mean_regret.size() - 1;
    overview += fmt::format("{},{:.17g},{:.17g},{:.17g},{}\n", t0, result.mean_regret(last),
                            result.sd_regret(last), result.mean_avg_cum_reward(last),
                            result.bound_at_end.applicable()
                                ? fmt::format("{:.17g}", *result.bound_at_end.value)
                                : std::string("inapplicable"));
  }
  files.emplace_back("summary.txt", overview);
  std::cout << overview;
  write(o.out_dir, files);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UCB expert selection on tabular MDPs"};
  app.require_subcommand(1);
  Overrides o;

  auto add_common = [&](CLI::App* sub, bool with_run_flags) {
    sub->add_option("--config", o.config_path, "Experiment configuration (INI)");
    sub->add_option("--out", o.out_dir, "Output directory");
    sub->add_option("--t0", o.t0, "Initial episode length(s); a list drives the sweep")->delimiter(',');
    if (!with_run_flags) return;
    sub->add_option("--seed", o.seed, "Base seed (run r uses seed + r)");
    sub->add_option("--reps", o.reps, "Repetitions");
    sub->add_option("--rounds", o.rounds, "Rounds per run");
    sub->add_option("--selector", o.selector, "ucb | oracle | uniform | fixed:<e> | epsilon_greedy:<eps>");
  };

  auto* analyze_cmd = app.add_subcommand("analyze", "Per-expert chain analysis table");
  add_common(analyze_cmd, false);
  auto* run_cmd = app.add_subcommand("run", "Run the configured selector");
  add_common(run_cmd, true);
  auto* sweep_cmd = app.add_subcommand("sweep", "Run once per T0 in the sweep list");
  add_common(sweep_cmd, true);
  auto* baseline_cmd = app.add_subcommand("baseline", "Run a baseline selector (default oracle)");
  add_common(baseline_cmd, true);
  auto* print_cmd = app.add_subcommand("print-default-config", "Print the reference configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*print_cmd) {
      std::cout << default_config_text();
      return kOk;
    }
    if (*analyze_cmd) return cmd_analyze(o);
    if (*run_cmd) return cmd_run(o);
    if (*sweep_cmd) return cmd_sweep(o);
    if (*baseline_cmd) return cmd_baseline(o);
  } catch (const ConfigError& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "error [io]: " << e.what() << '\n';
    return kIo;
  } catch (const std::domain_error& e) {
    std::cerr << "error [analysis]: " << e.what() << '\n';
    return kAnalysis;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
