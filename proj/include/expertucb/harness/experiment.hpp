#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expertucb/chain_analysis.hpp"
#include "expertucb/controller.hpp"
#include "expertucb/experts.hpp"
#include "expertucb/gridworld.hpp"
#include "expertucb/harness/config.hpp"
#include "expertucb/mdp.hpp"
#include "expertucb/regret.hpp"

namespace expertucb::harness {

/// Environment and trained experts shared by every repetition.
struct Scenario {
  GridLayout layout;
  Mdp<double> mdp;
  ObservationKernel<double> kernel;
  ExpertSet experts;
};

Scenario build_scenario(const ExperimentConfig& config);

struct ExpertAnalysis {
  std::string name;
  std::optional<ChainStats<double>> stats;  // empty when the chain is not ergodic
  std::string verdict;
};

struct AnalysisTable {
  std::vector<ExpertAnalysis> experts;
  std::vector<long> t0_values;
  std::optional<GapReport> gaps;             // over the ergodic experts
  std::vector<std::vector<bool>> validity;   // [t0 index][expert]
  std::optional<long> min_valid_t0;

  bool all_ergodic() const;
  std::size_t best() const { return gaps ? gaps->best : 0; }
  double best_steady_reward() const;
  BoundInputs bound_inputs() const;
};

/// Chain analysis of every expert; non-ergodic experts are reported, not fatal.
AnalysisTable analyze(const Scenario& scenario, const std::vector<long>& t0_values);

/// Per-round statistics across repetitions; rows are rounds.
struct AggregateResult {
  long t0 = 0;
  std::size_t repetitions = 0;
  Eigen::VectorXd mean_regret, sd_regret;
  Eigen::VectorXd mean_avg_cum_reward, sd_avg_cum_reward;
  Eigen::MatrixXd mean_fractions;
  std::vector<RunTrace> traces;
  std::vector<RegretSeries> series;
  BoundEvaluation bound_at_end;
  std::optional<LogFit> log_fit;
};

/// Runs `repetitions` independent runs (run r seeded with seed + r) with the
/// configured selector and aggregates them.
AggregateResult run_experiment(const ExperimentConfig& config, const Scenario& scenario,
                               const AnalysisTable& analysis);

/// Mean and sample standard deviation (zero for a single run) per round.
AggregateResult aggregate(std::vector<RunTrace> traces, double best_steady_reward);

// Output rendering. Numbers use 17 significant digits.
std::string analysis_csv(const AnalysisTable& table);
std::string analysis_text(const AnalysisTable& table);
std::string trace_csv(const AggregateResult& result);
std::string aggregate_csv(const AggregateResult& result);
std::string summary_text(const ExperimentConfig& config, const AnalysisTable& table,
                         const AggregateResult& result);

/// Writes files atomically as a group: on failure every file written so far
/// is removed.
void write_outputs(const std::string& out_dir,
                   const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace expertucb::harness
