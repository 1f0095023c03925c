#include "expertucb/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

namespace expertucb::harness {

namespace {

std::string num(double x) { return fmt::format("{:.17g}", x); }

Selector selector_for(const ExperimentConfig& config, const AnalysisTable& analysis,
                      std::size_t num_experts) {
  const auto& spec = config.selector;
  switch (spec.kind) {
    case SelectorSpec::Kind::Ucb: {
      const TieBreak tie_break = config.tie_break;
      return [tie_break](const UcbState& s, RngStream& r) { return select_expert(s, tie_break, &r); };
    }
    case SelectorSpec::Kind::Oracle:
      if (!analysis.gaps) throw std::runtime_error("oracle selector needs an ergodic best expert");
      return make_selector(Baseline::oracle(analysis.best()), num_experts);
    case SelectorSpec::Kind::Uniform:
      return make_selector(Baseline::uniform(), num_experts);
    case SelectorSpec::Kind::Fixed:
      return make_selector(Baseline::fixed(spec.expert), num_experts);
    case SelectorSpec::Kind::EpsilonGreedy:
      return make_selector(Baseline::epsilon_greedy(spec.epsilon), num_experts);
  }
  throw std::logic_error("unknown selector");
}

}  // namespace

Scenario build_scenario(const ExperimentConfig& config) {
  config.validate();
  GridLayout layout = config.grid();
  Mdp<double> mdp = build_gridworld<double>(layout, config.dynamics, config.discount);
  const Index n = mdp.num_states();
  ObservationKernel<double> kernel = corruption_kernel<double>(n, config.epsilon);

  const TrainingOptions training{config.train_tol, config.train_max_iter};
  std::vector<Policy> policies;
  for (std::size_t i = 0; i < config.permutations.size(); ++i) {
    const ActionPermutation perm(config.permutations[i]);
    const double noise = config.training_noise.empty() ? 0.0 : config.training_noise[i];
    TrainedExpert trained = noise > 0.0
                                ? train_expert_under_noise(mdp, perm, corruption_kernel<double>(n, noise), training)
                                : train_expert(mdp, perm, training);
    trained.policy.name = fmt::format("e{}", i + 1);
    if (noise > 0.0) trained.policy.provenance += fmt::format(", training epsilon={}", noise);
    policies.push_back(std::move(trained.policy));
  }
  return {std::move(layout), std::move(mdp), std::move(kernel), ExpertSet(std::move(policies))};
}

bool AnalysisTable::all_ergodic() const {
  return std::all_of(experts.begin(), experts.end(), [](const auto& e) { return e.stats.has_value(); });
}

double AnalysisTable::best_steady_reward() const {
  if (!gaps) throw std::runtime_error("no ergodic expert to define the best steady-state reward");
  return experts[gaps->best].stats->steady_state_reward;
}

BoundInputs AnalysisTable::bound_inputs() const {
  BoundInputs inputs;
  inputs.best = best();
  for (const auto& e : experts) {
    if (!e.stats) throw std::runtime_error("bound inputs need every expert chain to be ergodic");
    inputs.gaps.push_back(e.stats->gap);
    inputs.bias_constants.push_back(e.stats->bias_constant);
  }
  return inputs;
}

AnalysisTable analyze(const Scenario& scenario, const std::vector<long>& t0_values) {
  AnalysisTable table;
  table.t0_values = t0_values;
  std::vector<ChainStats<double>> ergodic_stats;
  std::vector<std::size_t> ergodic_index;
  for (std::size_t e = 0; e < scenario.experts.size(); ++e) {
    ExpertAnalysis entry;
    entry.name = scenario.experts[e].name;
    const auto chain = induce_chain(scenario.mdp, scenario.kernel, scenario.experts[e]);
    const auto ergodicity = check_ergodic(chain);
    entry.verdict = ergodicity.verdict();
    if (ergodicity.ergodic()) {
      entry.stats = analyze_chain(chain);
      ergodic_stats.push_back(*entry.stats);
      ergodic_index.push_back(e);
    }
    table.experts.push_back(std::move(entry));
  }
  if (ergodic_stats.empty()) return table;

  GapReport report = gaps(ergodic_stats);
  GapReport full;
  full.best = ergodic_index[report.best];
  full.gaps.assign(table.experts.size(), std::nan(""));
  for (std::size_t k = 0; k < ergodic_index.size(); ++k) {
    table.experts[ergodic_index[k]].stats->gap = ergodic_stats[k].gap;
    full.gaps[ergodic_index[k]] = report.gaps[k];
  }
  for (long t0 : t0_values) {
    std::vector<bool> holds;
    for (std::size_t e = 0; e < table.experts.size(); ++e) {
      const auto& s = table.experts[e].stats;
      holds.push_back(e == full.best ||
                      (s && s->gap > 2.0 * s->bias_constant / static_cast<double>(t0)));
    }
    table.validity.push_back(std::move(holds));
  }
  table.gaps = std::move(full);
  if (table.all_ergodic()) table.min_valid_t0 = min_valid_t0(ergodic_stats, report.best);
  return table;
}

AggregateResult aggregate(std::vector<RunTrace> traces, double best_steady_reward) {
  if (traces.empty()) throw std::invalid_argument("aggregate: no traces");
  AggregateResult result;
  result.repetitions = traces.size();
  for (const auto& trace : traces) result.series.push_back(empirical_regret(trace, best_steady_reward));
  const Index rounds = result.series.front().size();
  const auto experts = static_cast<Index>(traces.front().num_experts);
  for (const auto& s : result.series)
    if (s.size() != rounds) throw std::invalid_argument("aggregate: traces differ in length");

  const double reps = static_cast<double>(traces.size());
  result.mean_regret = Eigen::VectorXd::Zero(rounds);
  result.mean_avg_cum_reward = Eigen::VectorXd::Zero(rounds);
  result.mean_fractions = Eigen::MatrixXd::Zero(rounds, experts);
  for (const auto& s : result.series) {
    result.mean_regret += s.regret;
    result.mean_avg_cum_reward += s.average_cumulative_reward;
    result.mean_fractions += s.pull_fractions;
  }
  result.mean_regret /= reps;
  result.mean_avg_cum_reward /= reps;
  result.mean_fractions /= reps;

  result.sd_regret = Eigen::VectorXd::Zero(rounds);
  result.sd_avg_cum_reward = Eigen::VectorXd::Zero(rounds);
  if (traces.size() > 1) {
    for (const auto& s : result.series) {
      result.sd_regret += (s.regret - result.mean_regret).cwiseAbs2();
      result.sd_avg_cum_reward += (s.average_cumulative_reward - result.mean_avg_cum_reward).cwiseAbs2();
    }
    result.sd_regret = (result.sd_regret / (reps - 1.0)).cwiseSqrt();
    result.sd_avg_cum_reward = (result.sd_avg_cum_reward / (reps - 1.0)).cwiseSqrt();
  }
  result.traces = std::move(traces);
  return result;
}

AggregateResult run_experiment(const ExperimentConfig& config, const Scenario& scenario,
                               const AnalysisTable& analysis) {
  config.validate();
  const double best_reward = analysis.best_steady_reward();
  const Selector selector = selector_for(config, analysis, scenario.experts.size());

  std::vector<RunTrace> traces(config.repetitions);
  std::size_t workers = config.threads ? config.threads : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, config.repetitions);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t r = next++; r < config.repetitions; r = next++) {
      try {
        RngStream rng(config.seed + r);
        traces[r] = run_with_selector(scenario.mdp, scenario.kernel, scenario.experts,
                                      config.schedule, config.deltas, config.rounds, rng, selector);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  AggregateResult result = aggregate(std::move(traces), best_reward);
  result.t0 = config.schedule.t0;
  if (analysis.all_ergodic() && analysis.gaps) {
    result.bound_at_end = theoretical_bound(config.rounds, analysis.bound_inputs(), config.schedule);
  } else {
    result.bound_at_end = {std::nullopt, "some expert chain is not ergodic"};
  }
  const auto n = static_cast<Index>(config.rounds);
  if (n >= 4) result.log_fit = fit_log_growth(result.mean_regret, std::max<Index>(1, n / 2), n);
  return result;
}

std::string analysis_csv(const AnalysisTable& table) {
  std::string out = "expert,name,steady_state_reward,bias_constant,gap,lambda2,ergodicity,is_best";
  for (long t0 : table.t0_values) out += fmt::format(",valid_t0_{}", t0);
  out += '\n';
  for (std::size_t e = 0; e < table.experts.size(); ++e) {
    const auto& x = table.experts[e];
    const bool best = table.gaps && table.gaps->best == e;
    if (x.stats) {
      out += fmt::format("{},{},{},{},{},{},{},{}", e, x.name, num(x.stats->steady_state_reward),
                         num(x.stats->bias_constant), num(x.stats->gap),
                         num(x.stats->second_eigenvalue_modulus), x.verdict, best ? 1 : 0);
    } else {
      out += fmt::format("{},{},,,,,{},0", e, x.name, x.verdict);
    }
    for (std::size_t k = 0; k < table.t0_values.size(); ++k)
      out += table.validity.empty() ? ",0" : (table.validity[k][e] ? ",1" : ",0");
    out += '\n';
  }
  return out;
}

std::string analysis_text(const AnalysisTable& table) {
  std::string out = fmt::format("{:<8}{:>14}{:>14}{:>14}{:>10}  {:<12}", "expert", "R_e", "K_e",
                                "gap", "|l2|", "chain");
  for (long t0 : table.t0_values) out += fmt::format("{:>10}", fmt::format("T0={}", t0));
  out += '\n';
  for (std::size_t e = 0; e < table.experts.size(); ++e) {
    const auto& x = table.experts[e];
    const bool best = table.gaps && table.gaps->best == e;
    const std::string name = x.name + (best ? "*" : "");
    if (x.stats) {
      out += fmt::format("{:<8}{:>14.6f}{:>14.6f}{:>14.6f}{:>10.6f}  {:<12}", name,
                         x.stats->steady_state_reward, x.stats->bias_constant, x.stats->gap,
                         x.stats->second_eigenvalue_modulus, x.verdict);
    } else {
      out += fmt::format("{:<8}{:>14}{:>14}{:>14}{:>10}  {:<12}", name, "-", "-", "-", "-", x.verdict);
    }
    for (std::size_t k = 0; k < table.t0_values.size(); ++k) {
      const char* verdict = best ? "best" : (!table.validity.empty() && table.validity[k][e] ? "pass" : "fail");
      out += fmt::format("{:>10}", verdict);
    }
    out += '\n';
  }
  if (table.min_valid_t0)
    out += fmt::format("smallest T0 satisfying the regret-bound condition: {}\n", *table.min_valid_t0);
  else
    out += "regret-bound condition cannot hold for any T0\n";
  return out;
}

std::string trace_csv(const AggregateResult& result) {
  const std::size_t experts = result.traces.empty() ? 0 : result.traces.front().num_experts;
  std::string out = "run_id,round,chosen_expert,episode_length,episode_avg_reward,cumulative_regret";
  for (std::size_t e = 0; e < experts; ++e) out += fmt::format(",n_{}", e);
  out += '\n';
  for (std::size_t r = 0; r < result.traces.size(); ++r) {
    const auto& trace = result.traces[r];
    const auto& series = result.series[r];
    for (std::size_t k = 0; k < trace.size(); ++k) {
      const auto& rec = trace.rounds[k];
      out += fmt::format("{},{},{},{},{},{}", r, rec.round, rec.expert, rec.length,
                         num(rec.average_reward), num(series.regret(static_cast<Index>(k))));
      for (std::size_t p : rec.pulls) out += fmt::format(",{}", p);
      out += '\n';
    }
  }
  return out;
}

std::string aggregate_csv(const AggregateResult& result) {
  const Index experts = result.mean_fractions.cols();
  std::string out = "round,mean_regret,sd_regret,mean_avg_cum_reward,sd_avg_cum_reward";
  for (Index e = 0; e < experts; ++e) out += fmt::format(",mean_frac_{}", e);
  out += '\n';
  for (Index k = 0; k < result.mean_regret.size(); ++k) {
    out += fmt::format("{},{},{},{},{}", k, num(result.mean_regret(k)), num(result.sd_regret(k)),
                       num(result.mean_avg_cum_reward(k)), num(result.sd_avg_cum_reward(k)));
    for (Index e = 0; e < experts; ++e) out += "," + num(result.mean_fractions(k, e));
    out += '\n';
  }
  return out;
}

std::string summary_text(const ExperimentConfig& config, const AnalysisTable& table,
                         const AggregateResult& result) {
  const Index last = result.mean_regret.size() - 1;
  std::string out;
  out += fmt::format("selector: {}\n", config.selector.to_string());
  out += fmt::format("t0: {}\nc: {}\nrounds: {}\nrepetitions: {}\nbase_seed: {}\n", result.t0,
                     config.schedule.growth, config.rounds, result.repetitions, config.seed);
  out += fmt::format("best_expert: {}\nbest_steady_state_reward: {}\n", table.best(),
                     num(table.best_steady_reward()));
  out += fmt::format("final_mean_regret: {}\nfinal_sd_regret: {}\n", num(result.mean_regret(last)),
                     num(result.sd_regret(last)));
  out += fmt::format("final_mean_avg_cum_reward: {}\n", num(result.mean_avg_cum_reward(last)));
  for (Index e = 0; e < result.mean_fractions.cols(); ++e)
    out += fmt::format("final_mean_fraction_{}: {}\n", e, num(result.mean_fractions(last, e)));
  if (result.log_fit) {
    out += fmt::format("log_fit_range: [{}, {}]\n", std::max<Index>(1, (last + 1) / 2), last + 1);
    out += fmt::format("log_fit_slope: {}\nlog_fit_intercept: {}\nlog_fit_r2: {}\n",
                       num(result.log_fit->slope), num(result.log_fit->intercept),
                       num(result.log_fit->r_squared));
  }
  if (result.bound_at_end.applicable()) {
    out += fmt::format("regret_bound: {}\nregret_bound_applicable: yes\n", num(*result.bound_at_end.value));
  } else {
    out += fmt::format("regret_bound_applicable: no ({})\n", result.bound_at_end.reason);
  }
  return out;
}

void write_outputs(const std::string& out_dir,
                   const std::vector<std::pair<std::string, std::string>>& files) {
  namespace fs = std::filesystem;
  std::vector<fs::path> written;
  try {
    for (const auto& [name, content] : files) {
      const fs::path path = fs::path(out_dir) / name;
      fs::create_directories(path.parent_path());
      written.push_back(path);
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + path.string());
      out << content;
      if (!out) throw std::runtime_error("write failed for " + path.string());
    }
  } catch (...) {
    std::error_code ignored;
    for (const auto& p : written) fs::remove(p, ignored);
    throw;
  }
}

}  // namespace expertucb::harness
