#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expertucb/controller.hpp"

namespace expertucb {

/// Per-round series; entry k describes the state after k + 1 completed
/// episodes.
struct RegretSeries {
  Eigen::VectorXd regret;
  Eigen::VectorXd average_cumulative_reward;
  Eigen::MatrixXd pull_fractions;  // rounds x experts

  Index size() const { return regret.size(); }
};

/// Fraction of rounds in which each expert was chosen, per round.
inline Eigen::MatrixXd pull_fractions(const RunTrace& trace) {
  if (trace.rounds.empty()) throw std::invalid_argument("pull_fractions: empty trace");
  const auto rounds = static_cast<Index>(trace.size());
  Eigen::MatrixXd fractions(rounds, static_cast<Index>(trace.num_experts));
  for (Index k = 0; k < rounds; ++k) {
    const auto& pulls = trace.rounds[static_cast<std::size_t>(k)].pulls;
    for (std::size_t e = 0; e < pulls.size(); ++e)
      fractions(k, static_cast<Index>(e)) =
          static_cast<double>(pulls[e]) / static_cast<double>(k + 1);
  }
  return fractions;
}

/// r(n) = n R* - sum_{k<n} r_k over the n completed episodes.
inline RegretSeries empirical_regret(const RunTrace& trace, double best_steady_reward) {
  if (trace.rounds.empty()) throw std::invalid_argument("empirical_regret: empty trace");
  const auto rounds = static_cast<Index>(trace.size());
  RegretSeries series;
  series.regret.resize(rounds);
  series.average_cumulative_reward.resize(rounds);
  double collected = 0.0;
  for (Index k = 0; k < rounds; ++k) {
    collected += trace.rounds[static_cast<std::size_t>(k)].average_reward;
    const double n = static_cast<double>(k + 1);
    series.regret(k) = n * best_steady_reward - collected;
    series.average_cumulative_reward(k) = collected / n;
  }
  series.pull_fractions = pull_fractions(trace);
  return series;
}

inline constexpr double kRegretBoundC1 = 1.0 + std::numbers::pi * std::numbers::pi / 3.0;

struct BoundInputs {
  std::vector<double> gaps;            // Delta_e
  std::vector<double> bias_constants;  // K_e
  std::size_t best = 0;                // e*

  double best_bias() const { return bias_constants.at(best); }
  double c_e(std::size_t e, long t0) const {
    return gaps.at(e) + bias_constants.at(e) / static_cast<double>(t0);
  }
};

struct BoundEvaluation {
  std::optional<double> value;
  std::string reason;  // set when inapplicable

  bool applicable() const { return value.has_value(); }
};

/// Expected-regret bound after n rounds under delta(n) = n^-4:
///   sum_{e != e*} (32 log n / (Delta_e - 2 K_e / T_n)^2 + c1) c_e + sum_{k<n} K_* / T_k
/// with c1 = 1 + pi^2 / 3 and c_e = Delta_e + K_e / T0.
inline BoundEvaluation theoretical_bound(std::size_t n, const BoundInputs& inputs,
                                         const EpisodeSchedule& schedule) {
  if (n < 2) return {std::nullopt, "bound needs n >= 2"};
  if (inputs.gaps.size() != inputs.bias_constants.size() || inputs.best >= inputs.gaps.size())
    return {std::nullopt, "inconsistent bound inputs"};
  const double t0 = static_cast<double>(schedule.t0);
  const double tn = static_cast<double>(episode_length(schedule, n));
  double total = 0.0;
  for (std::size_t e = 0; e < inputs.gaps.size(); ++e) {
    if (e == inputs.best) continue;
    const double gap = inputs.gaps[e];
    const double k = inputs.bias_constants[e];
    if (!(gap > 2.0 * k / t0))
      return {std::nullopt, "validity condition fails for expert " + std::to_string(e) +
                                ": gap " + std::to_string(gap) + " <= 2K/T0 = " +
                                std::to_string(2.0 * k / t0)};
    const double margin = gap - 2.0 * k / tn;
    if (!(margin > 0.0))
      return {std::nullopt, "non-positive denominator for expert " + std::to_string(e)};
    total += (32.0 * std::log(static_cast<double>(n)) / (margin * margin) + kRegretBoundC1) *
             inputs.c_e(e, schedule.t0);
  }
  for (std::size_t k = 0; k < n; ++k)
    total += inputs.best_bias() / static_cast<double>(episode_length(schedule, k));
  return {total, {}};
}

struct LogFit {
  double slope = 0.0;      // a in r(n) = a ln n + b
  double intercept = 0.0;  // b
  double r_squared = 0.0;
};

/// Least-squares fit of r(n) = a ln(n) + b over rounds n in [first, last]
/// (1-based round counts, i.e. series index n - 1).
inline LogFit fit_log_growth(const Eigen::VectorXd& regret, Index first, Index last) {
  if (first < 1 || last > regret.size() || last - first < 1)
    throw std::invalid_argument("fit_log_growth: bad round range");
  const Index m = last - first + 1;
  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd target(m);
  for (Index i = 0; i < m; ++i) {
    design(i, 0) = std::log(static_cast<double>(first + i));
    design(i, 1) = 1.0;
    target(i) = regret(first + i - 1);
  }
  const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(target);
  const Eigen::VectorXd residual = target - design * coef;
  const double mean = target.mean();
  const double ss_tot = (target.array() - mean).square().sum();
  const double ss_res = residual.squaredNorm();
  LogFit fit{coef(0), coef(1), ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0};
  return fit;
}

}  // namespace expertucb
