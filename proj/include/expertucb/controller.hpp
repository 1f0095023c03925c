#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "expertucb/experts.hpp"
#include "expertucb/mdp.hpp"
#include "expertucb/rng.hpp"

namespace expertucb {

/// Episode lengths T_n = ceil(T0 + c n).
struct EpisodeSchedule {
  long t0 = 4;
  double growth = 0.1;

  void validate() const {
    if (t0 < 1) throw std::invalid_argument("t0 must be >= 1");
    if (!(growth >= 0.0)) throw std::invalid_argument("growth c must be >= 0");
  }
};

/// ceil(T0 + c n). A value within 1e-9 (relative) of an integer is taken
/// to be that integer so that e.g. 4 + 0.1 * 30 gives 7, not 8.
inline long episode_length(const EpisodeSchedule& schedule, std::size_t round) {
  const double value = static_cast<double>(schedule.t0) +
                       schedule.growth * static_cast<double>(round);
  const double nearest = std::round(value);
  if (std::abs(value - nearest) <= 1e-9 * std::max(1.0, std::abs(value)))
    return static_cast<long>(nearest);
  return static_cast<long>(std::ceil(value));
}

struct FixedDelta {
  double delta = 0.05;
};

/// delta(n) = n^-alpha with n clamped to >= 2.
struct PolynomialDelta {
  double alpha = 4.0;
};

using DeltaSchedule = std::variant<FixedDelta, PolynomialDelta>;

inline bool round_dependent(const DeltaSchedule& deltas) {
  return std::holds_alternative<PolynomialDelta>(deltas);
}

inline double delta_at(const DeltaSchedule& deltas, std::size_t round) {
  if (const auto* fixed = std::get_if<FixedDelta>(&deltas)) return fixed->delta;
  const auto& poly = std::get<PolynomialDelta>(deltas);
  const double n = static_cast<double>(std::max<std::size_t>(round, 2));
  return std::pow(n, -poly.alpha);
}

inline void validate(const DeltaSchedule& deltas) {
  if (const auto* fixed = std::get_if<FixedDelta>(&deltas)) {
    if (!(fixed->delta > 0.0 && fixed->delta < 1.0))
      throw std::invalid_argument("fixed delta must lie in (0,1)");
  } else if (!(std::get<PolynomialDelta>(deltas).alpha > 0.0)) {
    throw std::invalid_argument("polynomial delta exponent must be > 0");
  }
}

/// sqrt((2 / n_i) log(1 / delta)); +inf for an untried expert.
inline double confidence_radius(std::size_t pulls, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw std::invalid_argument("confidence_radius: delta must lie in (0,1)");
  if (pulls == 0) return std::numeric_limits<double>::infinity();
  return std::sqrt(2.0 / static_cast<double>(pulls) * std::log(1.0 / delta));
}

enum class TieBreak { LowestIndex, Random };

/// Controller bookkeeping. `step` counts MDP steps taken so far and
/// `round` the completed episodes.
struct UcbState {
  std::vector<std::size_t> pulls;
  Eigen::VectorXd sums;
  Eigen::VectorXd means;
  Eigen::VectorXd radii;
  std::size_t round = 0;
  long step = 0;
  Index mdp_state = 0;

  explicit UcbState(std::size_t num_experts = 0, Index start_state = 0)
      : pulls(num_experts, 0),
        sums(Eigen::VectorXd::Zero(static_cast<Index>(num_experts))),
        means(Eigen::VectorXd::Zero(static_cast<Index>(num_experts))),
        radii(Eigen::VectorXd::Constant(static_cast<Index>(num_experts),
                                        std::numeric_limits<double>::infinity())),
        mdp_state(start_state) {}

  std::size_t num_experts() const { return pulls.size(); }
};

/// argmax_i R_i + c_i. Untried experts (c_i = +inf) come first; ties go to
/// the lowest index, or to a uniform draw among the tied experts.
inline std::size_t select_expert(const UcbState& state, TieBreak tie_break = TieBreak::LowestIndex,
                                 RngStream* rng = nullptr) {
  if (state.num_experts() == 0) throw std::invalid_argument("select_expert: no experts");
  std::vector<std::size_t> best{0};
  auto score = [&](std::size_t i) {
    const auto k = static_cast<Index>(i);
    return std::isinf(state.radii(k)) ? std::numeric_limits<double>::infinity()
                                      : state.means(k) + state.radii(k);
  };
  double best_score = score(0);
  for (std::size_t i = 1; i < state.num_experts(); ++i) {
    const double s = score(i);
    if (s > best_score) {
      best_score = s;
      best.assign(1, i);
    } else if (s == best_score) {
      best.push_back(i);
    }
  }
  if (tie_break == TieBreak::Random && best.size() > 1) {
    if (rng == nullptr) throw std::invalid_argument("select_expert: random tie-break needs an rng");
    return best[static_cast<std::size_t>(rng->below(best.size()))];
  }
  return best.front();
}

struct EpisodeResult {
  double average_reward = 0.0;
  Index final_state = 0;
};

/// Exactly `length` observe -> act -> step transitions from `start_state`.
/// Each step consumes two uniforms from `rng`: observation, then transition.
template <typename Scalar>
EpisodeResult run_episode(const Mdp<Scalar>& mdp, const ObservationKernel<Scalar>& kernel,
                          const Policy& policy, long length, Index start_state, RngStream& rng) {
  if (length < 1) throw std::invalid_argument("run_episode: episode length must be >= 1");
  double total = 0.0;
  Index s = start_state;
  for (long k = 0; k < length; ++k) {
    const Index y = observe(kernel, s, rng);
    const auto next = step(mdp, s, act(policy, y), rng);
    total += next.reward;
    s = next.next_state;
  }
  return {total / static_cast<double>(length), s};
}

/// Records one completed episode: S_e += r, n_e += 1, R_e = S_e / n_e,
/// t += T. Radii use delta(round) with the post-update round count; under a
/// round-dependent schedule every tried expert's radius is refreshed.
inline void update(UcbState& state, std::size_t expert, double average_reward, long length,
                   const DeltaSchedule& deltas) {
  const auto e = static_cast<Index>(expert);
  state.sums(e) += average_reward;
  state.pulls[expert] += 1;
  state.means(e) = state.sums(e) / static_cast<double>(state.pulls[expert]);
  state.step += length;
  state.round += 1;
  const double delta = delta_at(deltas, state.round);
  if (round_dependent(deltas)) {
    for (std::size_t i = 0; i < state.num_experts(); ++i)
      state.radii(static_cast<Index>(i)) = confidence_radius(state.pulls[i], delta);
  } else {
    state.radii(e) = confidence_radius(state.pulls[expert], delta);
  }
}

struct RoundRecord {
  std::size_t round = 0;
  std::size_t expert = 0;
  long length = 0;
  double average_reward = 0.0;
  Eigen::VectorXd means;
  Eigen::VectorXd radii;
  std::vector<std::size_t> pulls;
};

struct RunTrace {
  std::size_t num_experts = 0;
  Index initial_state = 0;
  Index terminal_state = 0;
  std::vector<RoundRecord> rounds;

  std::size_t size() const { return rounds.size(); }
};

/// Chooses the next expert from the controller state; may draw from `rng`.
using Selector = std::function<std::size_t(const UcbState&, RngStream&)>;

struct RunOptions {
  TieBreak tie_break = TieBreak::LowestIndex;
};

/// Shared episode loop: s0 ~ mu0, then `rounds` times select -> episode ->
/// update, threading the MDP state between episodes.
template <typename Scalar>
RunTrace run_with_selector(const Mdp<Scalar>& mdp, const ObservationKernel<Scalar>& kernel,
                           const ExpertSet& experts, const EpisodeSchedule& schedule,
                           const DeltaSchedule& deltas, std::size_t rounds, RngStream& rng,
                           const Selector& selector) {
  schedule.validate();
  validate(deltas);
  if (experts.num_observations() != kernel.num_observations() ||
      experts.num_actions() != mdp.num_actions() || kernel.num_states() != mdp.num_states())
    throw std::invalid_argument("run: MDP, kernel and experts have inconsistent dimensions");

  RunTrace trace;
  trace.num_experts = experts.size();
  trace.initial_state = sample_initial_state(mdp, rng);
  UcbState state(experts.size(), trace.initial_state);
  trace.rounds.reserve(rounds);
  for (std::size_t n = 0; n < rounds; ++n) {
    const std::size_t e = selector(state, rng);
    if (e >= experts.size()) throw std::out_of_range("selector returned invalid expert");
    const long length = episode_length(schedule, n);
    const auto episode = run_episode(mdp, kernel, experts[e], length, state.mdp_state, rng);
    state.mdp_state = episode.final_state;
    update(state, e, episode.average_reward, length, deltas);
    trace.rounds.push_back({n, e, length, episode.average_reward, state.means, state.radii,
                            state.pulls});
  }
  trace.terminal_state = state.mdp_state;
  return trace;
}

template <typename Scalar>
RunTrace run_ucb(const Mdp<Scalar>& mdp, const ObservationKernel<Scalar>& kernel,
                 const ExpertSet& experts, const EpisodeSchedule& schedule,
                 const DeltaSchedule& deltas, std::size_t rounds, RngStream& rng,
                 const RunOptions& options = {}) {
  if (rounds < experts.size())
    throw std::invalid_argument("run_ucb: need at least one round per expert");
  const TieBreak tie_break = options.tie_break;
  return run_with_selector(mdp, kernel, experts, schedule, deltas, rounds, rng,
                           [tie_break](const UcbState& s, RngStream& r) {
                             return select_expert(s, tie_break, &r);
                           });
}

/// Comparison selectors run through the same episode loop.
struct Baseline {
  enum class Kind { Oracle, Uniform, Fixed, EpsilonGreedy };
  Kind kind = Kind::Uniform;
  std::size_t expert = 0;  // Oracle: the best expert; Fixed: the pinned expert
  double epsilon = 0.1;

  static Baseline oracle(std::size_t best) { return {Kind::Oracle, best, 0.0}; }
  static Baseline uniform() { return {Kind::Uniform, 0, 0.0}; }
  static Baseline fixed(std::size_t e) { return {Kind::Fixed, e, 0.0}; }
  static Baseline epsilon_greedy(double eps) { return {Kind::EpsilonGreedy, 0, eps}; }

  std::string name() const {
    switch (kind) {
      case Kind::Oracle: return "oracle";
      case Kind::Uniform: return "uniform";
      case Kind::Fixed: return "fixed:" + std::to_string(expert);
      case Kind::EpsilonGreedy: return "epsilon_greedy:" + std::to_string(epsilon);
    }
    return "?";
  }
};

/// Epsilon-greedy explores with probability epsilon (one uniform draw, plus
/// one more for the arm when exploring); otherwise it exploits the best
/// running mean, untried experts first, ties to the lowest index.
inline Selector make_selector(const Baseline& baseline, std::size_t num_experts) {
  switch (baseline.kind) {
    case Baseline::Kind::Oracle:
    case Baseline::Kind::Fixed:
      if (baseline.expert >= num_experts)
        throw std::invalid_argument("baseline expert index out of range");
      return [e = baseline.expert](const UcbState&, RngStream&) { return e; };
    case Baseline::Kind::Uniform:
      return [](const UcbState& s, RngStream& r) {
        return static_cast<std::size_t>(r.below(s.num_experts()));
      };
    case Baseline::Kind::EpsilonGreedy:
      if (!(baseline.epsilon >= 0.0 && baseline.epsilon <= 1.0))
        throw std::invalid_argument("epsilon-greedy epsilon must lie in [0,1]");
      return [eps = baseline.epsilon](const UcbState& s, RngStream& r) {
        if (r.uniform() < eps) return static_cast<std::size_t>(r.below(s.num_experts()));
        std::size_t best = 0;
        for (std::size_t i = 0; i < s.num_experts(); ++i) {
          if (s.pulls[i] == 0) return i;
          if (s.means(static_cast<Index>(i)) > s.means(static_cast<Index>(best))) best = i;
        }
        return best;
      };
  }
  throw std::invalid_argument("unknown baseline");
}

template <typename Scalar>
RunTrace run_baseline(const Baseline& baseline, const Mdp<Scalar>& mdp,
                      const ObservationKernel<Scalar>& kernel, const ExpertSet& experts,
                      const EpisodeSchedule& schedule, const DeltaSchedule& deltas,
                      std::size_t rounds, RngStream& rng) {
  return run_with_selector(mdp, kernel, experts, schedule, deltas, rounds, rng,
                           make_selector(baseline, experts.size()));
}

}  // namespace expertucb
