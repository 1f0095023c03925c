#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "expertucb/experts.hpp"
#include "expertucb/mdp.hpp"

namespace expertucb {

/// Markov chain followed by the MDP when an expert is in control, with the
/// observation noise folded in.
template <typename Scalar>
struct InducedChain {
  MatrixX<Scalar> transition;
  VectorX<Scalar> reward;  // expected one-step reward from each state

  Index num_states() const { return transition.rows(); }
};

template <typename Scalar>
InducedChain<Scalar> induce_chain(const Mdp<Scalar>& mdp, const ObservationKernel<Scalar>& kernel,
                                  const Policy& policy) {
  const Index n = mdp.num_states();
  if (kernel.num_states() != n)
    throw std::invalid_argument("induce_chain: kernel has " + std::to_string(kernel.num_states()) +
                                " states, MDP has " + std::to_string(n));
  if (policy.num_observations() != kernel.num_observations())
    throw std::invalid_argument("induce_chain: policy and kernel disagree on observation count");
  if (policy.num_actions != mdp.num_actions())
    throw std::invalid_argument("induce_chain: policy and MDP disagree on action count");

  VectorX<Scalar> action_reward(n);
  InducedChain<Scalar> chain{MatrixX<Scalar>::Zero(n, n), VectorX<Scalar>::Zero(n)};
  for (Index y = 0; y < kernel.num_observations(); ++y) {
    const auto a = static_cast<std::size_t>(act(policy, y));
    const auto& p = mdp.transitions[a];
    action_reward = p.cwiseProduct(mdp.rewards[a]).rowwise().sum();
    for (Index s = 0; s < n; ++s) {
      const Scalar w = kernel.emission(s, y);
      if (w == Scalar(0)) continue;
      chain.transition.row(s) += w * p.row(s);
      chain.reward(s) += w * action_reward(s);
    }
  }
  return chain;
}

struct ErgodicityReport {
  bool irreducible = false;
  std::size_t period = 0;  // 0 when undefined (reducible)

  bool ergodic() const { return irreducible && period == 1; }
  std::string verdict() const {
    if (!irreducible) return "reducible";
    if (period != 1) return "periodic (period " + std::to_string(period) + ")";
    return "ergodic";
  }
};

/// Irreducibility from forward and backward reachability on the support
/// graph; the period is the gcd of level(u) + 1 - level(v) over all edges
/// of a BFS layering.
template <typename Scalar>
ErgodicityReport check_ergodic(const InducedChain<Scalar>& chain) {
  const Index n = chain.num_states();
  ErgodicityReport report;
  if (n == 0) return report;

  auto reach = [&](bool forward) {
    std::vector<long> level(static_cast<std::size_t>(n), -1);
    std::deque<Index> queue{0};
    level[0] = 0;
    while (!queue.empty()) {
      const Index u = queue.front();
      queue.pop_front();
      for (Index v = 0; v < n; ++v) {
        const Scalar w = forward ? chain.transition(u, v) : chain.transition(v, u);
        if (w > Scalar(0) && level[static_cast<std::size_t>(v)] < 0) {
          level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
          queue.push_back(v);
        }
      }
    }
    return level;
  };

  const auto level = reach(true);
  const auto back = reach(false);
  report.irreducible =
      std::all_of(level.begin(), level.end(), [](long l) { return l >= 0; }) &&
      std::all_of(back.begin(), back.end(), [](long l) { return l >= 0; });
  if (!report.irreducible) return report;

  long g = 0;
  for (Index u = 0; u < n; ++u)
    for (Index v = 0; v < n; ++v)
      if (chain.transition(u, v) > Scalar(0))
        g = std::gcd(g, std::abs(level[static_cast<std::size_t>(u)] + 1 -
                                 level[static_cast<std::size_t>(v)]));
  report.period = static_cast<std::size_t>(g);
  return report;
}

struct StationaryOptions {
  double tol = 1e-12;
  std::size_t max_iter = 1000000;
};

/// Power iteration from the uniform vector on the lazy chain (I + P) / 2,
/// renormalised to sum one after every product. The lazy chain has the same
/// stationary vector; gridworld chains are bipartite apart from a few
/// self-loops, so P alone has an eigenvalue close to -1 and would oscillate.
/// Returns pi with ||pi P - pi||_inf <= tol.
template <typename Scalar>
RowVectorX<Scalar> stationary_distribution(const InducedChain<Scalar>& chain,
                                           const StationaryOptions& options = {}) {
  if (!check_ergodic(chain).ergodic())
    throw std::domain_error("stationary_distribution: chain is not ergodic; run check_ergodic");
  const Index n = chain.num_states();
  RowVectorX<Scalar> pi = RowVectorX<Scalar>::Constant(n, Scalar(1) / static_cast<Scalar>(n));
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    const RowVectorX<Scalar> moved = pi * chain.transition;
    if ((moved - pi).cwiseAbs().maxCoeff() <= static_cast<Scalar>(options.tol)) return pi;
    const RowVectorX<Scalar> next = Scalar(0.5) * (pi + moved);
    pi = next / next.sum();
  }
  throw std::runtime_error("stationary_distribution: no convergence within " +
                           std::to_string(options.max_iter) + " iterations");
}

template <typename Scalar, typename Derived>
Scalar steady_state_reward(const InducedChain<Scalar>& chain,
                           const Eigen::MatrixBase<Derived>& stationary) {
  return stationary.dot(chain.reward.transpose());
}

struct BiasOptions {
  double tail_tol = 1e-12;
  std::size_t max_terms = 1000000;
  std::size_t ratio_window = 64;
};

template <typename Scalar>
struct BiasResult {
  Scalar constant = Scalar(0);              // K
  Scalar second_eigenvalue_modulus = Scalar(0);
  std::size_t terms = 0;
  bool truncated_by_tail = false;
};

/// K = max_s sum_t |(P^t r)(s) - R|, summed until the geometric tail
/// estimate drops below `tail_tol`; the estimated tail is added to K.
/// Decay is measured on the spread max_s - min_s of (P^t r)(s), which tends
/// to zero even when R carries rounding error from the stationary solve; its
/// rate over a sliding window doubles as the |lambda_2| estimate.
template <typename Scalar>
BiasResult<Scalar> bias_constant(const InducedChain<Scalar>& chain, Scalar steady_reward,
                                 const BiasOptions& options = {}) {
  if (!check_ergodic(chain).ergodic())
    throw std::domain_error("bias_constant: chain is not ergodic; run check_ergodic");
  const Index n = chain.num_states();
  VectorX<Scalar> deviation = chain.reward.array() - steady_reward;
  VectorX<Scalar> total = VectorX<Scalar>::Zero(n);
  std::vector<Scalar> spread;
  BiasResult<Scalar> result;
  Scalar tail = Scalar(0);

  for (std::size_t t = 0; t < options.max_terms; ++t) {
    total += deviation.cwiseAbs();
    spread.push_back(deviation.maxCoeff() - deviation.minCoeff());
    result.terms = t + 1;
    if (spread.back() == Scalar(0)) {
      result.second_eigenvalue_modulus = Scalar(0);
      result.truncated_by_tail = true;
      tail = Scalar(0);
      break;
    }
    if (t >= 1) {
      const std::size_t w = std::min(t, options.ratio_window);
      const Scalar base = spread[t - w];
      const Scalar rho = base > Scalar(0)
                             ? std::pow(spread[t] / base, Scalar(1) / static_cast<Scalar>(w))
                             : Scalar(0);
      result.second_eigenvalue_modulus = std::min(rho, Scalar(1));
      if (rho < Scalar(1)) {
        tail = spread[t] * rho / (Scalar(1) - rho);
        if (tail <= static_cast<Scalar>(options.tail_tol)) {
          result.truncated_by_tail = true;
          break;
        }
      }
    }
    deviation = chain.transition * deviation;
  }
  result.constant = total.maxCoeff() + tail;
  return result;
}

template <typename Scalar>
struct ChainStats {
  ErgodicityReport ergodicity;
  RowVectorX<Scalar> stationary;
  Scalar steady_state_reward = Scalar(0);
  Scalar bias_constant = Scalar(0);
  Scalar second_eigenvalue_modulus = Scalar(0);
  Scalar gap = Scalar(0);
};

/// Full per-expert analysis. Throws std::domain_error on non-ergodic chains.
template <typename Scalar>
ChainStats<Scalar> analyze_chain(const InducedChain<Scalar>& chain,
                                 const StationaryOptions& stationary_options = {},
                                 const BiasOptions& bias_options = {}) {
  ChainStats<Scalar> stats;
  stats.ergodicity = check_ergodic(chain);
  if (!stats.ergodicity.ergodic())
    throw std::domain_error("chain is " + stats.ergodicity.verdict());
  stats.stationary = stationary_distribution(chain, stationary_options);
  stats.steady_state_reward = steady_state_reward(chain, stats.stationary);
  const auto bias = bias_constant(chain, stats.steady_state_reward, bias_options);
  stats.bias_constant = bias.constant;
  stats.second_eigenvalue_modulus = bias.second_eigenvalue_modulus;
  return stats;
}

struct GapReport {
  std::size_t best = 0;
  std::vector<double> gaps;
  /// Per expert: best - R_e > 2 K_e / T0. The best expert itself is
  /// reported as satisfied.
  std::vector<bool> condition_holds;

  bool all_hold() const {
    return std::all_of(condition_holds.begin(), condition_holds.end(), [](bool b) { return b; });
  }
};

/// Fills `gap` in every entry and evaluates the regret-bound validity
/// condition for the given initial horizon. Best expert ties go to the
/// lowest index.
template <typename Scalar>
GapReport gaps(std::vector<ChainStats<Scalar>>& stats, double t0 = 1.0) {
  if (stats.empty()) throw std::invalid_argument("gaps: empty stats list");
  GapReport report;
  for (std::size_t e = 1; e < stats.size(); ++e)
    if (stats[e].steady_state_reward > stats[report.best].steady_state_reward) report.best = e;
  const double best = static_cast<double>(stats[report.best].steady_state_reward);
  for (std::size_t e = 0; e < stats.size(); ++e) {
    const double gap = best - static_cast<double>(stats[e].steady_state_reward);
    stats[e].gap = static_cast<Scalar>(gap);
    report.gaps.push_back(gap);
    report.condition_holds.push_back(
        e == report.best || gap > 2.0 * static_cast<double>(stats[e].bias_constant) / t0);
  }
  return report;
}

/// Smallest integer T0 for which the validity condition holds for every
/// non-best expert, or nullopt if some non-best expert has zero gap.
template <typename Scalar>
std::optional<long> min_valid_t0(const std::vector<ChainStats<Scalar>>& stats, std::size_t best) {
  long t0 = 1;
  for (std::size_t e = 0; e < stats.size(); ++e) {
    if (e == best) continue;
    const double gap = static_cast<double>(stats[e].gap);
    if (!(gap > 0.0)) return std::nullopt;
    const double k = static_cast<double>(stats[e].bias_constant);
    long needed = static_cast<long>(std::floor(2.0 * k / gap)) + 1;
    t0 = std::max(t0, needed);
  }
  return t0;
}

}  // namespace expertucb
