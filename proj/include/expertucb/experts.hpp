#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "expertucb/gridworld.hpp"
#include "expertucb/mdp.hpp"

namespace expertucb {

/// Deterministic expert: one action per observation.
struct Policy {
  std::vector<int> action_of;
  int num_actions = 0;
  std::string name;
  std::string provenance;

  Index num_observations() const { return static_cast<Index>(action_of.size()); }
};

inline int act(const Policy& policy, Index observation) {
  if (observation < 0 || observation >= policy.num_observations())
    throw std::out_of_range("act: observation " + std::to_string(observation) +
                            " out of range [0," + std::to_string(policy.num_observations()) + ")");
  return policy.action_of[static_cast<std::size_t>(observation)];
}

/// Non-empty list of experts sharing one observation space and action space.
class ExpertSet {
 public:
  ExpertSet() = default;
  explicit ExpertSet(std::vector<Policy> experts) : experts_(std::move(experts)) {
    if (experts_.empty()) throw std::invalid_argument("expert set must not be empty");
    const auto& first = experts_.front();
    for (const auto& p : experts_) {
      if (p.num_observations() != first.num_observations() || p.num_actions != first.num_actions)
        throw std::invalid_argument("experts must share observation and action spaces");
      for (int a : p.action_of)
        if (a < 0 || a >= p.num_actions)
          throw std::invalid_argument("expert '" + p.name + "' emits out-of-range action");
    }
  }

  std::size_t size() const { return experts_.size(); }
  const Policy& operator[](std::size_t i) const { return experts_[i]; }
  auto begin() const { return experts_.begin(); }
  auto end() const { return experts_.end(); }
  Index num_observations() const { return experts_.front().num_observations(); }
  int num_actions() const { return experts_.front().num_actions; }

 private:
  std::vector<Policy> experts_;
};

template <typename Scalar>
struct ValueIterationResult {
  MatrixX<Scalar> q;  // states x actions
  std::size_t iterations = 0;
  Scalar residual = Scalar(0);
  bool converged = false;
};

namespace detail {

// One Bellman backup: Q(s,a) = sum_s' P_a(s,s') (r(s,a,s') + gamma V(s')).
template <typename Scalar>
MatrixX<Scalar> bellman_backup(const Mdp<Scalar>& mdp, const VectorX<Scalar>& value) {
  const Index n = mdp.num_states();
  MatrixX<Scalar> q(n, mdp.num_actions());
  for (Index a = 0; a < mdp.num_actions(); ++a) {
    const auto& p = mdp.transitions[static_cast<std::size_t>(a)];
    const auto& r = mdp.rewards[static_cast<std::size_t>(a)];
    q.col(a) = p.cwiseProduct(r).rowwise().sum() + mdp.discount * (p * value);
  }
  return q;
}

template <typename Derived>
int argmax_lowest(const Eigen::MatrixBase<Derived>& row) {
  Index best = 0;
  for (Index j = 1; j < row.size(); ++j)
    if (row(j) > row(best)) best = j;
  return static_cast<int>(best);
}

}  // namespace detail

template <typename Scalar>
ValueIterationResult<Scalar> value_iteration(const Mdp<Scalar>& mdp, Scalar tol = Scalar(1e-8),
                                             std::size_t max_iter = 100000) {
  if (!(mdp.discount < Scalar(1))) throw std::invalid_argument("value iteration needs discount < 1");
  if (!(tol > Scalar(0))) throw std::invalid_argument("value iteration tolerance must be positive");
  ValueIterationResult<Scalar> result;
  VectorX<Scalar> value = VectorX<Scalar>::Zero(mdp.num_states());
  result.q = detail::bellman_backup(mdp, value);
  for (std::size_t it = 0; it < max_iter; ++it) {
    value = result.q.rowwise().maxCoeff();
    MatrixX<Scalar> next = detail::bellman_backup(mdp, value);
    result.residual = (next - result.q).cwiseAbs().maxCoeff();
    result.q = std::move(next);
    result.iterations = it + 1;
    if (result.residual <= tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Row-wise argmax, ties to the lowest action index.
template <typename Derived>
Policy greedy_policy(const Eigen::MatrixBase<Derived>& q) {
  Policy policy;
  policy.num_actions = static_cast<int>(q.cols());
  policy.action_of.reserve(static_cast<std::size_t>(q.rows()));
  for (Index s = 0; s < q.rows(); ++s) policy.action_of.push_back(detail::argmax_lowest(q.row(s)));
  return policy;
}

struct TrainingOptions {
  double tol = 1e-8;
  std::size_t max_iter = 100000;
};

struct TrainedExpert {
  Policy policy;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Greedy policy for the believed dynamics `permute_actions(true_mdp, perm)`.
/// Action labels are nominal: the controller applies them to the true MDP.
template <typename Scalar>
TrainedExpert train_expert(const Mdp<Scalar>& true_mdp, const ActionPermutation& believed_perm,
                           const TrainingOptions& options = {}) {
  const Mdp<Scalar> believed = permute_actions(true_mdp, believed_perm);
  const auto vi = value_iteration(believed, static_cast<Scalar>(options.tol), options.max_iter);
  TrainedExpert out{greedy_policy(vi.q), vi.iterations, vi.converged};
  std::ostringstream prov;
  prov << "value iteration, perm=[";
  for (int i = 0; i < believed_perm.size(); ++i) prov << (i ? "," : "") << believed_perm(i);
  prov << "], gamma=" << true_mdp.discount << ", iterations=" << vi.iterations;
  out.policy.provenance = prov.str();
  return out;
}

/// Observation-aware training. Each backup evaluates successor states
/// through the kernel: V(s') = sum_y Pr(y|s') Q(s', pi(y)), where pi(y) is
/// greedy on the observation values Qy(y,a) = sum_s Pr(y|s) Q(s,a). The
/// returned policy is greedy on Qy. With an identity kernel this is plain
/// value iteration.
template <typename Scalar>
TrainedExpert train_expert_under_noise(const Mdp<Scalar>& true_mdp,
                                       const ActionPermutation& believed_perm,
                                       const ObservationKernel<Scalar>& kernel,
                                       const TrainingOptions& options = {}) {
  if (kernel.num_states() != true_mdp.num_states())
    throw std::invalid_argument("kernel and MDP disagree on state count");
  const Mdp<Scalar> believed = permute_actions(true_mdp, believed_perm);
  const Index n = believed.num_states();
  const MatrixX<Scalar> obs_weights = kernel.emission.transpose();  // y x s

  MatrixX<Scalar> q = detail::bellman_backup(believed, VectorX<Scalar>(VectorX<Scalar>::Zero(n)));
  Policy policy;
  TrainedExpert out;
  for (std::size_t it = 0; it < options.max_iter; ++it) {
    policy = greedy_policy(obs_weights * q);
    VectorX<Scalar> value = VectorX<Scalar>::Zero(n);
    for (Index s = 0; s < n; ++s)
      for (Index y = 0; y < kernel.num_observations(); ++y)
        value(s) += kernel.emission(s, y) * q(s, policy.action_of[static_cast<std::size_t>(y)]);
    MatrixX<Scalar> next = detail::bellman_backup(believed, value);
    const Scalar residual = (next - q).cwiseAbs().maxCoeff();
    q = std::move(next);
    out.iterations = it + 1;
    if (residual <= static_cast<Scalar>(options.tol)) {
      out.converged = true;
      break;
    }
  }
  out.policy = greedy_policy(obs_weights * q);
  out.policy.provenance = "observation-aware value iteration, iterations=" +
                          std::to_string(out.iterations);
  return out;
}

/// Plain-text table: a header line `# name` then one `observation action`
/// pair per line.
inline void write_policy(std::ostream& out, const Policy& policy) {
  out << "# " << policy.name << '\n';
  out << "# actions " << policy.num_actions << '\n';
  for (std::size_t y = 0; y < policy.action_of.size(); ++y)
    out << y << ' ' << policy.action_of[y] << '\n';
}

inline Policy read_policy(std::istream& in) {
  Policy policy;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::istringstream header(line.substr(1));
      std::string word;
      header >> word;
      if (word == "actions") {
        header >> policy.num_actions;
      } else if (policy.name.empty()) {
        policy.name = line.size() > 2 ? line.substr(2) : "";
      }
      continue;
    }
    std::istringstream row(line);
    std::size_t y = 0;
    int a = 0;
    if (!(row >> y >> a) || y != policy.action_of.size())
      throw std::runtime_error("malformed policy table line: " + line);
    policy.action_of.push_back(a);
  }
  return policy;
}

}  // namespace expertucb
