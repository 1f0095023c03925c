#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "expertucb/rng.hpp"

namespace expertucb {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

inline constexpr double kProbabilityTolerance = 1e-12;

/// Finite tabular MDP. `transitions[a](s, s')` is Pr(s' | s, a) and
/// `rewards[a](s, s')` the expected reward r(s, a, s') in [0, 1].
/// The discount is only consumed by expert training; the controller works
/// on the average-reward criterion.
template <typename Scalar>
struct Mdp {
  std::vector<MatrixX<Scalar>> transitions;
  std::vector<MatrixX<Scalar>> rewards;
  Scalar discount = Scalar(0.95);
  VectorX<Scalar> initial;

  Index num_states() const { return initial.size(); }
  Index num_actions() const { return static_cast<Index>(transitions.size()); }
};

/// Observation kernel: `emission(s, y)` is Pr(y | s).
template <typename Scalar>
struct ObservationKernel {
  MatrixX<Scalar> emission;

  Index num_states() const { return emission.rows(); }
  Index num_observations() const { return emission.cols(); }

  static ObservationKernel identity(Index num_states) {
    return {MatrixX<Scalar>::Identity(num_states, num_states)};
  }
};

struct ValidationReport {
  std::vector<std::string> issues;

  bool ok() const { return issues.empty(); }
  explicit operator bool() const { return ok(); }

  std::string to_string() const {
    std::ostringstream out;
    for (const auto& issue : issues) out << issue << '\n';
    return out.str();
  }
};

namespace detail {

template <typename Derived>
void check_stochastic_row(const Eigen::MatrixBase<Derived>& row, const std::string& where,
                          ValidationReport& report) {
  using Scalar = typename Derived::Scalar;
  for (Index j = 0; j < row.size(); ++j) {
    if (!(row(j) >= Scalar(0))) {
      std::ostringstream msg;
      msg << "negative probability " << row(j) << " at " << where << ", column " << j;
      report.issues.push_back(msg.str());
    }
  }
  const auto sum = row.sum();
  if (!(std::abs(static_cast<double>(sum) - 1.0) <= kProbabilityTolerance)) {
    std::ostringstream msg;
    msg << "row sum " << sum << " at " << where;
    report.issues.push_back(msg.str());
  }
}

}  // namespace detail

template <typename Scalar>
ValidationReport validate_mdp(const Mdp<Scalar>& mdp) {
  ValidationReport report;
  const Index n = mdp.num_states();
  if (n <= 0) report.issues.emplace_back("no states");
  if (mdp.num_actions() <= 0) report.issues.emplace_back("no actions");
  if (mdp.rewards.size() != mdp.transitions.size())
    report.issues.emplace_back("reward table count does not match action count");
  if (!(mdp.discount >= Scalar(0) && mdp.discount < Scalar(1)))
    report.issues.emplace_back("discount outside [0,1)");
  if (!report.ok()) return report;

  for (Index a = 0; a < mdp.num_actions(); ++a) {
    const auto& p = mdp.transitions[static_cast<std::size_t>(a)];
    const auto& r = mdp.rewards[static_cast<std::size_t>(a)];
    if (p.rows() != n || p.cols() != n || r.rows() != n || r.cols() != n) {
      std::ostringstream msg;
      msg << "action " << a << " matrices are not " << n << "x" << n;
      report.issues.push_back(msg.str());
      continue;
    }
    for (Index s = 0; s < n; ++s) {
      std::ostringstream where;
      where << "(a=" << a << ", s=" << s << ")";
      detail::check_stochastic_row(p.row(s), where.str(), report);
      for (Index t = 0; t < n; ++t) {
        if (!(r(s, t) >= Scalar(0) && r(s, t) <= Scalar(1))) {
          std::ostringstream msg;
          msg << "reward out of [0,1]: " << r(s, t) << " at (a=" << a << ", s=" << s
              << ", s'=" << t << ")";
          report.issues.push_back(msg.str());
        }
      }
    }
  }
  detail::check_stochastic_row(mdp.initial.transpose(), "initial distribution", report);
  return report;
}

template <typename Scalar>
ValidationReport validate_kernel(const ObservationKernel<Scalar>& kernel) {
  ValidationReport report;
  if (kernel.num_states() <= 0 || kernel.num_observations() <= 0) {
    report.issues.emplace_back("empty observation kernel");
    return report;
  }
  for (Index s = 0; s < kernel.num_states(); ++s) {
    detail::check_stochastic_row(kernel.emission.row(s), "emission row " + std::to_string(s),
                                 report);
  }
  return report;
}

/// Inverse-CDF draw over a probability row, accumulating in ascending index
/// order. Falls back to the last positive entry if rounding leaves `u`
/// above the final cumulative sum.
template <typename Derived>
Index sample_index(const Eigen::MatrixBase<Derived>& row, double u) {
  double cumulative = 0.0;
  Index last_positive = 0;
  for (Index j = 0; j < row.size(); ++j) {
    const double p = static_cast<double>(row(j));
    if (p <= 0.0) continue;
    cumulative += p;
    last_positive = j;
    if (u < cumulative) return j;
  }
  return last_positive;
}

struct Transition {
  Index next_state;
  double reward;
};

template <typename Scalar>
Transition step(const Mdp<Scalar>& mdp, Index state, Index action, RngStream& rng) {
  if (state < 0 || state >= mdp.num_states())
    throw std::out_of_range("step: state index " + std::to_string(state) + " out of range");
  if (action < 0 || action >= mdp.num_actions())
    throw std::out_of_range("step: action index " + std::to_string(action) + " out of range");
  const auto a = static_cast<std::size_t>(action);
  const Index next = sample_index(mdp.transitions[a].row(state), rng.uniform());
  return {next, static_cast<double>(mdp.rewards[a](state, next))};
}

template <typename Scalar>
Index observe(const ObservationKernel<Scalar>& kernel, Index state, RngStream& rng) {
  if (state < 0 || state >= kernel.num_states())
    throw std::out_of_range("observe: state index " + std::to_string(state) + " out of range");
  return sample_index(kernel.emission.row(state), rng.uniform());
}

template <typename Scalar>
Index sample_initial_state(const Mdp<Scalar>& mdp, RngStream& rng) {
  return sample_index(mdp.initial.transpose(), rng.uniform());
}

}  // namespace expertucb
