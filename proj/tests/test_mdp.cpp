#include <doctest.h>

#include <cmath>
#include <vector>

#include "expertucb/gridworld.hpp"
#include "expertucb/mdp.hpp"
#include "expertucb/rng.hpp"

using namespace expertucb;

namespace {

Mdp<double> single_action(const MatrixX<double>& p, double reward) {
  Mdp<double> m;
  m.transitions.push_back(p);
  m.rewards.push_back(MatrixX<double>::Constant(p.rows(), p.cols(), reward));
  m.initial = VectorX<double>::Zero(p.rows());
  m.initial(0) = 1.0;
  return m;
}

bool mentions(const ValidationReport& report, const std::string& needle) {
  for (const auto& issue : report.issues)
    if (issue.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validate_mdp accepts the one-state MDP") {
  MatrixX<double> p(1, 1);
  p << 1.0;
  const auto report = validate_mdp(single_action(p, 0.5));
  CHECK(report.ok());
}

TEST_CASE("validate_mdp reports bad row sums and rewards") {
  MatrixX<double> p(2, 2);
  p << 0.5, 0.4, 0.0, 1.0;
  auto mdp = single_action(p, 0.5);
  auto report = validate_mdp(mdp);
  CHECK_FALSE(report.ok());
  CHECK(mentions(report, "row sum 0.9 at (a=0, s=0)"));

  p << 0.5, 0.5, 0.0, 1.0;
  mdp = single_action(p, 1.5);
  report = validate_mdp(mdp);
  CHECK(mentions(report, "reward out of [0,1]"));

  mdp = single_action(p, 0.5);
  mdp.transitions[0](1, 0) = -0.1;
  mdp.transitions[0](1, 1) = 1.1;
  CHECK(mentions(validate_mdp(mdp), "negative probability"));

  mdp = single_action(p, 0.5);
  mdp.initial << 0.3, 0.3;
  CHECK(mentions(validate_mdp(mdp), "initial distribution"));

  mdp = single_action(p, 0.5);
  mdp.discount = 1.0;
  CHECK(mentions(validate_mdp(mdp), "discount"));
}

TEST_CASE("validate_mdp lists every violated entry") {
  MatrixX<double> p(3, 3);
  p << 0.5, 0.4, 0.0, 0.2, 0.2, 0.2, 0.0, 0.0, 1.0;
  const auto report = validate_mdp(single_action(p, 0.5));
  CHECK(report.issues.size() == 2);
}

TEST_CASE("step follows a point mass regardless of the draw") {
  MatrixX<double> p(3, 3);
  p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
  const auto mdp = single_action(p, 0.25);
  RngStream rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto t = step(mdp, 0, 0, rng);
    CHECK(t.next_state == 1);
    CHECK(t.reward == 0.25);
  }
}

TEST_CASE("step rejects out-of-range indices") {
  MatrixX<double> p(1, 1);
  p << 1.0;
  const auto mdp = single_action(p, 0.0);
  RngStream rng(0);
  CHECK_THROWS_AS(step(mdp, 1, 0, rng), std::out_of_range);
  CHECK_THROWS_AS(step(mdp, 0, 1, rng), std::out_of_range);
  CHECK_THROWS_AS(step(mdp, -1, 0, rng), std::out_of_range);
  CHECK_THROWS_AS(observe(ObservationKernel<double>::identity(1), 2, rng), std::out_of_range);
}

TEST_CASE("fair row sampled 1e5 times") {
  MatrixX<double> p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  const auto mdp = single_action(p, 0.0);
  RngStream rng(11);
  int zeros = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) zeros += step(mdp, 0, 0, rng).next_state == 0;
  CHECK(std::abs(zeros / double(n) - 0.5) <= 0.01);
}

TEST_CASE("gridworld trap holds the agent with probability 0.98") {
  const auto layout = GridLayout::parse("SN\nTN\n");
  const auto mdp = build_gridworld<double>(layout);
  RngStream rng(5);
  const Index trap = layout.state_of(1, 0);
  int stays = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) stays += step(mdp, trap, kRight, rng).next_state == trap;
  CHECK(std::abs(stays / double(n) - 0.98) <= 3.0 * std::sqrt(0.98 * 0.02 / n));
}

TEST_CASE("identity and zero-noise kernels report the state") {
  RngStream rng(2);
  const auto identity = ObservationKernel<double>::identity(5);
  const auto clean = corruption_kernel<double>(5, 0.0);
  for (Index s = 0; s < 5; ++s)
    for (int i = 0; i < 20; ++i) {
      CHECK(observe(identity, s, rng) == s);
      CHECK(observe(clean, s, rng) == s);
    }
}

TEST_CASE("corrupted observations match the kernel row") {
  const Index n = 6;
  const auto kernel = corruption_kernel<double>(n, 0.2);
  CHECK(validate_kernel(kernel).ok());
  RngStream rng(8);
  int hits = 0;
  const int samples = 100000;
  for (int i = 0; i < samples; ++i) hits += observe(kernel, 2, rng) == 2;
  CHECK(std::abs(hits / double(samples) - (0.8 + 0.2 / n)) <= 0.01);
}

TEST_CASE("step histogram within 3 standard errors of every transition row") {
  const auto layout = GridLayout::parse("SNY\nNTN\nGNN\n");
  const auto mdp = build_gridworld<double>(layout);
  RngStream rng(21);
  const int samples = 100000;
  for (Index a = 0; a < mdp.num_actions(); ++a)
    for (Index s = 0; s < mdp.num_states(); ++s) {
      std::vector<int> counts(static_cast<std::size_t>(mdp.num_states()), 0);
      for (int i = 0; i < samples; ++i) {
        const auto t = step(mdp, s, a, rng);
        REQUIRE(t.reward >= 0.0);
        REQUIRE(t.reward <= 1.0);
        ++counts[static_cast<std::size_t>(t.next_state)];
      }
      for (Index t = 0; t < mdp.num_states(); ++t) {
        const double p = mdp.transitions[static_cast<std::size_t>(a)](s, t);
        const double freq = counts[static_cast<std::size_t>(t)] / double(samples);
        const double se = std::sqrt(p * (1.0 - p) / samples);
        if (p == 0.0) {
          CHECK(counts[static_cast<std::size_t>(t)] == 0);
        } else {
          CHECK(std::abs(freq - p) <= 3.0 * se + 1e-12);
        }
      }
    }
}

TEST_CASE("equal seeds give identical step and observe sequences") {
  const auto mdp = build_gridworld<double>(default_layout());
  const auto kernel = corruption_kernel<double>(mdp.num_states(), 0.3);
  RngStream a(99), b(99), c(100);
  bool differs = false;
  Index sa = 0, sb = 0, sc = 0;
  for (int i = 0; i < 1000; ++i) {
    const Index ya = observe(kernel, sa, a);
    const Index yb = observe(kernel, sb, b);
    const Index yc = observe(kernel, sc, c);
    CHECK(ya == yb);
    sa = step(mdp, sa, ya % 4, a).next_state;
    sb = step(mdp, sb, yb % 4, b).next_state;
    sc = step(mdp, sc, yc % 4, c).next_state;
    CHECK(sa == sb);
    differs = differs || sa != sc;
  }
  CHECK(differs);
}

TEST_CASE("RngStream variates lie in [0,1) and below() in range") {
  RngStream rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(3) < 3u);
  }
  CHECK(rng.seed() == 7u);
}

TEST_CASE("sample_index walks the row in ascending order") {
  Eigen::RowVector3d row(0.2, 0.0, 0.8);
  CHECK(sample_index(row, 0.0) == 0);
  CHECK(sample_index(row, 0.1999) == 0);
  CHECK(sample_index(row, 0.2) == 2);
  CHECK(sample_index(row, 0.9999999999) == 2);
}
