#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "expertucb/chain_analysis.hpp"
#include "expertucb/controller.hpp"
#include "expertucb/gridworld.hpp"
#include "oracles.hpp"

using namespace expertucb;

namespace {

// One state; action i pays rewards[i]; expert i always plays action i.
struct Bandit {
  Mdp<double> mdp;
  ObservationKernel<double> kernel;
  ExpertSet experts;
};

Bandit bandit(const std::vector<double>& rewards) {
  Bandit b;
  for (double r : rewards) {
    b.mdp.transitions.push_back(MatrixX<double>::Ones(1, 1));
    b.mdp.rewards.push_back(MatrixX<double>::Constant(1, 1, r));
  }
  b.mdp.initial = VectorX<double>::Ones(1);
  b.kernel = ObservationKernel<double>::identity(1);
  std::vector<Policy> experts;
  for (std::size_t i = 0; i < rewards.size(); ++i)
    experts.push_back({{static_cast<int>(i)}, static_cast<int>(rewards.size()), "arm", ""});
  b.experts = ExpertSet(experts);
  return b;
}

struct Grid {
  Mdp<double> mdp;
  ObservationKernel<double> kernel;
  ExpertSet experts;
};

Grid default_grid() {
  Grid g;
  g.mdp = build_gridworld<double>(default_layout());
  g.kernel = ObservationKernel<double>::identity(g.mdp.num_states());
  std::vector<Policy> experts;
  for (const auto& perm : default_permutations()) experts.push_back(train_expert(g.mdp, perm).policy);
  g.experts = ExpertSet(experts);
  return g;
}

}  // namespace

TEST_CASE("episode lengths") {
  CHECK(episode_length({4, 0.1}, 0) == 4);
  CHECK(episode_length({4, 0.1}, 10) == 5);
  CHECK(episode_length({4, 0.1}, 11) == 6);
  CHECK(episode_length({4, 0.1}, 30) == 7);
  for (std::size_t n : {0u, 7u, 1000u}) CHECK(episode_length({100, 0.0}, n) == 100);
  for (std::size_t n = 0; n < 5000; ++n) CHECK(episode_length({4, 0.1}, n) >= 4);
  CHECK_THROWS_AS(EpisodeSchedule({0, 0.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(EpisodeSchedule({4, -1.0}).validate(), std::invalid_argument);
}

TEST_CASE("confidence radius") {
  CHECK(std::isinf(confidence_radius(0, 0.3)));
  CHECK(confidence_radius(1, std::exp(-0.5)) == doctest::Approx(1.0));
  CHECK(confidence_radius(2, 0.01) == doctest::Approx(2.145966026289347).epsilon(1e-12));
  CHECK_THROWS_AS(confidence_radius(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(confidence_radius(3, 1.0), std::invalid_argument);
  for (std::size_t n = 1; n < 50; ++n)
    CHECK(confidence_radius(n + 1, 0.05) < confidence_radius(n, 0.05));
}

TEST_CASE("delta schedules") {
  CHECK(delta_at(PolynomialDelta{4.0}, 0) == doctest::Approx(1.0 / 16.0));
  CHECK(delta_at(PolynomialDelta{4.0}, 1) == doctest::Approx(1.0 / 16.0));
  CHECK(delta_at(PolynomialDelta{4.0}, 10) == doctest::Approx(1e-4));
  CHECK(delta_at(FixedDelta{0.05}, 1000) == 0.05);
  CHECK_THROWS_AS(validate(DeltaSchedule{FixedDelta{1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(DeltaSchedule{PolynomialDelta{0.0}}), std::invalid_argument);
}

TEST_CASE("select_expert") {
  UcbState s(3);
  CHECK(select_expert(s) == 0);

  UcbState two(2);
  two.means << 0.5, 0.9;
  two.radii << 0.05, 0.05;
  CHECK(select_expert(two) == 1);
  two.means << 0.9, 0.5;
  two.radii << 0.0, 0.4;
  CHECK(select_expert(two) == 0);

  UcbState partly(3);
  partly.means << 0.9, 0.0, 0.0;
  partly.radii << 0.1, std::numeric_limits<double>::infinity(), 0.1;
  CHECK(select_expert(partly) == 1);

  UcbState tied(3);
  tied.means << 0.5, 0.5, 0.5;
  tied.radii << 0.1, 0.1, 0.1;
  RngStream rng(1);
  std::vector<int> seen(3, 0);
  for (int i = 0; i < 300; ++i) ++seen[select_expert(tied, TieBreak::Random, &rng)];
  for (int c : seen) CHECK(c > 50);
  CHECK_THROWS_AS(select_expert(tied, TieBreak::Random, nullptr), std::invalid_argument);
}

TEST_CASE("update follows the running-mean rules") {
  UcbState s(2);
  update(s, 0, 0.7, 4, FixedDelta{0.05});
  CHECK(s.pulls[0] == 1);
  CHECK(s.means(0) == doctest::Approx(0.7));
  CHECK(std::isinf(s.radii(1)));
  const double first = s.radii(0);
  update(s, 1, 0.4, 5, FixedDelta{0.05});
  update(s, 1, 0.8, 6, FixedDelta{0.05});
  CHECK(s.means(1) == doctest::Approx(0.6));
  CHECK(s.step == 15);
  CHECK(s.round == 3);
  update(s, 0, 0.7, 1, FixedDelta{0.05});
  CHECK(s.radii(0) < first);
}

TEST_CASE("round-dependent deltas refresh every radius") {
  UcbState s(2);
  update(s, 0, 0.5, 4, PolynomialDelta{4.0});
  update(s, 1, 0.5, 4, PolynomialDelta{4.0});
  const double before = s.radii(0);
  update(s, 1, 0.5, 4, PolynomialDelta{4.0});
  CHECK(s.radii(0) > before);
  CHECK(s.radii(0) == doctest::Approx(confidence_radius(1, delta_at(PolynomialDelta{4.0}, 3))));
}

TEST_CASE("run_episode basics") {
  const auto b = bandit({0.3, 0.6});
  RngStream rng(0);
  const auto one = run_episode(b.mdp, b.kernel, b.experts[1], 1, 0, rng);
  CHECK(one.average_reward == 0.6);
  for (long T : {1L, 7L, 100L})
    CHECK(run_episode(b.mdp, b.kernel, b.experts[0], T, 0, rng).average_reward == doctest::Approx(0.3));
  CHECK_THROWS_AS(run_episode(b.mdp, b.kernel, b.experts[0], 0, 0, rng), std::invalid_argument);

  // Two uniforms per step.
  RngStream a(5), c(5);
  run_episode(b.mdp, b.kernel, b.experts[0], 10, 0, a);
  for (int i = 0; i < 20; ++i) c.uniform();
  CHECK(a.uniform() == c.uniform());
}

TEST_CASE("N equal to the expert count pulls each once") {
  const auto g = default_grid();
  RngStream rng(3);
  const auto trace = run_ucb(g.mdp, g.kernel, g.experts, {4, 0.1}, PolynomialDelta{4.0}, 4, rng);
  std::vector<std::size_t> chosen;
  for (const auto& r : trace.rounds) chosen.push_back(r.expert);
  CHECK(chosen == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(run_ucb(g.mdp, g.kernel, g.experts, {4, 0.1}, PolynomialDelta{4.0}, 3, rng),
                  std::invalid_argument);
}

TEST_CASE("single expert is always chosen and its mean approaches R") {
  const auto g = default_grid();
  const ExpertSet only({g.experts[0]});
  RngStream rng(8);
  const auto trace = run_ucb(g.mdp, g.kernel, only, {4, 0.1}, PolynomialDelta{4.0}, 2000, rng);
  for (const auto& r : trace.rounds) CHECK(r.expert == 0);
  const auto stats = analyze_chain(induce_chain(g.mdp, g.kernel, g.experts[0]));
  CHECK(trace.rounds.back().means(0) == doctest::Approx(stats.steady_state_reward).epsilon(0.02));
}

TEST_CASE("single-state MDP reproduces classical UCB exactly") {
  const std::vector<double> mu{0.9, 0.5, 0.3};
  const auto b = bandit(mu);
  RngStream rng(1);
  const auto trace = run_ucb(b.mdp, b.kernel, b.experts, {4, 0.1}, PolynomialDelta{4.0}, 200, rng);
  const auto reference = oracle::classical_ucb(mu, 200, 4.0);
  std::vector<std::size_t> pulls;
  for (const auto& r : trace.rounds) pulls.push_back(r.expert);
  CHECK(pulls == reference);
}

TEST_CASE("trace invariants: conservation, contiguity, ranges") {
  const auto g = default_grid();
  RngStream rng(17);
  const EpisodeSchedule schedule{4, 0.1};
  const auto trace = run_ucb(g.mdp, g.kernel, g.experts, schedule, PolynomialDelta{4.0}, 500, rng);
  CHECK(trace.initial_state == default_layout().start_state());
  long steps = 0;
  for (std::size_t n = 0; n < trace.size(); ++n) {
    const auto& r = trace.rounds[n];
    CHECK(r.round == n);
    CHECK(r.length == episode_length(schedule, n));
    steps += r.length;
    CHECK(std::accumulate(r.pulls.begin(), r.pulls.end(), std::size_t{0}) == n + 1);
    CHECK(r.average_reward >= 0.0);
    CHECK(r.average_reward <= 1.0);
    for (std::size_t i = 0; i < r.pulls.size(); ++i) {
      CHECK(std::isinf(r.radii(static_cast<Index>(i))) == (r.pulls[i] == 0));
      if (r.pulls[i] > 0) {
        CHECK(r.means(static_cast<Index>(i)) >= 0.0);
        CHECK(r.means(static_cast<Index>(i)) <= 1.0);
      }
    }
  }
  CHECK(steps > 0);
}

TEST_CASE("MDP state carries over between episodes") {
  const auto g = default_grid();
  RngStream a(4);
  const auto trace = run_ucb(g.mdp, g.kernel, g.experts, {4, 0.1}, PolynomialDelta{4.0}, 50, a);
  // Replay round by round from the same stream.
  RngStream b(4);
  Index s = sample_initial_state(g.mdp, b);
  for (const auto& r : trace.rounds) {
    const auto ep = run_episode(g.mdp, g.kernel, g.experts[r.expert], r.length, s, b);
    CHECK(ep.average_reward == r.average_reward);
    s = ep.final_state;
  }
  CHECK(s == trace.terminal_state);
}

TEST_CASE("identical seeds give identical traces") {
  const auto g = default_grid();
  RngStream a(42), b(42);
  const auto ta = run_ucb(g.mdp, g.kernel, g.experts, {4, 0.1}, PolynomialDelta{4.0}, 300, a);
  const auto tb = run_ucb(g.mdp, g.kernel, g.experts, {4, 0.1}, PolynomialDelta{4.0}, 300, b);
  for (std::size_t n = 0; n < ta.size(); ++n) {
    CHECK(ta.rounds[n].expert == tb.rounds[n].expert);
    CHECK(ta.rounds[n].average_reward == tb.rounds[n].average_reward);
  }
}

TEST_CASE("baselines") {
  const auto g = default_grid();
  RngStream rng(6);
  const auto uniform = run_baseline(Baseline::uniform(), g.mdp, g.kernel, g.experts, {4, 0.1},
                                    PolynomialDelta{4.0}, 4000, rng);
  for (std::size_t e = 0; e < 4; ++e) {
    const double frac = static_cast<double>(uniform.rounds.back().pulls[e]) / 4000.0;
    CHECK(std::abs(frac - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / 4000.0));
  }

  const auto fixed = run_baseline(Baseline::fixed(2), g.mdp, g.kernel, g.experts, {4, 0.1},
                                   PolynomialDelta{4.0}, 100, rng);
  for (const auto& r : fixed.rounds) CHECK(r.expert == 2);

  const auto greedy = run_baseline(Baseline::epsilon_greedy(0.0), g.mdp, g.kernel, g.experts,
                                   {4, 0.1}, PolynomialDelta{4.0}, 10, rng);
  for (std::size_t n = 0; n < 4; ++n) CHECK(greedy.rounds[n].expert == n);

  CHECK_THROWS_AS(make_selector(Baseline::fixed(9), 4), std::invalid_argument);
  CHECK_THROWS_AS(make_selector(Baseline::epsilon_greedy(1.5), 4), std::invalid_argument);
  CHECK(Baseline::oracle(0).name() == "oracle");
}

TEST_CASE("confidence coverage with fixed delta") {
  // 500 repetitions of 20 pulls of one expert on a fresh MDP each time.
  const auto g = default_grid();
  const double delta = 0.05;
  const long t0 = 4;
  double max_k = 0.0;
  std::vector<double> steady;
  for (const auto& p : g.experts) {
    const auto stats = analyze_chain(induce_chain(g.mdp, g.kernel, p));
    max_k = std::max(max_k, stats.bias_constant);
    steady.push_back(stats.steady_state_reward);
  }
  const int reps = 500;
  for (std::size_t e = 0; e < g.experts.size(); ++e) {
    int violations = 0;
    for (int rep = 0; rep < reps; ++rep) {
      RngStream rng(1000 + static_cast<std::uint64_t>(rep));
      const auto trace = run_baseline(Baseline::fixed(e), g.mdp, g.kernel, g.experts, {t0, 0.1},
                                      FixedDelta{delta}, 20, rng);
      const auto& last = trace.rounds.back();
      const double upper = last.means(static_cast<Index>(e)) + last.radii(static_cast<Index>(e)) +
                           max_k / static_cast<double>(t0);
      violations += steady[e] > upper;
    }
    CHECK(violations / double(reps) <= delta + 3.0 * std::sqrt(delta * (1.0 - delta) / reps));
  }
}
