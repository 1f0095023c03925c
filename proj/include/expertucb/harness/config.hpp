#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "expertucb/controller.hpp"
#include "expertucb/gridworld.hpp"

namespace expertucb::harness {

/// Malformed file, unknown key, or a value violating its constraint.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SelectorSpec {
  enum class Kind { Ucb, Oracle, Uniform, Fixed, EpsilonGreedy };
  Kind kind = Kind::Ucb;
  std::size_t expert = 0;
  double epsilon = 0.1;

  static SelectorSpec parse(const std::string& text);
  std::string to_string() const;
  bool is_ucb() const { return kind == Kind::Ucb; }
};

struct ExperimentConfig {
  // [grid]
  std::string layout = "default";
  std::vector<std::string> inline_rows;
  GridDynamicsParams dynamics;

  // [experts]
  std::vector<std::vector<int>> permutations;
  std::vector<double> training_noise;  // empty: no observation-aware training
  double discount = 0.95;
  double train_tol = 1e-8;
  std::size_t train_max_iter = 100000;

  // [observation]
  double epsilon = 0.0;

  // [schedule]
  EpisodeSchedule schedule{4, 0.1};
  std::vector<long> sweep_t0{4, 40};

  // [delta]
  DeltaSchedule deltas = PolynomialDelta{4.0};

  // [run]
  std::size_t rounds = 3000;
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;
  SelectorSpec selector;
  TieBreak tie_break = TieBreak::LowestIndex;
  std::size_t threads = 0;  // 0: hardware concurrency

  std::string base_dir = ".";  // directory relative layout paths resolve against

  std::size_t num_experts() const { return permutations.size(); }
  GridLayout grid() const;
  void validate() const;
};

ExperimentConfig default_config();

/// Parses INI text. Throws ConfigError naming the line, key or constraint.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Documented reference configuration holding every default.
std::string default_config_text();

}  // namespace expertucb::harness
