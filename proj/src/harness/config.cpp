#include "expertucb/harness/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace expertucb::harness {

namespace pt = boost::property_tree;

namespace {

constexpr const char* kReferenceConfig = R"(# Expert-selection experiment configuration.
# Every key is optional; the values below are the defaults.

[grid]
# "default" selects the built-in layout; anything else is a layout file path
# (relative paths resolve against this file's directory).
layout = default
# Inline layout rows separated by commas, using S/N/G/Y/T tiles
# (Start/Normal/Goal/Gray/Trap). Overrides `layout` when non-empty.
rows =
p_intended = 0.97
p_trap_escape = 0.02

[experts]
# One permutation per expert, separated by ';'. Entry a is the movement
# direction the expert believes nominal action a produces
# (0 = up, 1 = right, 2 = down, 3 = left).
permutations = 0,1,2,3; 0,3,2,1; 1,2,3,0; 3,2,1,0
# Optional observation-corruption level each expert is trained under,
# one value per expert. Empty trains on exact observations.
training_noise =
discount = 0.95
tol = 1e-8
max_iter = 100000

[observation]
# Corruption level of the observation kernel during runs.
epsilon = 0

[schedule]
# Episode lengths T_n = ceil(t0 + c n).
t0 = 4
c = 0.1
# T0 values visited by the sweep subcommand.
sweep_t0 = 4, 40

[delta]
# polynomial: delta(n) = n^-alpha (radii refreshed every round)
# fixed:      constant delta
kind = polynomial
alpha = 4
delta = 0.05

[run]
rounds = 3000
repetitions = 10
seed = 1
# ucb | oracle | uniform | fixed:<expert> | epsilon_greedy:<epsilon>
selector = ucb
# lowest | random
tie_break = lowest
# Worker threads for repetitions; 0 uses the hardware concurrency.
threads = 0
)";

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"grid", {"layout", "rows", "p_intended", "p_trap_escape"}},
      {"experts", {"permutations", "training_noise", "discount", "tol", "max_iter"}},
      {"observation", {"epsilon"}},
      {"schedule", {"t0", "c", "sweep_t0"}},
      {"delta", {"kind", "alpha", "delta"}},
      {"run", {"rounds", "repetitions", "seed", "selector", "tie_break", "threads"}},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

template <typename T>
T parse_number(const std::string& field, const std::string& text) {
  std::istringstream in(text);
  T value{};
  in >> value;
  if (in.fail() || !(in >> std::ws).eof())
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", field, text));
  return value;
}

long parse_integer(const std::string& field, const std::string& text) {
  if (text.find_first_of(".eE") != std::string::npos)
    throw ConfigError(fmt::format("{}: expected an integer, got '{}'", field, text));
  return parse_number<long>(field, text);
}

std::size_t parse_count(const std::string& field, const std::string& text) {
  const long v = parse_integer(field, text);
  if (v < 0) throw ConfigError(fmt::format("{}: must be >= 0", field));
  return static_cast<std::size_t>(v);
}

}  // namespace

SelectorSpec SelectorSpec::parse(const std::string& raw) {
  const std::string text = trim(raw);
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  SelectorSpec spec;
  if (head == "ucb" && arg.empty()) {
    spec.kind = Kind::Ucb;
  } else if (head == "oracle" && arg.empty()) {
    spec.kind = Kind::Oracle;
  } else if (head == "uniform" && arg.empty()) {
    spec.kind = Kind::Uniform;
  } else if (head == "fixed" && !arg.empty()) {
    spec.kind = Kind::Fixed;
    const long e = parse_integer("run.selector", arg);
    if (e < 0) throw ConfigError("run.selector: fixed expert index must be >= 0");
    spec.expert = static_cast<std::size_t>(e);
  } else if (head == "epsilon_greedy" && !arg.empty()) {
    spec.kind = Kind::EpsilonGreedy;
    spec.epsilon = parse_number<double>("run.selector", arg);
    if (!(spec.epsilon >= 0.0 && spec.epsilon <= 1.0))
      throw ConfigError("run.selector: epsilon must lie in [0,1]");
  } else {
    throw ConfigError("run.selector: unknown selector '" + text +
                      "' (expected ucb, oracle, uniform, fixed:<e> or epsilon_greedy:<eps>)");
  }
  return spec;
}

std::string SelectorSpec::to_string() const {
  switch (kind) {
    case Kind::Ucb: return "ucb";
    case Kind::Oracle: return "oracle";
    case Kind::Uniform: return "uniform";
    case Kind::Fixed: return fmt::format("fixed:{}", expert);
    case Kind::EpsilonGreedy: return fmt::format("epsilon_greedy:{}", epsilon);
  }
  return "?";
}

GridLayout ExperimentConfig::grid() const {
  if (!inline_rows.empty()) {
    std::string text;
    for (const auto& row : inline_rows) text += row + '\n';
    return GridLayout::parse(text);
  }
  if (layout == "default") return default_layout();
  std::filesystem::path path(layout);
  if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
  return GridLayout::load(path.string());
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(dynamics.p_intended >= 0.0 && dynamics.p_intended <= 1.0))
    fail("grid.p_intended must lie in [0,1]");
  if (!(dynamics.p_trap_escape >= 0.0 && dynamics.p_trap_escape <= 1.0))
    fail("grid.p_trap_escape must lie in [0,1]");
  if (permutations.empty()) fail("experts.permutations must list at least one expert");
  for (const auto& perm : permutations) {
    if (perm.size() != kNumDirections)
      fail(fmt::format("experts.permutations: each permutation needs {} entries", kNumDirections));
    try {
      ActionPermutation p(perm);
    } catch (const std::invalid_argument& e) {
      fail(std::string("experts.permutations: ") + e.what());
    }
  }
  if (!training_noise.empty() && training_noise.size() != permutations.size())
    fail("experts.training_noise must list one value per expert");
  for (double eps : training_noise)
    if (!(eps >= 0.0 && eps <= 1.0)) fail("experts.training_noise values must lie in [0,1]");
  if (!(discount >= 0.0 && discount < 1.0)) fail("experts.discount must lie in [0,1)");
  if (!(train_tol > 0.0)) fail("experts.tol must be > 0");
  if (train_max_iter < 1) fail("experts.max_iter must be >= 1");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("observation.epsilon must lie in [0,1]");
  if (schedule.t0 < 1) fail("t0 must be >= 1");
  if (!(schedule.growth >= 0.0)) fail("schedule.c must be >= 0");
  for (long t : sweep_t0)
    if (t < 1) fail("schedule.sweep_t0: t0 must be >= 1");
  try {
    expertucb::validate(deltas);
  } catch (const std::invalid_argument& e) {
    fail(std::string("delta: ") + e.what());
  }
  if (repetitions < 1) fail("run.repetitions must be >= 1");
  if (rounds < num_experts())
    fail(fmt::format("run.rounds must be >= number of experts ({})", num_experts()));
  if ((selector.kind == SelectorSpec::Kind::Fixed) && selector.expert >= num_experts())
    fail(fmt::format("run.selector: fixed expert {} out of range", selector.expert));
  // Surface layout problems as configuration errors.
  try {
    (void)grid();
  } catch (const std::exception& e) {
    fail(std::string("grid: ") + e.what());
  }
}

ExperimentConfig default_config() { return parse_config(kReferenceConfig); }

std::string default_config_text() { return kReferenceConfig; }

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("parse error at line {}: {}", e.line(), e.message()));
  }

  std::vector<std::string> unknown;
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      unknown.push_back("[" + section + "]");
      continue;
    }
    if (body.empty() && !body.data().empty()) {
      unknown.push_back(section + " (key outside any section)");
      continue;
    }
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) unknown.push_back(section + "." + key);
  }
  if (!unknown.empty()) {
    std::string names;
    for (const auto& u : unknown) names += (names.empty() ? "" : ", ") + u;
    throw ConfigError("unknown configuration keys: " + names);
  }

  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.permutations.clear();
  for (const auto& perm : default_permutations()) cfg.permutations.push_back(perm.values());

  auto get = [&](const std::string& key) -> std::optional<std::string> {
    if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'))) {
      std::string t = trim(*v);
      if (!t.empty()) return t;
    }
    return std::nullopt;
  };

  if (auto v = get("grid.layout")) cfg.layout = *v;
  if (auto v = get("grid.rows")) cfg.inline_rows = split(*v, ',');
  if (auto v = get("grid.p_intended")) cfg.dynamics.p_intended = parse_number<double>("grid.p_intended", *v);
  if (auto v = get("grid.p_trap_escape"))
    cfg.dynamics.p_trap_escape = parse_number<double>("grid.p_trap_escape", *v);

  if (auto v = get("experts.permutations")) {
    cfg.permutations.clear();
    for (const auto& group : split(*v, ';')) {
      std::vector<int> perm;
      for (const auto& item : split(group, ','))
        perm.push_back(static_cast<int>(parse_integer("experts.permutations", item)));
      cfg.permutations.push_back(std::move(perm));
    }
  }
  if (auto v = get("experts.training_noise"))
    for (const auto& item : split(*v, ','))
      cfg.training_noise.push_back(parse_number<double>("experts.training_noise", item));
  if (auto v = get("experts.discount")) cfg.discount = parse_number<double>("experts.discount", *v);
  if (auto v = get("experts.tol")) cfg.train_tol = parse_number<double>("experts.tol", *v);
  if (auto v = get("experts.max_iter")) cfg.train_max_iter = parse_count("experts.max_iter", *v);

  if (auto v = get("observation.epsilon")) cfg.epsilon = parse_number<double>("observation.epsilon", *v);

  if (auto v = get("schedule.t0")) cfg.schedule.t0 = parse_integer("schedule.t0", *v);
  if (auto v = get("schedule.c")) cfg.schedule.growth = parse_number<double>("schedule.c", *v);
  if (auto v = get("schedule.sweep_t0")) {
    cfg.sweep_t0.clear();
    for (const auto& item : split(*v, ',')) cfg.sweep_t0.push_back(parse_integer("schedule.sweep_t0", item));
  }

  const std::string kind = get("delta.kind").value_or("polynomial");
  const double alpha = get("delta.alpha") ? parse_number<double>("delta.alpha", *get("delta.alpha")) : 4.0;
  const double delta = get("delta.delta") ? parse_number<double>("delta.delta", *get("delta.delta")) : 0.05;
  if (kind == "polynomial") {
    cfg.deltas = PolynomialDelta{alpha};
  } else if (kind == "fixed") {
    cfg.deltas = FixedDelta{delta};
  } else {
    throw ConfigError("delta.kind: expected 'polynomial' or 'fixed', got '" + kind + "'");
  }

  if (auto v = get("run.rounds")) cfg.rounds = parse_count("run.rounds", *v);
  if (auto v = get("run.repetitions")) cfg.repetitions = parse_count("run.repetitions", *v);
  if (auto v = get("run.seed")) {
    if (v->front() == '-') throw ConfigError("run.seed: must be a non-negative integer");
    cfg.seed = parse_number<std::uint64_t>("run.seed", *v);
  }
  if (auto v = get("run.selector")) cfg.selector = SelectorSpec::parse(*v);
  if (auto v = get("run.tie_break")) {
    if (*v == "lowest") {
      cfg.tie_break = TieBreak::LowestIndex;
    } else if (*v == "random") {
      cfg.tie_break = TieBreak::Random;
    } else {
      throw ConfigError("run.tie_break: expected 'lowest' or 'random', got '" + *v + "'");
    }
  }
  if (auto v = get("run.threads")) cfg.threads = parse_count("run.threads", *v);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config(buffer.str(), dir.empty() ? "." : dir.string());
}

}  // namespace expertucb::harness
