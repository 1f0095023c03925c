#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "expertucb/mdp.hpp"

namespace expertucb {

enum class TileKind { Start, Normal, Goal, Gray, Trap };

char tile_char(TileKind kind);
TileKind tile_from_char(char c);

/// Movement directions; action index `a` of the built MDP moves in direction `a`.
enum Direction : int { kUp = 0, kRight = 1, kDown = 2, kLeft = 3 };
inline constexpr int kNumDirections = 4;

/// Rectangular grid of tiles with exactly one Start tile. State index of
/// tile (row, col) is row * cols + col.
class GridLayout {
 public:
  GridLayout(int rows, int cols, std::vector<TileKind> tiles);

  /// Parses rows of S/N/G/Y/T characters, one row per line. Blank lines and
  /// lines starting with '#' are skipped.
  static GridLayout parse(std::string_view text);
  static GridLayout load(const std::string& path);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Index num_states() const { return static_cast<Index>(rows_) * cols_; }
  TileKind at(int row, int col) const { return tiles_[index(row, col)]; }
  TileKind at(Index state) const { return tiles_[static_cast<std::size_t>(state)]; }
  Index start_state() const { return start_; }
  Index state_of(int row, int col) const { return static_cast<Index>(index(row, col)); }
  std::string to_string() const;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(col);
  }

  int rows_;
  int cols_;
  std::vector<TileKind> tiles_;
  Index start_ = 0;
};

/// Layout shipped as the default experiment grid.
const GridLayout& default_layout();
std::string_view default_layout_text();

struct GridDynamicsParams {
  double p_intended = 0.97;
  double p_trap_escape = 0.02;
};

/// Reward collected on entering a tile of the given kind.
inline double tile_reward(TileKind kind) {
  switch (kind) {
    case TileKind::Goal: return 1.0;
    case TileKind::Gray: return 0.1;
    default: return 0.0;
  }
}

/// Bijection from nominal action labels to movement directions.
class ActionPermutation {
 public:
  explicit ActionPermutation(std::vector<int> perm);
  static ActionPermutation identity(int size);

  int size() const { return static_cast<int>(perm_.size()); }
  int operator()(int action) const { return perm_[static_cast<std::size_t>(action)]; }
  const std::vector<int>& values() const { return perm_; }
  ActionPermutation inverse() const;

 private:
  std::vector<int> perm_;
};

/// Believed-dynamics permutations for experts e1..e4: identity, left/right
/// swap, a rotation by one (nominal 3 moves up), and that rotation with
/// left and right exchanged.
std::vector<ActionPermutation> default_permutations();

namespace detail {

inline bool move(int rows, int cols, int row, int col, int dir, int& out_row, int& out_col) {
  static constexpr std::array<int, 4> dr{-1, 0, 1, 0};
  static constexpr std::array<int, 4> dc{0, 1, 0, -1};
  out_row = row + dr[static_cast<std::size_t>(dir)];
  out_col = col + dc[static_cast<std::size_t>(dir)];
  return out_row >= 0 && out_row < rows && out_col >= 0 && out_col < cols;
}

}  // namespace detail

/// Tabular MDP for a grid. Off-grid probability mass is spread uniformly
/// over the in-grid directions of the current tile.
template <typename Scalar = double>
Mdp<Scalar> build_gridworld(const GridLayout& layout, const GridDynamicsParams& params = {},
                            Scalar discount = Scalar(0.95)) {
  if (!(params.p_intended >= 0.0 && params.p_intended <= 1.0) ||
      !(params.p_trap_escape >= 0.0 && params.p_trap_escape <= 1.0))
    throw std::invalid_argument("grid dynamics probabilities must lie in [0,1]");

  const Index n = layout.num_states();
  const int rows = layout.rows();
  const int cols = layout.cols();
  Mdp<Scalar> mdp;
  mdp.discount = discount;
  mdp.initial = VectorX<Scalar>::Zero(n);
  mdp.initial(layout.start_state()) = Scalar(1);

  MatrixX<Scalar> entry_reward(n, n);
  for (Index t = 0; t < n; ++t)
    entry_reward.col(t).setConstant(static_cast<Scalar>(tile_reward(layout.at(t))));

  for (int a = 0; a < kNumDirections; ++a) {
    MatrixX<Scalar> p = MatrixX<Scalar>::Zero(n, n);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const Index s = layout.state_of(r, c);
        std::array<double, kNumDirections> weight{};
        double stay = 0.0;
        if (layout.at(r, c) == TileKind::Trap) {
          stay = 1.0 - params.p_trap_escape;
          weight[static_cast<std::size_t>(a)] = params.p_trap_escape;
        } else {
          weight.fill((1.0 - params.p_intended) / (kNumDirections - 1));
          weight[static_cast<std::size_t>(a)] = params.p_intended;
        }

        std::array<Index, kNumDirections> target{};
        std::array<bool, kNumDirections> inside{};
        int num_inside = 0;
        for (int d = 0; d < kNumDirections; ++d) {
          int nr = 0, nc = 0;
          inside[static_cast<std::size_t>(d)] = detail::move(rows, cols, r, c, d, nr, nc);
          if (inside[static_cast<std::size_t>(d)]) {
            target[static_cast<std::size_t>(d)] = layout.state_of(nr, nc);
            ++num_inside;
          }
        }

        double off_grid = 0.0;
        for (int d = 0; d < kNumDirections; ++d) {
          const auto k = static_cast<std::size_t>(d);
          if (inside[k]) {
            p(s, target[k]) += static_cast<Scalar>(weight[k]);
          } else {
            off_grid += weight[k];
          }
        }
        if (num_inside == 0) {
          stay += off_grid;
        } else if (off_grid > 0.0) {
          for (int d = 0; d < kNumDirections; ++d) {
            const auto k = static_cast<std::size_t>(d);
            if (inside[k]) p(s, target[k]) += static_cast<Scalar>(off_grid / num_inside);
          }
        }
        p(s, s) += static_cast<Scalar>(stay);
      }
    }
    mdp.transitions.push_back(std::move(p));
    mdp.rewards.push_back(entry_reward);
  }
  return mdp;
}

/// MDP whose action `a` behaves like action `perm(a)` of the source.
template <typename Scalar>
Mdp<Scalar> permute_actions(const Mdp<Scalar>& mdp, const ActionPermutation& perm) {
  if (perm.size() != mdp.num_actions())
    throw std::invalid_argument("permutation size " + std::to_string(perm.size()) +
                                " does not match action count " +
                                std::to_string(mdp.num_actions()));
  Mdp<Scalar> out;
  out.discount = mdp.discount;
  out.initial = mdp.initial;
  for (int a = 0; a < perm.size(); ++a) {
    const auto src = static_cast<std::size_t>(perm(a));
    out.transitions.push_back(mdp.transitions[src]);
    out.rewards.push_back(mdp.rewards[src]);
  }
  return out;
}

/// Uniform corruption: the true state is reported with probability 1 - eps,
/// otherwise a uniformly random state (possibly the true one) is reported.
template <typename Scalar = double>
ObservationKernel<Scalar> corruption_kernel(Index num_states, double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("corruption epsilon must lie in [0,1]");
  if (num_states <= 0) throw std::invalid_argument("corruption kernel needs at least one state");
  const Scalar off = static_cast<Scalar>(epsilon / static_cast<double>(num_states));
  MatrixX<Scalar> emission = MatrixX<Scalar>::Constant(num_states, num_states, off);
  emission.diagonal().array() += static_cast<Scalar>(1.0 - epsilon);
  return {std::move(emission)};
}

}  // namespace expertucb
