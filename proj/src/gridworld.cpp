#include "expertucb/gridworld.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

namespace expertucb {

namespace {

// Left-right mirror image apart from the start. Goals sit side by side in
// the bottom row between grays; edge traps flank the approach.
constexpr std::string_view kDefaultLayout =
    "NNNNSN\n"
    "NNNNNN\n"
    "NNNNNN\n"
    "NNNNNN\n"
    "TNNNNT\n"
    "NYGGYN\n";

}  // namespace

char tile_char(TileKind kind) {
  switch (kind) {
    case TileKind::Start: return 'S';
    case TileKind::Normal: return 'N';
    case TileKind::Goal: return 'G';
    case TileKind::Gray: return 'Y';
    case TileKind::Trap: return 'T';
  }
  return '?';
}

TileKind tile_from_char(char c) {
  switch (c) {
    case 'S': return TileKind::Start;
    case 'N': return TileKind::Normal;
    case 'G': return TileKind::Goal;
    case 'Y': return TileKind::Gray;
    case 'T': return TileKind::Trap;
    default: break;
  }
  throw std::invalid_argument(std::string("unknown tile character '") + c +
                              "' (expected S, N, G, Y or T)");
}

GridLayout::GridLayout(int rows, int cols, std::vector<TileKind> tiles)
    : rows_(rows), cols_(cols), tiles_(std::move(tiles)) {
  if (rows_ <= 0 || cols_ <= 0) throw std::invalid_argument("grid must be non-empty");
  if (tiles_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_))
    throw std::invalid_argument("tile count does not match grid dimensions");
  const auto starts = std::count(tiles_.begin(), tiles_.end(), TileKind::Start);
  if (starts != 1)
    throw std::invalid_argument("grid must contain exactly one Start tile, found " +
                                std::to_string(starts));
  start_ = static_cast<Index>(std::find(tiles_.begin(), tiles_.end(), TileKind::Start) -
                              tiles_.begin());
}

GridLayout GridLayout::parse(std::string_view text) {
  std::vector<TileKind> tiles;
  int rows = 0;
  int cols = -1;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line.erase(std::remove_if(line.begin(), line.end(),
                              [](unsigned char ch) { return std::isspace(ch); }),
               line.end());
    if (line.empty() || line.front() == '#') continue;
    if (cols >= 0 && static_cast<int>(line.size()) != cols)
      throw std::invalid_argument("grid is not rectangular: line " + std::to_string(line_no) +
                                  " has " + std::to_string(line.size()) + " tiles, expected " +
                                  std::to_string(cols));
    cols = static_cast<int>(line.size());
    for (char c : line) {
      try {
        tiles.push_back(tile_from_char(c));
      } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    ++rows;
  }
  if (rows == 0) throw std::invalid_argument("grid must be non-empty");
  return GridLayout(rows, cols, std::move(tiles));
}

GridLayout GridLayout::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open layout file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string GridLayout::to_string() const {
  std::string out;
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) out += tile_char(at(r, c));
    out += '\n';
  }
  return out;
}

std::string_view default_layout_text() { return kDefaultLayout; }

const GridLayout& default_layout() {
  static const GridLayout layout = GridLayout::parse(kDefaultLayout);
  return layout;
}

ActionPermutation::ActionPermutation(std::vector<int> perm) : perm_(std::move(perm)) {
  std::vector<int> sorted = perm_;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expected(perm_.size());
  std::iota(expected.begin(), expected.end(), 0);
  if (perm_.empty() || sorted != expected) {
    std::string shown;
    for (std::size_t i = 0; i < perm_.size(); ++i) shown += (i ? "," : "") + std::to_string(perm_[i]);
    throw std::invalid_argument("permutation [" + shown + "] is not a bijection");
  }
}

ActionPermutation ActionPermutation::identity(int size) {
  std::vector<int> perm(static_cast<std::size_t>(size));
  std::iota(perm.begin(), perm.end(), 0);
  return ActionPermutation(std::move(perm));
}

ActionPermutation ActionPermutation::inverse() const {
  std::vector<int> inv(perm_.size());
  for (std::size_t a = 0; a < perm_.size(); ++a) inv[static_cast<std::size_t>(perm_[a])] = static_cast<int>(a);
  return ActionPermutation(std::move(inv));
}

std::vector<ActionPermutation> default_permutations() {
  return {
      ActionPermutation({kUp, kRight, kDown, kLeft}),
      ActionPermutation({kUp, kLeft, kDown, kRight}),
      ActionPermutation({kRight, kDown, kLeft, kUp}),
      ActionPermutation({kLeft, kDown, kRight, kUp}),
  };
}

}  // namespace expertucb
