#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sanmt/numerics.hpp"

namespace sanmt {

struct Link {
  std::size_t source = 0;
  std::size_t target = 0;

  auto operator<=>(const Link&) const = default;
};

using LinkSet = std::set<Link>;

// Word links between a source sentence of m words and a target of n words,
// 0-based and excluding eol.
struct HardAlignment {
  std::size_t m = 0;
  std::size_t n = 0;
  LinkSet links;
};

enum class PharaohOrder {
  SourceTarget,  // "i-j": source i, target j (fast_align)
  TargetSource,  // "j-i"
};

HardAlignment parse_pharaoh(std::string_view line, std::size_t m, std::size_t n,
                            PharaohOrder order = PharaohOrder::SourceTarget);
std::string format_pharaoh(const LinkSet& links);

// Row-stochastic (n+1)×(m+1) supervision, rows = target positions, columns =
// source positions, eol last on both axes:
//  - a target word with k links spreads 1/k over them;
//  - an unlinked target word copies the row of the nearest linked target
//    word, the right neighbour winning a distance tie;
//  - with no links at all every word row is uniform over the m source words;
//  - the eol row is one-hot on the eol column.
Matrix to_supervision(const HardAlignment& hard);

bool is_row_stochastic(const Matrix& m, double tolerance = 1e-9);

// Supervision file: per matrix a "rows cols" line followed by `rows` lines of
// space-separated values.
void save_supervision(const std::filesystem::path& path, std::span<const Matrix> matrices);
std::vector<Matrix> load_supervision(const std::filesystem::path& path);

}  // namespace sanmt
