#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "affdim/error.hpp"

namespace affdim {

// Level caps: 1-D coordinates must fit an int64, 2-D coordinates must fit a
// single interleaved 64-bit key. Exceeding the cap is an error, never a
// silent truncation.
inline constexpr int kMaxLevel1d = 62;
inline constexpr int kMaxLevel2d = 31;

inline int max_level(int dim) { return dim == 1 ? kMaxLevel1d : kMaxLevel2d; }

struct Cell {
  std::int64_t x = 0;
  std::int64_t y = 0;  // unused (0) in dimension 1
  friend bool operator==(const Cell&, const Cell&) = default;
};

// A closed dyadic cube: prod_i [coords_i * 2^-level, (coords_i + 1) * 2^-level].
class DyadicCube {
 public:
  DyadicCube(int dim, int level, Cell coords);
  static DyadicCube root(int dim) { return DyadicCube(dim, 0, Cell{0, 0}); }

  int dim() const { return dim_; }
  int level() const { return level_; }
  Cell coords() const { return coords_; }
  std::uint64_t key() const;  // morton key in dim 2, x in dim 1

  double side() const;
  std::array<double, 2> lower() const;  // lower corner in [0,1]^d

 private:
  int dim_;
  int level_;
  Cell coords_;
};

// A finite union of same-level closed dyadic cubes. Immutable; cells are
// held as sorted unique keys so iteration order is canonical and every
// ancestor occupies a contiguous key range.
class CellSet {
 public:
  CellSet() = default;
  static CellSet from_cells(int dim, int level, const std::vector<Cell>& cells);
  static CellSet from_keys(int dim, int level, std::vector<std::uint64_t> keys, bool sorted_unique);

  int dim() const { return dim_; }
  int level() const { return level_; }
  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  std::span<const std::uint64_t> keys() const { return keys_; }
  Cell cell(std::size_t i) const;
  std::vector<Cell> cells() const;
  bool contains_key(std::uint64_t key) const;

  friend bool operator==(const CellSet&, const CellSet&) = default;

 private:
  int dim_ = 1;
  int level_ = 0;
  std::vector<std::uint64_t> keys_;
};

// --- covering numbers and renormalization ---

// Number of distinct level-n ancestors (N_n of the represented union).
std::int64_t covering_number(const CellSet& cells, int n);

// The level-n cell set obtained by truncating every cell (the ancestors).
CellSet truncate(const CellSet& cells, int n);

// All level-`level` closed cubes containing the point (up to 4 on grid lines).
CellSet point_cells(std::array<double, 2> point, int level);

// Sub-cellset of the cells lying inside Q, still at cells.level().
CellSet restrict_to(const CellSet& cells, const DyadicCube& q);

// restrict_to(cells, q) rescaled by the homothety mapping q onto [0,1]^d.
// Throws Errc::empty_result when nothing of `cells` lies in q.
CellSet renormalize(const CellSet& cells, const DyadicCube& q);

// --- Hausdorff-type distances ---
//
// Both sets are refined to their common level first; the distances returned
// are the exact (integer-arithmetic) Hausdorff distances between the two
// equal-size cell families. one_sided_distance(a,b) == 0 iff union(a) is
// contained in union(b).
double one_sided_distance(const CellSet& a, const CellSet& b);
double hausdorff_distance(const CellSet& a, const CellSet& b);

// --- pyramids ---

// Truncations of one fine cell set across all levels 0..finest; caches N_n.
class CellSetPyramid {
 public:
  explicit CellSetPyramid(const CellSet& finest);

  int dim() const { return dim_; }
  int finest_level() const { return finest_; }
  const CellSet& at(int level) const;
  std::int64_t count(int level) const { return static_cast<std::int64_t>(at(level).size()); }

 private:
  int dim_ = 1;
  int finest_ = 0;
  std::map<int, CellSet> levels_;
};

// --- serialization ---
// Line-oriented text: header "dim level count", then one cell per line as
// space-separated integers. Round-trips bit-exactly.
void write_cells(std::ostream& os, const CellSet& cells);
CellSet read_cells(std::istream& is);
void save_cells(const std::string& path, const CellSet& cells);
CellSet load_cells(const std::string& path);

}  // namespace affdim
