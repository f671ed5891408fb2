#pragma once

// Test-only exact oracles, independent of the library's rasterization path.
// Benchmark attractors with rational diagonal maps admit an exact
// "cell meets K" decision: pull the cell box back through inverse maps in
// integer arithmetic until it swallows [0,1]^d or leaves it.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "affdim/dyadic.hpp"

namespace affdim::oracle {

// Inverse map x -> scale*x - offset/denom (per axis), exact over integers.
struct InvAxis {
  std::int64_t scale;
  std::int64_t offset_num;  // offset in units of 1/denom
};

struct InvMap {
  InvAxis x;
  InvAxis y;  // ignored in dim 1
};

class ExactAttractor {
 public:
  ExactAttractor(int dim, std::int64_t denom, std::vector<InvMap> maps)
      : dim_(dim), denom_(denom), maps_(std::move(maps)) {}

  bool cell_meets(int level, Cell c) const {
    const __int128 unit = static_cast<__int128>(denom_) << level;
    const __int128 d = denom_;
    return box_meets(static_cast<__int128>(c.x) * d, (static_cast<__int128>(c.x) + 1) * d,
                     static_cast<__int128>(c.y) * d, (static_cast<__int128>(c.y) + 1) * d, unit,
                     level);
  }

  // exact level-L cell set, top-down (children of dead cells are never tried)
  CellSet cells(int level) const {
    std::vector<Cell> frontier{Cell{0, 0}};
    for (int l = 1; l <= level; ++l) {
      std::vector<Cell> next;
      for (const Cell& c : frontier) {
        for (std::int64_t dx = 0; dx < 2; ++dx) {
          if (dim_ == 1) {
            Cell child{2 * c.x + dx, 0};
            if (cell_meets(l, child)) next.push_back(child);
          } else {
            for (std::int64_t dy = 0; dy < 2; ++dy) {
              Cell child{2 * c.x + dx, 2 * c.y + dy};
              if (cell_meets(l, child)) next.push_back(child);
            }
          }
        }
      }
      frontier = std::move(next);
    }
    return CellSet::from_cells(dim_, level, frontier);
  }

 private:
  struct Box {
    __int128 xa, xb, ya, yb;
    friend bool operator<(const Box& a, const Box& b) {
      if (a.xa != b.xa) return a.xa < b.xa;
      if (a.xb != b.xb) return a.xb < b.xb;
      if (a.ya != b.ya) return a.ya < b.ya;
      return a.yb < b.yb;
    }
    friend bool operator==(const Box&, const Box&) = default;
  };

  // Breadth-first pull-back with per-generation dedup; duplicate words (from
  // repeated offsets) collapse instead of branching exponentially.
  bool box_meets(__int128 xa, __int128 xb, __int128 ya, __int128 yb, __int128 unit,
                 int level) const {
    const __int128 off_unit = __int128{1} << level;
    std::vector<Box> frontier{Box{xa, xb, ya, yb}};
    for (int gen = 0; gen <= 64 * (level + 4) && !frontier.empty(); ++gen) {
      std::vector<Box> next;
      for (const Box& b : frontier) {
        Box c = b;
        if (c.xa < 0) c.xa = 0;
        if (c.ya < 0) c.ya = 0;
        if (c.xb > unit) c.xb = unit;
        if (c.yb > unit) c.yb = unit;
        if (c.xa > c.xb) continue;
        if (dim_ == 2 && c.ya > c.yb) continue;
        const bool full_x = c.xa == 0 && c.xb == unit;
        const bool full_y = dim_ == 1 || (c.ya == 0 && c.yb == unit);
        if (full_x && full_y) return true;
        for (const InvMap& m : maps_) {
          Box n;
          n.xa = m.x.scale * c.xa - m.x.offset_num * off_unit;
          n.xb = m.x.scale * c.xb - m.x.offset_num * off_unit;
          if (dim_ == 2) {
            n.ya = m.y.scale * c.ya - m.y.offset_num * off_unit;
            n.yb = m.y.scale * c.yb - m.y.offset_num * off_unit;
          } else {
            n.ya = 0;
            n.yb = unit;
          }
          next.push_back(n);
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      frontier = std::move(next);
    }
    return false;
  }

  int dim_;
  std::int64_t denom_;
  std::vector<InvMap> maps_;
};

// middle-thirds Cantor set, maps x/3 and x/3 + 2/3; [0,1] is exact
inline ExactAttractor cantor() {
  return ExactAttractor(1, 1, {InvMap{{3, 0}, {1, 0}}, InvMap{{3, 2}, {1, 0}}});
}

// quarter-square system (attractor [0,1]^2)
inline ExactAttractor quarter_square() {
  std::vector<InvMap> maps;
  for (std::int64_t i = 0; i < 2; ++i)
    for (std::int64_t j = 0; j < 2; ++j) maps.push_back(InvMap{{2, i}, {2, j}});
  return ExactAttractor(2, 1, maps);
}

// two-map diagonal segment {x/2, x/2 + (1/2,1/2)}
inline ExactAttractor diagonal_segment() {
  return ExactAttractor(2, 1, {InvMap{{2, 0}, {2, 0}}, InvMap{{2, 1}, {2, 1}}});
}

// BM(4,2) digit family: corner-aligned normalization leaves the maps
// untouched, so the oracle works on ((x+i)/4, (y+j)/2) directly. Valid for
// digit sets whose attractor box has its corner at the origin.
inline ExactAttractor bm42_normalized(const std::vector<std::pair<int, int>>& digits) {
  std::vector<InvMap> maps;
  for (auto [i, j] : digits) maps.push_back(InvMap{{4, i}, {2, j}});
  return ExactAttractor(2, 1, maps);
}

// FJ with beta = 1/2, alpha = 1/3 and offsets in halves / thirds; the
// attractor box is exactly [0,1]^2 so normalization is the identity.
// Offsets are given as (2*b_i, 3*a_i), which must be integers.
inline ExactAttractor fj_half_third(const std::vector<std::pair<int, int>>& scaled_offsets) {
  std::vector<InvMap> maps;
  for (auto [b2, a3] : scaled_offsets) maps.push_back(InvMap{{2, b2}, {3, a3}});
  return ExactAttractor(2, 1, maps);
}

}  // namespace affdim::oracle
