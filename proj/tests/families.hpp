#pragma once

// Shared benchmark systems used across the test suites.

#include <vector>

#include "affdim/ifs.hpp"

namespace affdim::fam {

inline Ifs quarter_square() {
  std::vector<AffineMap2> maps;
  for (double dx : {0.0, 0.5})
    for (double dy : {0.0, 0.5})
      maps.push_back({Mat2::diagonal(0.5, 0.5), Vec2{dx, dy}});
  return Ifs(maps);
}

inline Ifs diagonal_segment() {
  return Ifs({{Mat2::diagonal(0.5, 0.5), Vec2{0, 0}}, {Mat2::diagonal(0.5, 0.5), Vec2{0.5, 0.5}}});
}

// the acceptance benchmark: BM(4, 2) with digits (0,0), (0,1), (2,0)
inline Ifs bm_benchmark() {
  std::vector<AffineMap2> maps;
  for (auto [i, j] : std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {2, 0}})
    maps.push_back({Mat2::diagonal(0.25, 0.5), Vec2{i / 4.0, j / 2.0}});
  return Ifs(maps);
}

// the acceptance benchmark: FJ with beta=1/2, alpha=1/3, b=(0,0,1/2), a=(0,1/3,2/3)
inline Ifs fj_benchmark() {
  std::vector<AffineMap2> maps;
  const std::vector<std::pair<double, double>> offs{{0, 0}, {0, 1.0 / 3}, {0.5, 2.0 / 3}};
  for (auto [b, a] : offs)
    maps.push_back({Mat2::diagonal(0.5, 1.0 / 3), Vec2{b, a}});
  return Ifs(maps);
}

inline SimilarityIfs1D cantor1d() {
  return SimilarityIfs1D({{1.0 / 3, 0.0}, {1.0 / 3, 2.0 / 3}});
}

}  // namespace affdim::fam
