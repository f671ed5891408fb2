#pragma once

#include <iosfwd>

#include "affdim/dyadic.hpp"
#include "affdim/estimate.hpp"
#include "affdim/ifs.hpp"
#include "affdim/semigroup.hpp"

namespace affdim {

// A tube pi_V^-1(B(z, r)): points whose orthogonal projection onto V lies
// within r of z. z and r are in the raw arc-length coordinate <x, e_V> of
// the normalized square.
struct TubeQuery {
  Direction v;
  double z = 0;
  double r = 0;
};

struct BoxDimensions {
  DimensionEstimate lower;
  DimensionEstimate upper;
};

// Least-squares slopes of log2 N_n over the finest half of the pyramid;
// lower/upper take the min/max slope over sliding windows.
BoxDimensions box_dimensions(const CellSetPyramid& pyramid);

struct AssouadOptions {
  std::vector<int> k_range{2, 4, 6};
  int m = 8;
  // rasterize below the counting range when feasible, so the outer slack
  // does not contaminate the deepest counts
  int raster_margin = 4;
  int raster_cap = 16;     // 2-D rasterization level cap
  int raster_cap_1d = 40;  // cap for the projected 1-D fast path
  RasterOptions raster;
};

// Two-scale window scan: for each coarse level k, the max over occupied
// Q in D_k of N_{k+n}(K cap Q), slope over 0 <= n <= m; the best (largest)
// slope over k_range is reported. An anytime lower bound for dim_A.
DimensionEstimate assouad_estimate(const Ifs& ifs, const AssouadOptions& opts);

// Same scan on an existing fine cell set (level >= max k + m).
DimensionEstimate assouad_scan(const CellSet& cells, const std::vector<int>& k_range, int m,
                               const char* method = "assouad");

// Orthogonal projection of the cells onto the line V, as level-out_level
// dyadic intervals of the arc-length coordinate rescaled by 1/sqrt(2) into
// [0,1]. Outer approximation.
CellSet project_cells(const CellSet& cells, const Direction& v, int out_level);

// Two-scale scan run on project_cells output per level.
DimensionEstimate assouad_projection(const Ifs& ifs, const Direction& v,
                                     const AssouadOptions& opts);

// Cells among `cells` (truncated to count_level) meeting the closed strip
// |<x, e_V> - z| <= r.
std::int64_t tube_count(const CellSet& cells, const TubeQuery& q, int count_level);

struct DeltaOptions {
  std::vector<int> levels{6, 8, 10, 12};
  RasterOptions raster;
};

// Tube dimension Delta_V: for each level n, r = 2^-n, maximize tube_count
// over tube centres drawn from occupied projection cells; slope of the max
// log2 count against n.
DimensionEstimate delta_estimate(const Ifs& ifs, const Direction& v, const DeltaOptions& opts);

// CSV serialization: long-format rows "method,value,stderr,k,m,n,log2count".
void write_estimate_csv(std::ostream& os, const DimensionEstimate& est);

}  // namespace affdim
