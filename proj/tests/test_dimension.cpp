#include "affdim/dimension.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "families.hpp"
#include "oracles.hpp"

using namespace affdim;

namespace {

const double kCantorDim = std::log(2.0) / std::log(3.0);  // 0.6309...

CellSet full_square(int level) {
  std::vector<Cell> cells;
  const std::int64_t n = std::int64_t{1} << level;
  for (std::int64_t x = 0; x < n; ++x)
    for (std::int64_t y = 0; y < n; ++y) cells.push_back({x, y});
  return CellSet::from_cells(2, level, cells);
}

}  // namespace

TEST_CASE("box dimensions of flat cases") {
  const BoxDimensions sq = box_dimensions(CellSetPyramid(full_square(6)));
  CHECK(sq.lower.value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(sq.upper.value == doctest::Approx(2.0).epsilon(1e-9));

  const CellSet pt = CellSet::from_cells(2, 6, {{13, 37}});
  const BoxDimensions p = box_dimensions(CellSetPyramid(pt));
  CHECK(p.lower.value == doctest::Approx(0.0));
  CHECK(p.upper.value == doctest::Approx(0.0));

  CHECK_THROWS_AS(box_dimensions(CellSetPyramid(full_square(3))), Error);
}

TEST_CASE("box dimension of the cantor set") {
  const CellSet c16 = rasterize(fam::cantor1d(), 16);
  const BoxDimensions bd = box_dimensions(CellSetPyramid(c16));
  CHECK(std::fabs(bd.lower.value - kCantorDim) < 0.02);
  CHECK(std::fabs(bd.upper.value - kCantorDim) < 0.02);
}

TEST_CASE("assouad estimate of the full square") {
  AssouadOptions opts;
  opts.k_range = {1, 2};
  opts.m = 6;
  opts.raster_cap = 8;
  const DimensionEstimate est = assouad_estimate(fam::quarter_square(), opts);
  CHECK(est.value == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("assouad scan of the 1-D cantor set") {
  // 1-D sets are cheap to rasterize deep; the window error roughly halves
  // each time the depth doubles
  const CellSet c20 = rasterize(fam::cantor1d(), 20);
  const double e12 = std::fabs(assouad_scan(c20, {2, 4, 6}, 12).value - kCantorDim);
  const CellSet c32 = rasterize(fam::cantor1d(), 32);
  const double e24 = std::fabs(assouad_scan(c32, {2, 4, 6}, 24).value - kCantorDim);
  CHECK(e24 < 0.02);
  CHECK(e24 < 0.6 * e12);  // convergence, not luck
}

TEST_CASE("assouad estimate of the BM benchmark (smoke depth)") {
  AssouadOptions opts;
  opts.k_range = {2, 4, 6};
  opts.m = 8;
  const DimensionEstimate est = assouad_estimate(fam::bm_benchmark(), opts);
  CHECK(std::fabs(est.value - 1.5) < 0.08);
}

TEST_CASE("assouad estimate is invariant under map permutation") {
  std::vector<AffineMap2> maps = fam::bm_benchmark().maps();
  std::rotate(maps.begin(), maps.begin() + 1, maps.end());
  const Ifs permuted(maps);
  AssouadOptions opts;
  opts.k_range = {2, 3};
  opts.m = 6;
  const double a = assouad_estimate(fam::bm_benchmark(), opts).value;
  const double b = assouad_estimate(permuted, opts).value;
  CHECK(a == doctest::Approx(b).epsilon(1e-9));
}

TEST_CASE("assouad dominates the upper box dimension") {
  for (const Ifs& ifs : {fam::bm_benchmark(), fam::quarter_square()}) {
    AssouadOptions opts;
    opts.k_range = {2, 4};
    opts.m = 7;
    opts.raster_cap = 11;
    const DimensionEstimate asd = assouad_estimate(ifs, opts);
    const BoxDimensions box = box_dimensions(CellSetPyramid(rasterize(ifs, 11)));
    CHECK(asd.value >= box.upper.value - 2 * asd.slope_stderr - 1e-9);
  }
}

TEST_CASE("project_cells basics") {
  const CellSet sq = full_square(4);
  const CellSet proj = project_cells(sq, Direction::horizontal(), 4);
  // the square projects onto [0, 1/sqrt(2)] of the rescaled axis
  CHECK(proj.size() >= 11);
  CHECK(proj.cell(0).x == 0);

  const CellSet diag = oracle::diagonal_segment().cells(5);
  const CellSet pd = project_cells(diag, Direction::horizontal(), 5);
  // projection of the diagonal is the full unit interval (rescaled)
  CHECK(static_cast<double>(pd.size()) >= std::floor((1 << 5) / std::sqrt(2.0)));
}

TEST_CASE("projection of BM matches the projected 1-D system") {
  const Ifs bm = fam::bm_benchmark();
  const int level = 8;
  const CellSet cells = rasterize(bm, level);
  const CellSet proj = project_cells(cells, Direction::horizontal(), level);

  const SimilarityIfs1D projected = project_ifs(bm);
  const CellSet raster1 = rasterize(projected, level);

  // identify coordinates: 1-D normalized u -> x = u * span + lo -> norm2d
  // x~ = x - corner -> p = x~ / sqrt(2)
  const double span = projected.norm_scale();
  const double lo = projected.attractor_min();
  const Ifs& ref = bm;
  auto to_p = [&](double u) {
    const double x = u * span + lo;
    const double xn = (x - ref.norm_corner().x) / ref.norm_scale();
    return xn / std::sqrt(2.0);
  };
  const double h = std::ldexp(1.0, -level);
  // every projected 2-D cell lies within one cell of the mapped 1-D raster
  for (std::size_t i = 0; i < proj.size(); ++i) {
    const double plo = static_cast<double>(proj.cell(i).x) * h;
    bool near = false;
    for (std::size_t j = 0; j < raster1.size() && !near; ++j) {
      const double ulo = to_p(static_cast<double>(raster1.cell(j).x) * h);
      const double uhi = to_p(static_cast<double>(raster1.cell(j).x + 1) * h);
      if (plo >= ulo - 2 * h && plo <= uhi + 2 * h) near = true;
    }
    CHECK(near);
  }
}

TEST_CASE("assouad projection values") {
  AssouadOptions small;
  small.k_range = {1, 2};
  small.m = 7;
  const double full =
      assouad_projection(fam::quarter_square(), Direction::horizontal(), small).value;
  CHECK(std::fabs(full - 1.0) < 0.02);

  AssouadOptions opts;
  opts.k_range = {2, 4, 6};
  opts.m = 24;  // deep 1-D fast path
  const double bm = assouad_projection(fam::bm_benchmark(), Direction::horizontal(), opts).value;
  CHECK(std::fabs(bm - 0.5) < 0.03);

  const double fj = assouad_projection(fam::fj_benchmark(), Direction::horizontal(), opts).value;
  CHECK(std::fabs(fj - 1.0) < 0.03);

  // vertical-axis projections ride the transposed fast path
  const double bmv = assouad_projection(fam::bm_benchmark(), Direction::vertical(), opts).value;
  CHECK(std::fabs(bmv - 1.0) < 0.03);
}

TEST_CASE("tube counts") {
  const CellSet sq = full_square(5);
  const TubeQuery q{Direction::horizontal(), 0.5, std::ldexp(1.0, -5)};
  const std::int64_t count = tube_count(sq, q, 5);
  CHECK(count >= (1 << 5) * 2);
  CHECK(count <= (1 << 5) * 3);

  const CellSet diag = oracle::diagonal_segment().cells(6);
  const double r = std::ldexp(1.0, -6);
  const std::int64_t dcount = tube_count(diag, {Direction::horizontal(), 0.25, r}, 6);
  CHECK(dcount <= 3 * (2 + 2));

  CHECK(tube_count(sq, {Direction::horizontal(), 5.0, 0.25}, 2) == 0);
  CHECK_THROWS_AS(tube_count(sq, {Direction::horizontal(), 0.5, 1e-9}, 5), Error);
}

TEST_CASE("delta estimate of the full square") {
  DeltaOptions opts;
  opts.levels = {5, 6, 7, 8, 9, 10};
  const DimensionEstimate est = delta_estimate(fam::quarter_square(), Direction::horizontal(), opts);
  CHECK(std::fabs(est.value - 1.0) < 0.02);
}

TEST_CASE("delta is assouad minus one on the full square") {
  DeltaOptions dopts;
  dopts.levels = {5, 6, 7, 8, 9, 10};
  const double delta = delta_estimate(fam::quarter_square(), Direction::horizontal(), dopts).value;
  AssouadOptions aopts;
  aopts.k_range = {1, 2};
  aopts.m = 8;
  aopts.raster_cap = 10;
  const double assouad = assouad_estimate(fam::quarter_square(), aopts).value;
  CHECK(std::fabs(delta - (assouad - 1.0)) < 0.05);
}

TEST_CASE("delta estimate of the BM benchmark (smoke depth)") {
  DeltaOptions opts;
  opts.levels = {6, 7, 8, 9, 10, 11, 12};
  const DimensionEstimate est = delta_estimate(fam::bm_benchmark(), Direction::horizontal(), opts);
  CHECK(std::fabs(est.value - 1.0) < 0.08);
}

TEST_CASE("estimate CSV format") {
  DimensionEstimate est;
  est.method = "box-lower";
  est.value = 1.5;
  est.scale_coarse = 2;
  est.scale_fine = 10;
  est.table = {{2, 0, 0.0}, {2, 1, 1.5}};
  std::stringstream ss;
  write_estimate_csv(ss, est);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "method,value,stderr,k,m,n,log2count");
  std::getline(ss, line);
  CHECK(line.find("box-lower,1.5,0,2,8,0,0") == 0);
}
