#include "affdim/tangent.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "families.hpp"
#include "oracles.hpp"

using namespace affdim;

namespace {

CellSet full_interval(int level) {
  std::vector<Cell> cells;
  for (std::int64_t x = 0; x < (std::int64_t{1} << level); ++x) cells.push_back({x, 0});
  return CellSet::from_cells(1, level, cells);
}

// independent recount of N_{p+n}(K cap Q) by coordinate filtering
std::int64_t recount(const CellSet& cells, const DyadicCube& q, int level) {
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  const int down = cells.level() - level;
  const int to_q = cells.level() - q.level();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell c = cells.cell(i);
    if ((c.x >> to_q) != q.coords().x) continue;
    if (cells.dim() == 2 && (c.y >> to_q) != q.coords().y) continue;
    seen.insert({c.x >> down, c.y >> down});
  }
  return static_cast<std::int64_t>(seen.size());
}

// independent branching check of a cube: all depth-<=ell descendants obey
// the 2^{-ns} ratio bound
bool branching_holds(const CellSet& cells, const DyadicCube& q, double s, int ell) {
  const std::int64_t nq = recount(cells, q, cells.level());
  for (int n = 1; n <= ell && q.level() + n <= cells.level(); ++n) {
    std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> counts;
    const int to_q = cells.level() - q.level();
    const int to_child = cells.level() - (q.level() + n);
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const Cell c = cells.cell(i);
      if ((c.x >> to_q) != q.coords().x) continue;
      if (cells.dim() == 2 && (c.y >> to_q) != q.coords().y) continue;
      counts[{c.x >> to_child, c.y >> to_child}] += 1;
    }
    for (const auto& [child, cnt] : counts)
      if (static_cast<double>(cnt) >
          static_cast<double>(nq) * std::exp2(-static_cast<double>(n) * s) * (1.0 + 1e-9))
        return false;
  }
  return true;
}

CellSet random_massy_cells(std::mt19937& rng, int dim, int level, double t) {
  // per-level keep probability tuned to overshoot 2^{level*t} cells
  const double target_children = std::exp2(t);
  const double keep = std::min(1.0, target_children / std::exp2(dim) * 1.35);
  std::uniform_real_distribution<double> u(0, 1);
  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<Cell> cur{{0, 0}};
    for (int l = 1; l <= level; ++l) {
      std::vector<Cell> next;
      for (const Cell& c : cur)
        for (std::int64_t dx = 0; dx < 2; ++dx) {
          if (dim == 1) {
            if (u(rng) < keep) next.push_back({2 * c.x + dx, 0});
          } else {
            for (std::int64_t dy = 0; dy < 2; ++dy)
              if (u(rng) < keep) next.push_back({2 * c.x + dx, 2 * c.y + dy});
          }
        }
      if (next.empty()) next.push_back({2 * cur[0].x, dim == 1 ? 0 : 2 * cur[0].y});
      cur = std::move(next);
    }
    if (static_cast<double>(cur.size()) >= std::exp2(level * t))
      return CellSet::from_cells(dim, level, cur);
  }
  return full_interval(level);
}

}  // namespace

TEST_CASE("pigeonhole on the full interval certifies the root") {
  const PigeonholeResult res = furstenberg_pigeonhole(full_interval(4), 0.5, 1.0, 2, 2);
  CHECK(res.p == 0);
  CHECK(res.table == std::vector<std::int64_t>{1, 2, 4});
  CHECK(count_geq_pow2(res.table[1], 0.5));
  CHECK(count_geq_pow2(res.table[2], 1.0));
}

TEST_CASE("pigeonhole descends into the occupied half") {
  // left half of [0,1] filled at level 4
  std::vector<Cell> cells;
  for (std::int64_t x = 0; x < 8; ++x) cells.push_back({x, 0});
  const CellSet half = CellSet::from_cells(1, 4, cells);
  const PigeonholeResult res = furstenberg_pigeonhole(half, 0.5, 0.75, 1, 1);
  CHECK(res.p == 1);
  CHECK(res.q.coords().x == 0);
  // exhaustive scan: the root fails, and [0, 1/2] is the only level-1
  // certificate
  CHECK_FALSE(branching_holds(half, DyadicCube::root(1), 0.5, 1));
  CHECK(branching_holds(half, DyadicCube(1, 1, {0, 0}), 0.5, 1));
}

TEST_CASE("pigeonhole error paths") {
  const CellSet one = CellSet::from_cells(1, 4, {{3, 0}});
  CHECK_THROWS_AS(furstenberg_pigeonhole(one, 0.5, 0.75, 1, 1), Error);  // insufficient mass
  CHECK_THROWS_AS(furstenberg_pigeonhole(full_interval(4), 0.5, 0.75, 2, 2), Error);  // m too low
  CHECK_THROWS_AS(furstenberg_pigeonhole(full_interval(4), 0.9, 0.5, 1, 1), Error);   // s >= t
}

TEST_CASE("pigeonhole soundness on random cell sets") {
  std::mt19937 rng(1234);
  for (int round = 0; round < 120; ++round) {
    const int dim = 1 + (round % 2);
    const int level = dim == 1 ? 6 + static_cast<int>(rng() % 7) : 6 + static_cast<int>(rng() % 3);
    const double t = dim == 1 ? 0.75 : 1.4;
    const CellSet cells = random_massy_cells(rng, dim, level, t);
    const int k = 2, ell = 2;
    const double tt = t, ss = t - static_cast<double>(k * dim) / level;
    if (!(ss > 0)) continue;
    if (static_cast<double>(cells.size()) < std::exp2(level * tt)) continue;
    PigeonholeResult res;
    try {
      res = furstenberg_pigeonhole(cells, ss, tt, ell, k);
    } catch (const Error&) {
      continue;  // relaxed generator can miss the mass precondition
    }
    CHECK(res.p <= level - k);
    // certificate validity by independent recount
    for (int n = 0; n <= ell; ++n) {
      CHECK(res.table[static_cast<std::size_t>(n)] ==
            recount(cells, res.q, res.p + n));
      CHECK(count_geq_pow2(res.table[static_cast<std::size_t>(n)], n * ss));
    }
    CHECK(branching_holds(cells, res.q, ss, ell));
    // every cube strictly before the certificate on the path failed
    for (std::size_t i = 0; i + 1 < res.path.size(); ++i)
      CHECK_FALSE(branching_holds(cells, res.path[i], ss, ell));
  }
}

TEST_CASE("weak tangent sequence of the full square") {
  TangentOptions opts;
  opts.max_level = 10;
  const ZoomSequence seq = weak_tangent_sequence(fam::quarter_square(), 2.0, {4, 8}, opts);
  REQUIRE(seq.entries.size() == 2);
  const ZoomEntry& e = seq.entries[1];
  CHECK(e.quality == 8);
  CHECK(e.window.level() == 0);
  for (int n = 0; n <= 8; ++n)
    CHECK(e.table[static_cast<std::size_t>(n)] == (std::int64_t{1} << (2 * n)));
}

TEST_CASE("weak tangent sequence of the cantor set") {
  TangentOptions opts;
  const double eta = std::log(2.0) / std::log(3.0);
  const ZoomSequence seq = weak_tangent_sequence(fam::cantor1d(), eta, {4, 8}, opts);
  REQUIRE(!seq.entries.empty());
  for (const ZoomEntry& e : seq.entries) {
    for (std::size_t n = 0; n < e.table.size(); ++n) {
      CHECK(count_geq_pow2(e.table[n], static_cast<double>(n) * e.s_used));
      // recount the certified table from the zoom cells
      CHECK(covering_number(e.zoom, static_cast<int>(n)) == e.table[n]);
    }
  }
}

TEST_CASE("tangent slice search on the full square") {
  TangentOptions opts;
  opts.max_level = 10;
  const SliceSearchResult res =
      tangent_slice_search(fam::quarter_square(), Direction::horizontal(), 6, opts, 2.0, 1.0);
  for (int j = 0; j <= 6; ++j)
    CHECK(res.cert.table[static_cast<std::size_t>(j)] == (std::int64_t{1} << j));
  CHECK(res.certified_slope == doctest::Approx(1.0));
}

TEST_CASE("tangent slice search certifies the BM fibre") {
  TangentOptions opts;
  opts.max_level = 12;
  const SliceSearchResult res =
      tangent_slice_search(fam::bm_benchmark(), Direction::horizontal(), 6, opts);
  CHECK(res.certified_slope >= 1.5 - 0.5 - 3.0 / 6 - 0.05);
  // recount the certified table against the raw rasterization
  const CellSet raster = rasterize(fam::bm_benchmark(), opts.max_level);
  const CellSet window = renormalize(raster, res.window);
  std::vector<std::uint64_t> ys;
  for (std::size_t i = 0; i < window.size(); ++i)
    if (window.cell(i).x == res.tube_x) ys.push_back(static_cast<std::uint64_t>(window.cell(i).y));
  const CellSet tube = CellSet::from_keys(1, res.window_depth, ys, false);
  for (int n = 0; n <= res.cert.ell; ++n)
    CHECK(recount(tube, res.cert.q, res.cert.p + n) == res.cert.table[static_cast<std::size_t>(n)]);

  CHECK_THROWS_AS(tangent_slice_search(fam::bm_benchmark(), Direction::vertical(), 6, opts), Error);
  CHECK_THROWS_AS(tangent_slice_search(fam::bm_benchmark(), Direction::horizontal(), 2, opts), Error);
}

TEST_CASE("diag product tangent on the product (full square) system") {
  TangentOptions opts;
  opts.max_level = 10;
  opts.max_level_1d = 12;
  // anisotropic tiling of the square: attractor [0,1]^2 with a > b
  std::vector<AffineMap2> maps;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j)
      maps.push_back({Mat2::diagonal(0.5, 0.25),
                      Vec2{static_cast<double>(i) / 2, static_cast<double>(j) / 4}});
  const Ifs product_ifs(maps);
  const ProductTangentReport rep = diag_product_tangent(product_ifs, 4, opts);
  CHECK_FALSE(rep.transposed);
  CHECK(verify_product_bounds(rep));
  // both parts are full intervals
  for (std::size_t n = 0; n < rep.proj_table.counts.size(); ++n)
    CHECK(rep.proj_table.counts[n] == (std::int64_t{1} << n));
}

TEST_CASE("diag product tangent on the BM benchmark") {
  TangentOptions opts;
  opts.max_level = 12;
  opts.max_level_1d = 14;
  const ProductTangentReport rep = diag_product_tangent(fam::bm_benchmark(), 6, opts);
  CHECK(rep.transposed);  // BM(4,2) is tall: x contracts harder
  CHECK(verify_product_bounds(rep));
  const BoxDimensions box = box_dimensions(CellSetPyramid(rep.product));
  CHECK(box.lower.value >= 1.3);

  // tampering is detected
  ProductTangentReport bad = rep;
  bad.proj_table.counts.back() -= 1;
  CHECK_FALSE(verify_product_bounds(bad));
  ProductTangentReport shuffled = rep;
  std::reverse(shuffled.slice_table.counts.begin(), shuffled.slice_table.counts.end());
  CHECK_FALSE(verify_product_bounds(shuffled));
}

TEST_CASE("diag product tangent on the FJ benchmark") {
  TangentOptions opts;
  opts.max_level = 12;
  opts.max_level_1d = 14;
  const ProductTangentReport rep = diag_product_tangent(fam::fj_benchmark(), 6, opts);
  CHECK_FALSE(rep.transposed);
  CHECK(verify_product_bounds(rep));
}

TEST_CASE("product tangent report round-trips through JSON") {
  TangentOptions opts;
  opts.max_level = 10;
  opts.max_level_1d = 12;
  const ProductTangentReport rep = diag_product_tangent(fam::fj_benchmark(), 4, opts);
  const std::string base = (std::filesystem::temp_directory_path() / "affdim_report").string();
  save_product_report(base, rep);
  const ProductTangentReport back = load_product_report(base);
  CHECK(back.quality == rep.quality);
  CHECK(back.proj_cells == rep.proj_cells);
  CHECK(back.slice_cells == rep.slice_cells);
  CHECK(back.product == rep.product);
  CHECK(back.proj_table.counts == rep.proj_table.counts);
  CHECK(verify_product_bounds(back));
}

TEST_CASE("diag product tangent rejects unsupported systems") {
  CHECK_THROWS_AS(diag_product_tangent(fam::quarter_square(), 12), Error);  // m out of range
  const Ifs rot({{0.5 * Mat2::rotation(0.4), Vec2{0, 0}}, {Mat2::diagonal(0.4, 0.2), Vec2{0.5, 0.5}}});
  CHECK_THROWS_AS(diag_product_tangent(rot, 4), Error);
  const Ifs mixed({{Mat2::diagonal(0.5, 0.25), Vec2{0, 0}}, {Mat2::diagonal(0.25, 0.5), Vec2{0.5, 0.5}}});
  CHECK_THROWS_AS(diag_product_tangent(mixed, 4), Error);
}
