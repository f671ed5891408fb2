#include "affdim/tangent.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "affdim/morton.hpp"
#include "json.hpp"

namespace affdim {

namespace {

struct Range {
  std::size_t lo = 0, hi = 0;  // half-open index range into the sorted keys
  std::size_t size() const { return hi - lo; }
};

// distinct level-`lev` prefixes within the range (cells at level L, dim d)
std::int64_t count_at_level(std::span<const std::uint64_t> keys, Range r, int L, int d, int lev) {
  const int shift = d * (L - lev);
  std::int64_t count = 0;
  std::uint64_t prev = 0;
  for (std::size_t i = r.lo; i < r.hi; ++i) {
    const std::uint64_t p = shift >= 64 ? 0 : (keys[i] >> shift);
    if (count == 0 || p != prev) ++count;
    prev = p;
  }
  return count;
}

Cell prefix_cell(int d, std::uint64_t prefix) {
  if (d == 1) return Cell{static_cast<std::int64_t>(prefix), 0};
  return Cell{static_cast<std::int64_t>(morton::decode2_x(prefix)),
              static_cast<std::int64_t>(morton::decode2_y(prefix))};
}

bool cell_lex_less(const Cell& a, const Cell& b) {
  return a.x != b.x ? a.x < b.x : a.y < b.y;
}

struct Descent {
  bool ok = false;
  std::string err;
  int p = 0;
  std::uint64_t prefix = 0;  // at level p
  Range range;
  std::vector<DyadicCube> path;
};

// Greedy branching descent on a morton-sorted cell set. max_p bounds the
// certificate depth; exceeding it is a failure of the (possibly relaxed)
// preconditions, reported rather than looped past.
Descent descend(const CellSet& cells, double s, int ell, int max_p) {
  const int d = cells.dim();
  const int L = cells.level();
  const auto keys = cells.keys();
  Descent out;
  out.range = Range{0, keys.size()};
  out.p = 0;
  out.prefix = 0;
  out.path.push_back(DyadicCube::root(d));

  while (true) {
    const auto nq = static_cast<double>(out.range.size());
    bool descended = false;
    for (int n = 1; n <= std::min(ell, L - out.p) && !descended; ++n) {
      const int shift = d * (L - out.p - n);
      const double bound = nq * std::exp2(-static_cast<double>(n) * s) * (1.0 + 1e-9);
      // scan runs at level p+n, keep the lexicographically smallest violator
      bool have = false;
      std::uint64_t best_prefix = 0;
      Cell best_cell{0, 0};
      Range best_range;
      std::size_t run_start = out.range.lo;
      std::uint64_t run_prefix = shift >= 64 ? 0 : (keys[out.range.lo] >> shift);
      for (std::size_t i = out.range.lo + 1; i <= out.range.hi; ++i) {
        const std::uint64_t pr = (i == out.range.hi) ? run_prefix + 1
                                 : shift >= 64      ? 0
                                                    : (keys[i] >> shift);
        if (pr != run_prefix) {
          const auto cnt = static_cast<double>(i - run_start);
          if (cnt > bound) {
            const Cell c = prefix_cell(d, run_prefix);
            if (!have || cell_lex_less(c, best_cell)) {
              have = true;
              best_prefix = run_prefix;
              best_cell = c;
              best_range = Range{run_start, i};
            }
          }
          run_start = i;
          run_prefix = pr;
        }
      }
      if (have) {
        out.p += n;
        out.prefix = best_prefix;
        out.range = best_range;
        out.path.push_back(DyadicCube(d, out.p, best_cell));
        descended = true;
      }
    }
    if (!descended) {
      out.ok = true;
      return out;
    }
    if (out.p > max_p) {
      out.err = "descent passed depth " + std::to_string(max_p) + " (reached " +
                std::to_string(out.p) + ")";
      return out;
    }
  }
}

PigeonholeResult build_result(const CellSet& cells, const Descent& dsc, double s, double t, int ell,
                              int k, PigeonholeMode mode) {
  const int d = cells.dim();
  const int L = cells.level();
  const auto keys = cells.keys();
  PigeonholeResult res;
  res.mode = mode;
  res.p = dsc.p;
  res.q = dsc.path.back();
  res.s = s;
  res.t = t;
  res.ell = ell;
  res.k = k;
  res.mass = static_cast<std::int64_t>(keys.size());
  res.path = dsc.path;
  for (int n = 0; n <= ell; ++n)
    res.table.push_back(count_at_level(keys, dsc.range, L, d, dsc.p + n));
  if (mode == PigeonholeMode::branching) {
    const auto nq = static_cast<double>(dsc.range.size());
    for (int n = 1; n <= ell; ++n) {
      const int shift = d * (L - dsc.p - n);
      std::int64_t worst = 0, run = 0;
      std::uint64_t prev = 0;
      for (std::size_t i = dsc.range.lo; i < dsc.range.hi; ++i) {
        const std::uint64_t pr = shift >= 64 ? 0 : (keys[i] >> shift);
        if (run == 0 || pr != prev) {
          run = 0;
          prev = pr;
        }
        ++run;
        worst = std::max(worst, run);
      }
      res.ratio_table.push_back(static_cast<double>(worst) / nq);
    }
  }
  return res;
}

}  // namespace

PigeonholeResult furstenberg_pigeonhole(const CellSet& cells, double s, double t, int ell, int k,
                                        PigeonholeMode mode) {
  const int d = cells.dim();
  const int m = cells.level();
  if (!(s > 0 && s < t)) fail(Errc::invalid_parameters, "need 0 < s < t");
  if (ell < 1 || k < ell) fail(Errc::invalid_parameters, "need k >= ell >= 1");
  if (static_cast<double>(m) < static_cast<double>(k * d) / (t - s) - 1e-9)
    fail(Errc::invalid_parameters, "level m below k d / (t - s)");
  const auto n_cells = static_cast<std::int64_t>(cells.size());
  if (n_cells == 0) fail(Errc::insufficient_mass, "empty cell set (N_m = 0)");
  if (static_cast<double>(n_cells) < std::exp2(static_cast<double>(m) * t) * (1.0 - 1e-12))
    fail(Errc::insufficient_mass,
         "N_m = " + std::to_string(n_cells) + " below 2^(m t) for m = " + std::to_string(m));

  Descent dsc = descend(cells, s, ell, m - k);
  if (!dsc.ok) fail(Errc::stage_failure, "pigeonhole descent: " + dsc.err);
  PigeonholeResult res = build_result(cells, dsc, s, t, ell, k, mode);
  if (mode == PigeonholeMode::counting) {
    for (int n = 0; n <= ell; ++n)
      if (!count_geq_pow2(res.table[static_cast<std::size_t>(n)], static_cast<double>(n) * s))
        fail(Errc::stage_failure, "certified table violates its own bound (internal)");
  }
  return res;
}

namespace {

struct WindowPick {
  DyadicCube cube = DyadicCube::root(1);
  std::int64_t count = 0;
};

// Occupied level-kh window with the largest fine count; ties broken by
// lexicographically smallest cube coordinates.
WindowPick best_window(const CellSet& cells, int kh) {
  const int d = cells.dim();
  const int L = cells.level();
  if (kh < 0 || kh > L) fail(Errc::invalid_argument, "window level out of range");
  const int shift = d * (L - kh);
  const auto keys = cells.keys();
  WindowPick pick;
  pick.cube = DyadicCube(d, 0, Cell{0, 0});
  std::int64_t best = -1;
  Cell best_cell{0, 0};
  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= keys.size(); ++i) {
    const bool boundary = i == keys.size() || (shift >= 64 ? false
                                                           : (keys[i] >> shift) != (keys[run_start] >> shift));
    if (!boundary) continue;
    const auto cnt = static_cast<std::int64_t>(i - run_start);
    const std::uint64_t prefix = shift >= 64 ? 0 : (keys[run_start] >> shift);
    const Cell c = prefix_cell(d, prefix);
    if (cnt > best || (cnt == best && cell_lex_less(c, best_cell))) {
      best = cnt;
      best_cell = c;
    }
    run_start = i;
  }
  if (best < 0) fail(Errc::invalid_argument, "window search on empty cell set");
  pick.cube = DyadicCube(d, kh, best_cell);
  pick.count = best;
  return pick;
}

DyadicCube compose_cubes(const DyadicCube& outer, const DyadicCube& inner) {
  const int lvl = outer.level() + inner.level();
  const Cell c{(outer.coords().x << inner.level()) + inner.coords().x,
               (outer.coords().y << inner.level()) + inner.coords().y};
  return DyadicCube(outer.dim(), lvl, c);
}

// One zoom entry from a fine rasterization: best window per coarse level,
// greedy descent with the corollary's exponents, exponent clamped to the
// achieved mass when the ideal is out of reach.
std::optional<ZoomEntry> zoom_from_raster(const CellSet& raster, int quality, double eta,
                                          int kh_max, std::string* note) {
  const int d = raster.dim();
  const int L = raster.level();
  for (int m_eff = quality; m_eff >= 2; --m_eff) {
    const double t_ideal = eta - 1.0 / (2.0 * m_eff);
    const double s_ideal = eta - 1.0 / m_eff;
    if (s_ideal <= 0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (int kh = 0; kh <= std::min(kh_max, L - m_eff - 1); ++kh) {
        const WindowPick wp = best_window(raster, kh);
        const int mw = L - kh;
        CellSet window = renormalize(raster, wp.cube);
        double t_used = t_ideal, s_used = s_ideal;
        const double t_ach =
            std::log2(static_cast<double>(std::max<std::int64_t>(wp.count, 1))) / mw;
        if (pass == 0) {
          if (static_cast<double>(wp.count) <
              std::exp2(static_cast<double>(mw) * t_ideal) * (1.0 - 1e-12))
            continue;
        } else {
          // clamped pass: certify the achieved exponent instead
          t_used = std::min(t_ideal, t_ach * (1.0 - 1e-12));
          s_used = t_used - 1.0 / m_eff;
          if (s_used <= 0) continue;
        }
        Descent dsc = descend(window, s_used, m_eff, mw - m_eff);
        if (!dsc.ok) continue;
        ZoomEntry entry;
        entry.quality = m_eff;
        entry.window = compose_cubes(wp.cube, dsc.path.back());
        entry.zoom = renormalize(window, dsc.path.back());
        entry.table =
            build_result(window, dsc, s_used, t_used, m_eff, m_eff, PigeonholeMode::counting).table;
        entry.t_used = t_used;
        entry.s_used = s_used;
        entry.truncated = pass == 1 || m_eff < quality || mw < 2 * d * m_eff * m_eff;
        if (entry.truncated && note)
          *note += "quality " + std::to_string(quality) + " served at m_eff=" +
                   std::to_string(m_eff) + " kh=" + std::to_string(kh) + "; ";
        return entry;
      }
    }
  }
  return std::nullopt;
}

}  // namespace

ZoomSequence weak_tangent_sequence(const Ifs& ifs, double eta, const std::vector<int>& qualities,
                                   const TangentOptions& opts) {
  const CellSet raster = rasterize(ifs, opts.max_level, opts.raster);
  ZoomSequence seq;
  for (int m : qualities) {
    auto entry = zoom_from_raster(raster, m, eta, opts.max_window_coarse, &seq.note);
    if (!entry) {
      seq.truncated = true;
      seq.note += "no feasible window for quality " + std::to_string(m) + "; ";
      break;
    }
    seq.truncated |= entry->truncated;
    seq.entries.push_back(std::move(*entry));
  }
  return seq;
}

ZoomSequence weak_tangent_sequence(const SimilarityIfs1D& ifs, double eta,
                                   const std::vector<int>& qualities, const TangentOptions& opts) {
  const CellSet raster = rasterize(ifs, opts.max_level_1d, opts.raster);
  ZoomSequence seq;
  for (int m : qualities) {
    auto entry = zoom_from_raster(raster, m, eta, opts.max_window_coarse, &seq.note);
    if (!entry) {
      seq.truncated = true;
      seq.note += "no feasible window for quality " + std::to_string(m) + "; ";
      break;
    }
    seq.truncated |= entry->truncated;
    seq.entries.push_back(std::move(*entry));
  }
  return seq;
}

namespace {

struct TubePick {
  WindowPick window;
  int mw = 0;
  std::int64_t tube_x = 0;
  CellSet tube_y;  // 1-D, window coordinates
  std::int64_t column_count = 0;
  std::int64_t occupied_columns = 0;
};

// Deepest window with the best achieved exponent, then the fullest vertical
// tube (one cell wide) inside it.
TubePick pick_window_and_tube(const CellSet& raster, int kh_max) {
  const int L = raster.level();
  int best_kh = 0;
  double best_exp = -1;
  for (int kh = 0; kh <= std::min(kh_max, L - 2); ++kh) {
    const WindowPick wp = best_window(raster, kh);
    const int mw = L - kh;
    const double ach = std::log2(static_cast<double>(std::max<std::int64_t>(wp.count, 1))) / mw;
    if (ach > best_exp + 1e-12) {
      best_exp = ach;
      best_kh = kh;
    }
  }
  TubePick pick;
  pick.window = best_window(raster, best_kh);
  pick.mw = L - best_kh;
  CellSet window = renormalize(raster, pick.window.cube);

  std::map<std::int64_t, std::vector<std::uint64_t>> columns;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const Cell c = window.cell(i);
    columns[c.x].push_back(static_cast<std::uint64_t>(c.y));
  }
  pick.occupied_columns = static_cast<std::int64_t>(columns.size());
  std::int64_t best_count = -1, best_x = 0;
  for (const auto& [x, ys] : columns) {
    if (static_cast<std::int64_t>(ys.size()) > best_count) {
      best_count = static_cast<std::int64_t>(ys.size());
      best_x = x;
    }
  }
  pick.tube_x = best_x;
  pick.column_count = best_count;
  pick.tube_y = CellSet::from_keys(1, pick.mw, columns[best_x], false);
  return pick;
}

}  // namespace

SliceSearchResult tangent_slice_search(const Ifs& ifs, const Direction& v, int n,
                                       const TangentOptions& opts, std::optional<double> s_est,
                                       std::optional<double> eta_est) {
  if (n < 4) fail(Errc::invalid_argument, "tangent_slice_search needs n >= 4");
  if (projective_distance(v, Direction::horizontal()) > 1e-9)
    fail(Errc::unsupported, "tangent_slice_search: only horizontal V (vertical tubes) supported");

  AssouadOptions aopts;
  aopts.k_range = {2, 4, 6};
  aopts.m = std::max(6, std::min(10, opts.max_level - 6));
  aopts.raster = opts.raster;
  const double s = s_est ? *s_est : assouad_estimate(ifs, aopts).value;
  const double eta = eta_est ? *eta_est : assouad_projection(ifs, Direction::horizontal(), aopts).value;

  const CellSet raster = rasterize(ifs, opts.max_level, opts.raster);
  TubePick pick = pick_window_and_tube(raster, opts.max_window_coarse);

  const double t3 = s - eta - 2.0 / n;
  const double s3 = t3 - 1.0 / n;
  if (!(s3 > 0))
    fail(Errc::stage_failure, "slice stage: s_est - eta_est - 3/n = " + std::to_string(s3) +
                                  " is not positive (s_est=" + std::to_string(s) +
                                  ", eta_est=" + std::to_string(eta) + ")");
  if (static_cast<double>(pick.column_count) <
      std::exp2(static_cast<double>(pick.mw) * t3) * (1.0 - 1e-12))
    fail(Errc::insufficient_mass,
         "slice stage: best tube holds N = " + std::to_string(pick.column_count) +
             " cells, below 2^(m t) with m = " + std::to_string(pick.mw) +
             ", t = " + std::to_string(t3));

  Descent dsc = descend(pick.tube_y, s3, n, pick.mw - n);
  if (!dsc.ok) fail(Errc::stage_failure, "slice stage: " + dsc.err);
  SliceSearchResult out;
  out.window = pick.window.cube;
  out.window_depth = pick.mw;
  out.tube_x = pick.tube_x;
  out.cert = build_result(pick.tube_y, dsc, s3, t3, n, n, PigeonholeMode::counting);
  out.s_est = s;
  out.eta_est = eta;
  double slope = 1e300;
  for (int j = 1; j <= n; ++j)
    slope = std::min(slope, std::log2(static_cast<double>(std::max<std::int64_t>(
                                out.cert.table[static_cast<std::size_t>(j)], 1))) /
                                j);
  out.certified_slope = slope;
  return out;
}

namespace {

bool is_diagonal(const Ifs& ifs) {
  for (int i = 0; i < ifs.size(); ++i)
    if (std::fabs(ifs.map(i).A.b) > 1e-13 || std::fabs(ifs.map(i).A.c) > 1e-13) return false;
  return true;
}

}  // namespace

ProductTangentReport diag_product_tangent(const Ifs& ifs, int m, const TangentOptions& opts) {
  if (m < 2 || m > 10) fail(Errc::invalid_argument, "diag_product_tangent needs 2 <= m <= 10");
  if (!is_diagonal(ifs)) fail(Errc::unsupported, "diag_product_tangent needs a diagonal IFS");

  bool wide = true, tall = true, strict_wide = false, strict_tall = false;
  for (int i = 0; i < ifs.size(); ++i) {
    const double a = std::fabs(ifs.map(i).A.a), b = std::fabs(ifs.map(i).A.d);
    if (a < b - 1e-14) wide = false;
    if (b < a - 1e-14) tall = false;
    if (a > b + 1e-14) strict_wide = true;
    if (b > a + 1e-14) strict_tall = true;
  }

  ProductTangentReport rep;
  rep.quality = m;
  std::vector<AffineMap2> eff;
  if (wide && strict_wide) {
    for (int i = 0; i < ifs.size(); ++i) eff.push_back(ifs.map(i));
  } else if (tall && strict_tall) {
    rep.transposed = true;
    for (int i = 0; i < ifs.size(); ++i) {
      const AffineMap2& mp = ifs.map(i);
      eff.push_back(AffineMap2{Mat2::diagonal(mp.A.d, mp.A.a), Vec2{mp.t.y, mp.t.x}});
    }
  } else {
    fail(Errc::unsupported,
         "diag_product_tangent needs a consistently anisotropic diagonal system");
  }
  const Ifs work(eff);

  // projection part P_m
  const SimilarityIfs1D proj = project_ifs(work);
  const CellSet raster1 = rasterize(proj, opts.max_level_1d, opts.raster);
  {
    std::vector<int> ks{2, 4, 6};
    const int scan_m = std::min(8, opts.max_level_1d - 7);
    rep.eta_used = assouad_scan(raster1, ks, std::max(scan_m, 2), "assouad-projection").value;
  }
  std::string note;
  auto entryP = zoom_from_raster(raster1, m, rep.eta_used, opts.max_window_coarse, &note);
  if (!entryP)
    fail(Errc::stage_failure, "projection stage: no feasible weak-tangent window (" + note + ")");
  rep.truncated |= entryP->truncated;
  rep.proj_window_level = entryP->window.level();
  rep.proj_depth = entryP->zoom.level();
  rep.proj_cells = entryP->zoom;
  rep.proj_table.counts = entryP->table;
  rep.proj_table.exponent = entryP->s_used;

  // slice family: deepest good window, fullest vertical tube
  const CellSet raster2 = rasterize(work, opts.max_level, opts.raster);
  TubePick pick = pick_window_and_tube(raster2, opts.max_window_coarse);
  rep.slice_window_level = pick.window.cube.level();
  rep.slice_fine_level = raster2.level();
  rep.beta_used =
      std::log2(static_cast<double>(std::max<std::int64_t>(pick.column_count, 1))) / pick.mw;

  // cylinder binning over the tube points
  const double r = std::ldexp(1.0, -raster2.level());
  rep.r_scale = r;
  rep.bin_width = 1.0 / (m * std::ldexp(1.0, rep.proj_window_level));
  const double cell = std::ldexp(1.0, -raster2.level());
  const double x_abs =
      (static_cast<double>((pick.window.cube.coords().x << pick.mw) + pick.tube_x) + 0.5) * cell;

  double a_min = 1.0;
  for (int i = 0; i < work.size(); ++i) a_min = std::min(a_min, std::fabs(work.map(i).A.a));
  {
    // reported M from the appendix formula shape, with achieved constants
    const double diam_proj = 1.0;
    const double formula =
        std::pow(m * std::ldexp(1.0, rep.proj_window_level), 2.0) * (1.0 - a_min) *
        (8.0 / a_min * diam_proj);
    rep.bin_count = static_cast<std::int64_t>(std::ceil(formula));
  }

  struct BinKey {
    std::int64_t iu, iv;
    bool operator==(const BinKey&) const = default;
  };
  struct BinHash {
    std::size_t operator()(const BinKey& k) const {
      return std::hash<std::int64_t>()(k.iu * 1000003 + k.iv);
    }
  };
  std::unordered_map<BinKey, std::vector<std::uint64_t>, BinHash> bins;
  for (std::size_t i = 0; i < pick.tube_y.size(); ++i) {
    const std::int64_t yk = pick.tube_y.cell(i).x;
    const double y_abs =
        (static_cast<double>((pick.window.cube.coords().y << pick.mw) + yk) + 0.5) * cell;
    // stopping cylinder over (x_abs, y_abs): descend through normalized
    // cylinder boxes, always into the nearest child
    double u = 1.0;
    double box_x = 0.0, box_y = 0.0, box_w = 1.0, box_h = 1.0;
    int guard = 0;
    while (u > r && ++guard < 4000) {
      int best = -1;
      double best_d = 1e300;
      double cand_x = 0, cand_y = 0, cand_w = 0, cand_h = 0;
      for (int j = 0; j < work.size(); ++j) {
        const AffineMap2& mp = work.normalized_map(j);
        const double x1 = mp.A.a * box_x + mp.t.x;
        const double x2 = mp.A.a * (box_x + box_w) + mp.t.x;
        const double y1 = mp.A.d * box_y + mp.t.y;
        const double y2 = mp.A.d * (box_y + box_h) + mp.t.y;
        const double px = std::min(x1, x2), pw = std::fabs(x2 - x1);
        const double py = std::min(y1, y2), ph = std::fabs(y2 - y1);
        const double dx = std::max({px - x_abs, x_abs - (px + pw), 0.0});
        const double dy = std::max({py - y_abs, y_abs - (py + ph), 0.0});
        const double dist = std::hypot(dx, dy);
        if (dist < best_d - 1e-18) {
          best_d = dist;
          best = j;
          cand_x = px;
          cand_y = py;
          cand_w = pw;
          cand_h = ph;
        }
      }
      if (best < 0) break;
      box_x = cand_x;
      box_y = cand_y;
      box_w = cand_w;
      box_h = cand_h;
      u *= std::fabs(work.map(best).A.a);
    }
    const double vx = box_x;
    const auto iu = static_cast<std::int64_t>(std::floor((u / r) / rep.bin_width));
    const auto iv = static_cast<std::int64_t>(std::floor((vx / r) / rep.bin_width));
    bins[BinKey{iu, iv}].push_back(static_cast<std::uint64_t>(yk));
  }
  BinKey best_key{0, 0};
  std::size_t best_size = 0;
  for (const auto& [key, members] : bins) {
    if (members.size() > best_size ||
        (members.size() == best_size &&
         (key.iu < best_key.iu || (key.iu == best_key.iu && key.iv < best_key.iv)))) {
      best_size = members.size();
      best_key = key;
    }
  }
  if (best_size == 0) fail(Errc::stage_failure, "binning stage: empty slice family");
  rep.u_m = (static_cast<double>(best_key.iu) + 0.5) * rep.bin_width;
  rep.v_m = (static_cast<double>(best_key.iv) + 0.5) * rep.bin_width;
  CellSet bin_cells = CellSet::from_keys(1, pick.mw, bins[best_key], false);

  // amplification inside the window's vertical extent
  const double beta_hat = std::min(
      rep.beta_used,
      std::log2(static_cast<double>(std::max<std::size_t>(best_size, 1))) / pick.mw);
  double t_amp = beta_hat - 1.0 / m;
  const double t_ach =
      std::log2(static_cast<double>(std::max<std::size_t>(best_size, 1))) / pick.mw;
  t_amp = std::min(t_amp, t_ach * (1.0 - 1e-12));
  const double s_amp = t_amp - 1.0 / m;
  if (!(s_amp > 0))
    fail(Errc::stage_failure, "amplification stage: slice exponent " + std::to_string(s_amp) +
                                  " not positive (bin size " + std::to_string(best_size) + ")");
  if (pick.mw - m < 0) fail(Errc::stage_failure, "amplification stage: window too shallow");
  Descent dsc = descend(bin_cells, s_amp, m, pick.mw - m);
  if (!dsc.ok) fail(Errc::stage_failure, "amplification stage: " + dsc.err);
  PigeonholeResult amp = build_result(bin_cells, dsc, s_amp, t_amp, m, m, PigeonholeMode::counting);
  rep.amplified_level = pick.window.cube.level() + amp.p;
  rep.slice_cells = renormalize(bin_cells, amp.q);
  rep.slice_table.counts = amp.table;
  rep.slice_table.exponent = s_amp;

  // squashing power of the most anisotropic map
  double kappa = 1.0;
  for (int i = 0; i < work.size(); ++i) {
    const double ratio = std::fabs(work.map(i).A.d) / std::fabs(work.map(i).A.a);
    if (ratio < kappa) kappa = ratio;
  }
  rep.kappa = kappa;
  const double h_m = std::ldexp(1.0, -(rep.proj_window_level + rep.slice_fine_level));
  const double lhs = std::ldexp(1.0, -rep.amplified_level);
  rep.j_m = kappa < 1.0
                ? std::max(0, static_cast<int>(std::floor(std::log(h_m / lhs) / std::log(kappa))))
                : 0;

  // assembled product at the common table depth
  const int lp = std::min({m, rep.proj_cells.level(), rep.slice_cells.level()});
  const CellSet a_part = truncate(rep.proj_cells, lp);
  const CellSet b_part = truncate(rep.slice_cells, lp);
  if (static_cast<double>(a_part.size()) * static_cast<double>(b_part.size()) > 5e7)
    fail(Errc::resource_limit, "product assembly too large");
  std::vector<std::uint64_t> prod_keys;
  prod_keys.reserve(a_part.size() * b_part.size());
  for (std::size_t i = 0; i < a_part.size(); ++i)
    for (std::size_t j = 0; j < b_part.size(); ++j)
      prod_keys.push_back(morton::encode2(static_cast<std::uint64_t>(a_part.cell(i).x),
                                          static_cast<std::uint64_t>(b_part.cell(j).x)));
  rep.product = CellSet::from_keys(2, lp, std::move(prod_keys), false);
  return rep;
}

bool verify_product_bounds(const ProductTangentReport& report) {
  try {
    const auto check_table = [](const CellSet& cells, const CountTable& table) {
      for (std::size_t n = 0; n < table.counts.size(); ++n) {
        if (static_cast<int>(n) > cells.level()) return false;
        const std::int64_t recount = covering_number(cells, static_cast<int>(n));
        if (recount != table.counts[n]) return false;
        if (!count_geq_pow2(table.counts[n], static_cast<double>(n) * table.exponent))
          return false;
      }
      return true;
    };
    if (!check_table(report.proj_cells, report.proj_table)) return false;
    if (!check_table(report.slice_cells, report.slice_table)) return false;
    const int lp = report.product.level();
    for (int n = 0; n <= lp; ++n) {
      if (n >= static_cast<int>(report.proj_table.counts.size()) ||
          n >= static_cast<int>(report.slice_table.counts.size()))
        break;
      const std::int64_t expect =
          report.proj_table.counts[static_cast<std::size_t>(n)] *
          report.slice_table.counts[static_cast<std::size_t>(n)];
      if (covering_number(report.product, n) != expect) return false;
    }
    return true;
  } catch (const Error&) {
    return false;
  }
}

namespace {

nlohmann::json table_json(const CountTable& t) {
  return nlohmann::json{{"counts", t.counts}, {"exponent", t.exponent}};
}

CountTable table_from_json(const nlohmann::json& j) {
  CountTable t;
  t.counts = j["counts"].get<std::vector<std::int64_t>>();
  t.exponent = j["exponent"].get<double>();
  return t;
}

}  // namespace

void save_product_report(const std::string& base_path, const ProductTangentReport& report) {
  save_cells(base_path + ".proj.cells", report.proj_cells);
  save_cells(base_path + ".slice.cells", report.slice_cells);
  save_cells(base_path + ".product.cells", report.product);
  nlohmann::json j{
      {"quality", report.quality},
      {"transposed", report.transposed},
      {"truncated", report.truncated},
      {"proj_window_level", report.proj_window_level},
      {"proj_depth", report.proj_depth},
      {"slice_window_level", report.slice_window_level},
      {"slice_fine_level", report.slice_fine_level},
      {"amplified_level", report.amplified_level},
      {"r_scale", report.r_scale},
      {"u_m", report.u_m},
      {"v_m", report.v_m},
      {"bin_width", report.bin_width},
      {"bin_count", report.bin_count},
      {"kappa", report.kappa},
      {"j_m", report.j_m},
      {"eta_used", report.eta_used},
      {"beta_used", report.beta_used},
      {"proj_table", table_json(report.proj_table)},
      {"slice_table", table_json(report.slice_table)},
      {"proj_cells", base_path + ".proj.cells"},
      {"slice_cells", base_path + ".slice.cells"},
      {"product_cells", base_path + ".product.cells"},
  };
  std::ofstream f(base_path + ".json");
  if (!f) fail(Errc::io_error, "cannot open " + base_path + ".json for writing");
  f << j.dump(2) << '\n';
}

ProductTangentReport load_product_report(const std::string& base_path) {
  std::ifstream f(base_path + ".json");
  if (!f) fail(Errc::io_error, "cannot open " + base_path + ".json");
  nlohmann::json j;
  f >> j;
  ProductTangentReport rep;
  rep.quality = j["quality"].get<int>();
  rep.transposed = j["transposed"].get<bool>();
  rep.truncated = j["truncated"].get<bool>();
  rep.proj_window_level = j["proj_window_level"].get<int>();
  rep.proj_depth = j["proj_depth"].get<int>();
  rep.slice_window_level = j["slice_window_level"].get<int>();
  rep.slice_fine_level = j["slice_fine_level"].get<int>();
  rep.amplified_level = j["amplified_level"].get<int>();
  rep.r_scale = j["r_scale"].get<double>();
  rep.u_m = j["u_m"].get<double>();
  rep.v_m = j["v_m"].get<double>();
  rep.bin_width = j["bin_width"].get<double>();
  rep.bin_count = j["bin_count"].get<std::int64_t>();
  rep.kappa = j["kappa"].get<double>();
  rep.j_m = j["j_m"].get<int>();
  rep.eta_used = j["eta_used"].get<double>();
  rep.beta_used = j["beta_used"].get<double>();
  rep.proj_table = table_from_json(j["proj_table"]);
  rep.slice_table = table_from_json(j["slice_table"]);
  rep.proj_cells = load_cells(j["proj_cells"].get<std::string>());
  rep.slice_cells = load_cells(j["slice_cells"].get<std::string>());
  rep.product = load_cells(j["product_cells"].get<std::string>());
  return rep;
}

}  // namespace affdim
