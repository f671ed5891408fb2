#include "affdim/dimension.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>

namespace affdim {

SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n) fail(Errc::invalid_argument, "fit_slope needs >= 2 points");
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0) fail(Errc::invalid_argument, "fit_slope: degenerate abscissae");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
      sse += r * r;
    }
    fit.stderr_slope = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

namespace {

// Per-window covering numbers N_{k+n}(K cap Q) for all 0 <= n <= m at once:
// consecutive sorted keys diverging at bit b contribute a new level-(k+n)
// cube exactly when b >= d*(L-k-n).
struct WindowScan {
  std::vector<std::int64_t> max_count;  // indexed by n

  WindowScan(const CellSet& cells, int k, int m) {
    const int d = cells.dim();
    const int L = cells.level();
    if (k < 0 || k + m > L) fail(Errc::invalid_argument, "window scan out of range");
    max_count.assign(static_cast<std::size_t>(m) + 1, 0);
    const auto ks = cells.keys();
    const int window_shift = d * (L - k);
    std::vector<std::int64_t> hist(65, 0);
    std::size_t run_start = 0;
    auto flush = [&]() {
      // N_{k+n}(window) = 1 + #pairs whose keys diverge above the level's shift
      std::vector<std::int64_t> suffix(66, 0);
      for (int b = 64; b >= 1; --b)
        suffix[static_cast<std::size_t>(b)] =
            suffix[static_cast<std::size_t>(b) + 1] + hist[static_cast<std::size_t>(b)];
      for (int n = 0; n <= m; ++n) {
        const int shift = d * (L - k - n);
        const std::int64_t cnt = 1 + (shift >= 64 ? 0 : suffix[static_cast<std::size_t>(shift) + 1]);
        auto& mx = max_count[static_cast<std::size_t>(n)];
        if (cnt > mx) mx = cnt;
      }
      std::fill(hist.begin(), hist.end(), 0);
    };
    for (std::size_t i = 1; i <= ks.size(); ++i) {
      const bool new_window =
          i == ks.size() ||
          ((window_shift >= 64 ? 0 : (ks[i] >> window_shift)) !=
           (window_shift >= 64 ? 0 : (ks[run_start] >> window_shift)));
      if (new_window) {
        flush();
        run_start = i;
        continue;
      }
      const std::uint64_t x = ks[i] ^ ks[i - 1];
      hist[static_cast<std::size_t>(std::bit_width(x))] += 1;
    }
    if (ks.empty()) fail(Errc::invalid_argument, "window scan of empty cell set");
  }
};

DimensionEstimate scan_windows(const CellSet& cells, const std::vector<int>& k_range, int m,
                               const char* method) {
  if (m < 1) fail(Errc::invalid_argument, "window depth must be >= 1");
  DimensionEstimate best;
  best.method = method;
  best.value = -1;
  for (int k : k_range) {
    WindowScan scan(cells, k, m);
    std::vector<double> xs, ys;
    DimensionEstimate est;
    for (int n = 0; n <= m; ++n) {
      const double lc = std::log2(static_cast<double>(std::max<std::int64_t>(
          scan.max_count[static_cast<std::size_t>(n)], 1)));
      xs.push_back(n);
      ys.push_back(lc);
      est.table.push_back(ScalePoint{k, n, lc});
    }
    const SlopeFit fit = fit_slope(xs, ys);
    est.value = std::max(fit.slope, 0.0);
    est.method = method;
    est.scale_coarse = k;
    est.scale_fine = k + m;
    est.slope_stderr = fit.stderr_slope;
    if (est.value > best.value) {
      auto table = best.table;
      best = est;
      best.table = std::move(table);
    }
    for (const ScalePoint& p : est.table) best.table.push_back(p);
  }
  // keep one table entry per (k, n); the loop above may duplicate the winner
  std::sort(best.table.begin(), best.table.end(), [](const ScalePoint& a, const ScalePoint& b) {
    return a.k != b.k ? a.k < b.k : a.n < b.n;
  });
  best.table.erase(std::unique(best.table.begin(), best.table.end(),
                               [](const ScalePoint& a, const ScalePoint& b) {
                                 return a.k == b.k && a.n == b.n;
                               }),
                   best.table.end());
  return best;
}

}  // namespace

BoxDimensions box_dimensions(const CellSetPyramid& pyramid) {
  const int finest = pyramid.finest_level();
  if (finest + 1 < 5) fail(Errc::invalid_argument, "box_dimensions needs >= 5 pyramid levels");
  const int lo = (finest + 1) / 2;
  std::vector<double> xs, ys;
  for (int n = lo; n <= finest; ++n) {
    xs.push_back(n);
    ys.push_back(std::log2(static_cast<double>(pyramid.count(n))));
  }
  const SlopeFit whole = fit_slope(xs, ys);

  const int w = std::max<int>(3, static_cast<int>(xs.size()) - 2);
  double min_slope = 1e300, max_slope = -1e300;
  for (std::size_t start = 0; start + static_cast<std::size_t>(w) < xs.size() + 1; ++start) {
    std::vector<double> wx(xs.begin() + static_cast<std::ptrdiff_t>(start),
                           xs.begin() + static_cast<std::ptrdiff_t>(start) + w);
    std::vector<double> wy(ys.begin() + static_cast<std::ptrdiff_t>(start),
                           ys.begin() + static_cast<std::ptrdiff_t>(start) + w);
    const double s = fit_slope(wx, wy).slope;
    min_slope = std::min(min_slope, s);
    max_slope = std::max(max_slope, s);
  }

  BoxDimensions out;
  out.lower.value = std::max(min_slope, 0.0);
  out.lower.method = "box-lower";
  out.lower.scale_coarse = lo;
  out.lower.scale_fine = finest;
  out.lower.slope_stderr = whole.stderr_slope;
  out.upper.value = std::max(max_slope, 0.0);
  out.upper.method = "box-upper";
  out.upper.scale_coarse = lo;
  out.upper.scale_fine = finest;
  out.upper.slope_stderr = whole.stderr_slope;
  for (int n = 0; n <= finest; ++n) {
    const double lc = std::log2(static_cast<double>(pyramid.count(n)));
    out.lower.table.push_back(ScalePoint{0, n, lc});
    out.upper.table.push_back(ScalePoint{0, n, lc});
  }
  return out;
}

DimensionEstimate assouad_scan(const CellSet& cells, const std::vector<int>& k_range, int m,
                               const char* method) {
  return scan_windows(cells, k_range, m, method);
}

namespace {

int raster_level_for(const AssouadOptions& opts, int cap) {
  const int need = *std::max_element(opts.k_range.begin(), opts.k_range.end()) + opts.m;
  return std::max(need, std::min(need + opts.raster_margin, cap));
}

}  // namespace

DimensionEstimate assouad_estimate(const Ifs& ifs, const AssouadOptions& opts) {
  if (opts.m < 6) fail(Errc::invalid_argument, "assouad_estimate needs window depth m >= 6");
  if (opts.k_range.empty()) fail(Errc::invalid_argument, "empty k_range");
  const CellSet cells = rasterize(ifs, raster_level_for(opts, opts.raster_cap), opts.raster);
  return scan_windows(cells, opts.k_range, opts.m, "assouad");
}

namespace {

double projection_shift(Vec2 e) { return -(std::min(0.0, e.x) + std::min(0.0, e.y)); }

constexpr double kSqrt2 = 1.4142135623730951;

}  // namespace

CellSet project_cells(const CellSet& cells, const Direction& v, int out_level) {
  if (cells.dim() != 2) fail(Errc::invalid_argument, "project_cells needs a 2-D cell set");
  if (out_level > cells.level()) fail(Errc::invalid_argument, "out_level finer than cells");
  const Vec2 e = v.unit();
  const double shift = projection_shift(e);
  const double side = std::ldexp(1.0, -cells.level());
  const double half_width = 0.5 * (std::fabs(e.x) + std::fabs(e.y)) * side;
  const double h = std::ldexp(1.0, -out_level);
  const std::int64_t grid = std::int64_t{1} << out_level;

  std::vector<std::uint64_t> keys;
  keys.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell c = cells.cell(i);
    const double cx = (static_cast<double>(c.x) + 0.5) * side;
    const double cy = (static_cast<double>(c.y) + 0.5) * side;
    const double centre = (cx * e.x + cy * e.y + shift) / kSqrt2;
    const double lo = centre - half_width / kSqrt2;
    const double hi = centre + half_width / kSqrt2;
    const auto i0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(lo / h - 1.0)));
    const auto i1 = std::min<std::int64_t>(grid - 1, static_cast<std::int64_t>(std::floor(hi / h)));
    for (std::int64_t j = i0; j <= i1; ++j) keys.push_back(static_cast<std::uint64_t>(j));
  }
  return CellSet::from_keys(1, out_level, std::move(keys), false);
}

DimensionEstimate assouad_projection(const Ifs& ifs, const Direction& v,
                                     const AssouadOptions& opts) {
  if (opts.m < 6) fail(Errc::invalid_argument, "assouad_projection needs window depth m >= 6");
  if (opts.k_range.empty()) fail(Errc::invalid_argument, "empty k_range");
  const int max_k = *std::max_element(opts.k_range.begin(), opts.k_range.end());

  // axis projections of coordinate-autonomous systems: pi(K) is itself the
  // attractor of the projected similarity system, which rasterizes far
  // deeper than any 2-D sweep
  const bool horizontal = projective_distance(v, Direction::horizontal()) <= 1e-12;
  const bool vertical = projective_distance(v, Direction::vertical()) <= 1e-12;
  if (horizontal || vertical) {
    try {
      const Ifs* source = &ifs;
      std::optional<Ifs> transposed;
      if (vertical) {
        std::vector<AffineMap2> maps;
        for (int i = 0; i < ifs.size(); ++i) {
          const AffineMap2& m = ifs.map(i);
          maps.push_back({Mat2{m.A.d, m.A.c, m.A.b, m.A.a}, Vec2{m.t.y, m.t.x}});
        }
        transposed.emplace(std::move(maps));
        source = &*transposed;
      }
      const SimilarityIfs1D projected = project_ifs(*source);
      const CellSet cells =
          rasterize(projected, raster_level_for(opts, opts.raster_cap_1d), opts.raster);
      return scan_windows(cells, opts.k_range, opts.m, "assouad-projection");
    } catch (const Error&) {
      // not coordinate-autonomous; fall through to the generic path
    }
  }

  AssouadOptions generic = opts;
  generic.m = std::min(opts.m, opts.raster_cap - max_k);
  if (generic.m < 6) fail(Errc::invalid_argument, "raster cap too low for the window depth");
  const int level = raster_level_for(generic, opts.raster_cap);
  const CellSet cells = rasterize(ifs, level, opts.raster);
  const CellSet projected = project_cells(cells, v, level);
  return scan_windows(projected, generic.k_range, generic.m, "assouad-projection");
}

std::int64_t tube_count(const CellSet& cells, const TubeQuery& q, int count_level) {
  if (count_level > cells.level()) fail(Errc::invalid_argument, "count_level finer than cells");
  if (!(q.r > 0)) fail(Errc::invalid_argument, "tube radius must be positive");
  if (q.r < std::ldexp(1.0, -count_level))
    fail(Errc::invalid_argument, "tube radius below the counting scale");
  const CellSet at_level = count_level == cells.level() ? cells : truncate(cells, count_level);
  const Vec2 e = q.v.unit();
  const double side = std::ldexp(1.0, -count_level);
  const double half_width = 0.5 * (std::fabs(e.x) + std::fabs(e.y)) * side;
  std::int64_t count = 0;
  // the tube is the preimage of an OPEN ball: touching cells do not count
  for (std::size_t i = 0; i < at_level.size(); ++i) {
    const Cell c = at_level.cell(i);
    const double centre = (static_cast<double>(c.x) + 0.5) * side * e.x +
                          (static_cast<double>(c.y) + 0.5) * side * e.y;
    if (centre - half_width < q.z + q.r && centre + half_width > q.z - q.r) ++count;
  }
  return count;
}

DimensionEstimate delta_estimate(const Ifs& ifs, const Direction& v, const DeltaOptions& opts) {
  if (opts.levels.size() < 2) fail(Errc::invalid_argument, "delta_estimate needs >= 2 levels");
  const int top = *std::max_element(opts.levels.begin(), opts.levels.end());
  const CellSet fine = rasterize(ifs, top, opts.raster);
  const Vec2 e = v.unit();
  const double shift = projection_shift(e);

  DimensionEstimate est;
  est.method = "delta";
  est.scale_coarse = *std::min_element(opts.levels.begin(), opts.levels.end());
  est.scale_fine = top;
  std::vector<double> xs, ys;
  for (int n : opts.levels) {
    const CellSet at_n = n == top ? fine : truncate(fine, n);
    const double side = std::ldexp(1.0, -n);
    const double half_width = 0.5 * (std::fabs(e.x) + std::fabs(e.y)) * side;
    // sorted projection centres; a strip is a contiguous range of them
    std::vector<double> centres(at_n.size());
    for (std::size_t i = 0; i < at_n.size(); ++i) {
      const Cell c = at_n.cell(i);
      centres[i] = (static_cast<double>(c.x) + 0.5) * side * e.x +
                   (static_cast<double>(c.y) + 0.5) * side * e.y;
    }
    std::sort(centres.begin(), centres.end());

    const CellSet proj = project_cells(at_n, v, n);
    const double r = side;
    const double r_eff = r + 0.5 * kSqrt2 * side;  // one-cell widening
    std::int64_t best = 0;
    for (std::size_t i = 0; i < proj.size(); ++i) {
      const double z = (static_cast<double>(proj.cell(i).x) + 0.5) * side * kSqrt2 - shift;
      const auto lo = std::lower_bound(centres.begin(), centres.end(), z - r_eff - half_width);
      const auto hi = std::upper_bound(centres.begin(), centres.end(), z + r_eff + half_width);
      best = std::max<std::int64_t>(best, hi - lo);
    }
    const double lc = std::log2(static_cast<double>(std::max<std::int64_t>(best, 1)));
    xs.push_back(n);
    ys.push_back(lc);
    est.table.push_back(ScalePoint{0, n, lc});
  }
  const SlopeFit fit = fit_slope(xs, ys);
  est.value = std::max(fit.slope, 0.0);
  est.slope_stderr = fit.stderr_slope;
  return est;
}

void write_estimate_csv(std::ostream& os, const DimensionEstimate& est) {
  os << "method,value,stderr,k,m,n,log2count\n";
  const int m = est.scale_fine - est.scale_coarse;
  for (const ScalePoint& p : est.table)
    os << est.method << ',' << est.value << ',' << est.slope_stderr << ',' << p.k << ',' << m
       << ',' << p.n << ',' << p.log2_count << '\n';
}

}  // namespace affdim
