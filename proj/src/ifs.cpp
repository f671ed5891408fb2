#include "affdim/ifs.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "affdim/morton.hpp"
#include "json.hpp"

namespace affdim {

namespace {

constexpr double kWeightTol = 1e-12;

void validate_weights(const std::optional<std::vector<double>>& w, std::size_t n) {
  if (!w) return;
  if (w->size() != n) fail(Errc::invalid_argument, "weights size does not match map count");
  double sum = 0;
  for (double p : *w) {
    if (!(p > 0)) fail(Errc::invalid_argument, "weights must be positive");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kWeightTol)
    fail(Errc::invalid_argument, "weights must sum to 1 within 1e-12");
}

struct Box2 {
  Vec2 lo, hi;
};

Box2 image_box(const AffineMap2& m, const Box2& b) {
  auto term = [](double coeff, double lo, double hi) {
    const double a = coeff * lo, bb = coeff * hi;
    return std::pair<double, double>{std::min(a, bb), std::max(a, bb)};
  };
  auto [x1lo, x1hi] = term(m.A.a, b.lo.x, b.hi.x);
  auto [x2lo, x2hi] = term(m.A.b, b.lo.y, b.hi.y);
  auto [y1lo, y1hi] = term(m.A.c, b.lo.x, b.hi.x);
  auto [y2lo, y2hi] = term(m.A.d, b.lo.y, b.hi.y);
  return Box2{{m.t.x + x1lo + x2lo, m.t.y + y1lo + y2lo},
              {m.t.x + x1hi + x2hi, m.t.y + y1hi + y2hi}};
}

// Iterate B -> bbox(U T_i(B)) clamped to the a-priori bound [-r0, r0]^2;
// every iterate contains the attractor's bounding box, and the clamp keeps
// rotation-heavy systems from blowing the box up.
Box2 attractor_box(const std::vector<AffineMap2>& maps, double r0) {
  Box2 box{{-r0, -r0}, {r0, r0}};
  for (int iter = 0; iter < 400; ++iter) {
    Box2 next{{1e300, 1e300}, {-1e300, -1e300}};
    for (const AffineMap2& m : maps) {
      Box2 ib = image_box(m, box);
      next.lo.x = std::min(next.lo.x, ib.lo.x);
      next.lo.y = std::min(next.lo.y, ib.lo.y);
      next.hi.x = std::max(next.hi.x, ib.hi.x);
      next.hi.y = std::max(next.hi.y, ib.hi.y);
    }
    next.lo.x = std::max(next.lo.x, -r0);
    next.lo.y = std::max(next.lo.y, -r0);
    next.hi.x = std::min(next.hi.x, r0);
    next.hi.y = std::min(next.hi.y, r0);
    const double change = std::max(std::max(std::fabs(next.lo.x - box.lo.x), std::fabs(next.lo.y - box.lo.y)),
                                   std::max(std::fabs(next.hi.x - box.hi.x), std::fabs(next.hi.y - box.hi.y)));
    box = next;
    if (change == 0.0) break;
  }
  return box;
}

}  // namespace

Ifs::Ifs(std::vector<AffineMap2> maps, std::optional<std::vector<double>> weights)
    : maps_(std::move(maps)), weights_(std::move(weights)) {
  if (maps_.empty()) fail(Errc::invalid_ifs, "IFS needs at least one map");
  validate_weights(weights_, maps_.size());
  double max_t = 0;
  max_alpha1_ = 0;
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    const Mat2& A = maps_[i].A;
    if (A.det() == 0.0)
      fail(Errc::invalid_ifs, "map " + std::to_string(i) + " is singular");
    const double a1 = alpha1(A);
    if (!(a1 < 1.0))
      fail(Errc::invalid_ifs, "map " + std::to_string(i) + " is not a contraction (|A| >= 1)");
    max_alpha1_ = std::max(max_alpha1_, a1);
    max_t = std::max(max_t, maps_[i].t.norm());
  }
  r0_ = max_t > 0 ? max_t / (1.0 - max_alpha1_) : 0.0;

  Box2 box = attractor_box(maps_, r0_);
  double span_x = std::max(box.hi.x - box.lo.x, 0.0);
  double span_y = std::max(box.hi.y - box.lo.y, 0.0);
  // corner-aligned with a power-of-two scale: the normalization is then a
  // dyadic homothety and grid-like attractors keep their dyadic structure
  const double span = std::max({span_x, span_y, 1e-9});
  scale_ = std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(span) - 1e-12)));
  corner_ = box.lo;

  const double inv = 1.0 / scale_;
  norm_maps_.reserve(maps_.size());
  for (const AffineMap2& m : maps_) {
    // conjugation by the homothety x -> (x - corner)/scale keeps A
    Vec2 tn = inv * (m.t + m.A.apply(corner_) - corner_);
    norm_maps_.push_back(AffineMap2{m.A, tn});
  }

  // cylinder hull: the normalized attractor box (tight, contains K~); the
  // prune ball is the invariant ball image and contains every hull image
  const double hx = span_x * inv, hy = span_y * inv;
  seed_ = {Vec2{0, 0}, Vec2{hx, 0}, Vec2{hx, hy}, Vec2{0, hy}};
  prune_center_ = to_normalized(Vec2{0, 0});
  prune_radius_ = std::sqrt(2.0) * std::max(r0_, 1e-12) * inv;
}

SimilarityIfs1D::SimilarityIfs1D(std::vector<Map> maps, std::optional<std::vector<double>> weights)
    : maps_(std::move(maps)), weights_(std::move(weights)) {
  if (maps_.empty()) fail(Errc::invalid_ifs, "1-D system needs at least one map");
  validate_weights(weights_, maps_.size());
  double max_r = 0, max_u = 0;
  for (std::size_t i = 0; i < maps_.size(); ++i) {
    if (!(maps_[i].ratio > 0 && maps_[i].ratio < 1))
      fail(Errc::invalid_ifs, "map " + std::to_string(i) + " ratio must be in (0,1)");
    max_r = std::max(max_r, maps_[i].ratio);
    max_u = std::max(max_u, std::fabs(maps_[i].offset));
  }
  const double r0 = max_u > 0 ? max_u / (1.0 - max_r) : 0.0;
  double lo = -r0, hi = r0;
  for (int iter = 0; iter < 400; ++iter) {
    double nlo = 1e300, nhi = -1e300;
    for (const Map& m : maps_) {
      nlo = std::min(nlo, m.ratio * lo + m.offset);
      nhi = std::max(nhi, m.ratio * hi + m.offset);
    }
    const double change = std::max(std::fabs(nlo - lo), std::fabs(nhi - hi));
    lo = nlo;
    hi = nhi;
    if (change == 0.0) break;
  }
  lo_ = lo;
  hi_ = hi;
  const double span = std::max(hi - lo, 1e-9);
  scale_ = std::ldexp(1.0, static_cast<int>(std::ceil(std::log2(span) - 1e-12)));
}

SimilarityIfs1D::Map SimilarityIfs1D::normalized_map(int i) const {
  const Map& m = maps_[static_cast<std::size_t>(i)];
  return Map{m.ratio, (m.ratio * lo_ + m.offset - lo_) / scale_};
}

MeasureModel::MeasureModel(SimilarityIfs1D system) : sys_(std::move(system)) {
  if (!sys_.weights()) fail(Errc::invalid_argument, "measure model requires weights");
}

AffineMap2 compose(const Ifs& ifs, const Word& w) {
  AffineMap2 acc{Mat2::identity(), Vec2{0, 0}};
  for (int s : w) {
    if (s < 0 || s >= ifs.size()) fail(Errc::invalid_argument, "word symbol out of range");
    const AffineMap2& m = ifs.map(s);
    acc.t = acc.A.apply(m.t) + acc.t;
    acc.A = acc.A * m.A;
  }
  return acc;
}

Mat2 compose_linear(const Ifs& ifs, const Word& w) {
  Mat2 acc = Mat2::identity();
  for (int s : w) {
    if (s < 0 || s >= ifs.size()) fail(Errc::invalid_argument, "word symbol out of range");
    acc = acc * ifs.map(s).A;
  }
  return acc;
}

namespace {

// Occupancy bitmap over 64-cell morton blocks.
struct BlockMap {
  std::unordered_map<std::uint64_t, std::uint64_t> blocks;
  std::int64_t count = 0;

  bool set(std::uint64_t key) {
    std::uint64_t& b = blocks[key >> 6];
    const std::uint64_t bit = std::uint64_t{1} << (key & 63);
    if (b & bit) return false;
    b |= bit;
    ++count;
    return true;
  }
  bool test(std::uint64_t key) const {
    auto it = blocks.find(key >> 6);
    return it != blocks.end() && ((it->second >> (key & 63)) & 1);
  }
  std::vector<std::uint64_t> keys() const {
    std::vector<std::uint64_t> out;
    out.reserve(static_cast<std::size_t>(count));
    for (const auto& [bk, bits] : blocks) {
      std::uint64_t rest = bits;
      while (rest) {
        const int bit = std::countr_zero(rest);
        out.push_back((bk << 6) | static_cast<std::uint64_t>(bit));
        rest &= rest - 1;
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

// Closed-set separating axis test for a parallelogram against an axis box.
bool parallelogram_meets_box(const std::array<Vec2, 4>& q, Vec2 blo, Vec2 bhi) {
  auto overlap_on = [&](Vec2 axis) {
    double qlo = 1e300, qhi = -1e300;
    for (const Vec2& p : q) {
      const double v = dot(axis, p);
      qlo = std::min(qlo, v);
      qhi = std::max(qhi, v);
    }
    const double c1 = dot(axis, blo);
    const double c2x = axis.x * (bhi.x - blo.x);
    const double c2y = axis.y * (bhi.y - blo.y);
    const double blo_p = c1 + std::min(0.0, c2x) + std::min(0.0, c2y);
    const double bhi_p = c1 + std::max(0.0, c2x) + std::max(0.0, c2y);
    return qhi >= blo_p && bhi_p >= qlo;
  };
  const Vec2 u = q[1] - q[0];
  const Vec2 v = q[3] - q[0];
  return overlap_on(Vec2{1, 0}) && overlap_on(Vec2{0, 1}) &&
         overlap_on(Vec2{-u.y, u.x}) && overlap_on(Vec2{-v.y, v.x});
}

struct CellRange {
  std::int64_t x0, x1, y0, y1;
  bool empty() const { return x0 > x1 || y0 > y1; }
  std::int64_t count() const { return empty() ? 0 : (x1 - x0 + 1) * (y1 - y0 + 1); }
};

// Closed cells meeting the closed box [lo, hi], clamped to the level grid.
CellRange cells_meeting(Vec2 lo, Vec2 hi, int level) {
  const double h = std::ldexp(1.0, -level);
  const std::int64_t grid = std::int64_t{1} << level;
  CellRange r;
  r.x0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(lo.x / h - 1.0)));
  r.y0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(lo.y / h - 1.0)));
  r.x1 = std::min<std::int64_t>(grid - 1, static_cast<std::int64_t>(std::floor(hi.x / h)));
  r.y1 = std::min<std::int64_t>(grid - 1, static_cast<std::int64_t>(std::floor(hi.y / h)));
  return r;
}

}  // namespace

CellSet rasterize(const Ifs& ifs, int level, const RasterOptions& opts) {
  if (level < 0) fail(Errc::invalid_argument, "level must be non-negative");
  if (level > kMaxLevel2d)
    fail(Errc::level_cap, "rasterization level " + std::to_string(level) + " beyond cap");
  const double h = std::ldexp(1.0, -level);
  const auto seed = ifs.seed_corners();
  const double seed_diam = (seed[2] - seed[0]).norm();
  const double target = 0.5 * h;

  BlockMap marked;
  struct Node {
    Mat2 A;
    Vec2 t;
  };
  std::vector<Node> stack;
  stack.push_back(Node{Mat2::identity(), Vec2{0, 0}});

  auto emit = [&](const Node& nd) {
    std::array<Vec2, 4> q;
    Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (int j = 0; j < 4; ++j) {
      q[static_cast<std::size_t>(j)] = nd.A.apply(seed[static_cast<std::size_t>(j)]) + nd.t;
      lo.x = std::min(lo.x, q[static_cast<std::size_t>(j)].x);
      lo.y = std::min(lo.y, q[static_cast<std::size_t>(j)].y);
      hi.x = std::max(hi.x, q[static_cast<std::size_t>(j)].x);
      hi.y = std::max(hi.y, q[static_cast<std::size_t>(j)].y);
    }
    const CellRange r = cells_meeting(lo, hi, level);
    for (std::int64_t cx = r.x0; cx <= r.x1; ++cx)
      for (std::int64_t cy = r.y0; cy <= r.y1; ++cy) {
        const Vec2 blo{static_cast<double>(cx) * h, static_cast<double>(cy) * h};
        const Vec2 bhi{blo.x + h, blo.y + h};
        if (parallelogram_meets_box(q, blo, bhi))
          marked.set(morton::encode2(static_cast<std::uint64_t>(cx), static_cast<std::uint64_t>(cy)));
      }
    if (marked.count > opts.max_cells)
      fail(Errc::resource_limit, "rasterize: cell budget exceeded at level " + std::to_string(level));
  };

  // A subtree cannot contribute new cells once every cell its invariant-ball
  // image can touch is already marked.
  auto covered = [&](const Node& nd) {
    const Vec2 c = nd.A.apply(ifs.prune_center()) + nd.t;
    const double ex = std::hypot(nd.A.a, nd.A.b) * ifs.prune_radius();
    const double ey = std::hypot(nd.A.c, nd.A.d) * ifs.prune_radius();
    const CellRange r = cells_meeting(Vec2{c.x - ex, c.y - ey}, Vec2{c.x + ex, c.y + ey}, level);
    if (r.empty()) return true;
    if (r.count() > opts.prune_check_cells) return false;
    for (std::int64_t cx = r.x0; cx <= r.x1; ++cx)
      for (std::int64_t cy = r.y0; cy <= r.y1; ++cy)
        if (!marked.test(morton::encode2(static_cast<std::uint64_t>(cx), static_cast<std::uint64_t>(cy))))
          return false;
    return true;
  };

  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    if (alpha1(nd.A) * seed_diam <= target) {
      emit(nd);
      continue;
    }
    if (covered(nd)) continue;
    for (int i = 0; i < ifs.size(); ++i) {
      const AffineMap2& m = ifs.normalized_map(i);
      stack.push_back(Node{nd.A * m.A, nd.A.apply(m.t) + nd.t});
    }
  }
  return CellSet::from_keys(2, level, marked.keys(), true);
}

CellSet rasterize(const SimilarityIfs1D& ifs, int level, const RasterOptions& opts) {
  if (level < 0) fail(Errc::invalid_argument, "level must be non-negative");
  if (level > kMaxLevel1d)
    fail(Errc::level_cap, "rasterization level " + std::to_string(level) + " beyond cap");
  const double h = std::ldexp(1.0, -level);
  const std::int64_t grid = std::int64_t{1} << level;

  // cylinder hull: the normalized attractor interval; its images are the
  // exact convex hulls of the cylinders (monotone maps), so they nest
  const double s_lo = 0.0;
  const double s_hi = (ifs.attractor_max() - ifs.attractor_min()) / ifs.norm_scale();
  const double seed_len = s_hi - s_lo;
  const double target = 0.5 * h;

  BlockMap marked;
  struct Node {
    double r, off;
  };
  std::vector<Node> stack{Node{1.0, 0.0}};

  auto mark_interval = [&](double lo, double hi) {
    const std::int64_t i0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(lo / h - 1.0)));
    const std::int64_t i1 = std::min<std::int64_t>(grid - 1, static_cast<std::int64_t>(std::floor(hi / h)));
    for (std::int64_t i = i0; i <= i1; ++i) marked.set(static_cast<std::uint64_t>(i));
    if (marked.count > opts.max_cells)
      fail(Errc::resource_limit, "rasterize: cell budget exceeded at level " + std::to_string(level));
  };

  auto covered = [&](double lo, double hi) {
    const std::int64_t i0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(lo / h - 1.0)));
    const std::int64_t i1 = std::min<std::int64_t>(grid - 1, static_cast<std::int64_t>(std::floor(hi / h)));
    if (i1 < i0) return true;
    if (i1 - i0 + 1 > opts.prune_check_cells) return false;
    for (std::int64_t i = i0; i <= i1; ++i)
      if (!marked.test(static_cast<std::uint64_t>(i))) return false;
    return true;
  };

  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    const double lo = nd.r * s_lo + nd.off;
    const double hi = nd.r * s_hi + nd.off;
    if (nd.r * seed_len <= target) {
      mark_interval(lo, hi);
      continue;
    }
    if (covered(lo, hi)) continue;
    for (int i = 0; i < ifs.size(); ++i) {
      const auto m = ifs.normalized_map(i);
      stack.push_back(Node{nd.r * m.ratio, nd.r * m.offset + nd.off});
    }
  }
  return CellSet::from_keys(1, level, marked.keys(), true);
}

SimilarityIfs1D project_ifs(const Ifs& ifs) {
  std::vector<SimilarityIfs1D::Map> maps;
  maps.reserve(static_cast<std::size_t>(ifs.size()));
  for (int i = 0; i < ifs.size(); ++i) {
    const AffineMap2& m = ifs.map(i);
    if (std::fabs(m.A.b) > 1e-13)
      fail(Errc::not_projectable,
           "map " + std::to_string(i) + " has no autonomous first coordinate (A12 != 0)");
    if (!(m.A.a > 0 && m.A.a < 1))
      fail(Errc::not_projectable,
           "map " + std::to_string(i) + " horizontal ratio outside (0,1)");
    maps.push_back({m.A.a, m.t.x});
  }
  return SimilarityIfs1D(std::move(maps), ifs.weights());
}

bool check_rosc(const Ifs& ifs) {
  struct Rect {
    double x0, x1, y0, y1;
  };
  std::vector<Rect> rects;
  for (int i = 0; i < ifs.size(); ++i) {
    const AffineMap2& m = ifs.map(i);
    if (std::fabs(m.A.b) > 1e-14 || std::fabs(m.A.c) > 1e-14)
      fail(Errc::unsupported, "check_rosc requires a diagonal IFS");
    const double xa = m.t.x, xb = m.t.x + m.A.a;
    const double ya = m.t.y, yb = m.t.y + m.A.d;
    rects.push_back(Rect{std::min(xa, xb), std::max(xa, xb), std::min(ya, yb), std::max(ya, yb)});
  }
  for (std::size_t i = 0; i < rects.size(); ++i)
    for (std::size_t j = i + 1; j < rects.size(); ++j) {
      const bool x_overlap = rects[i].x0 < rects[j].x1 && rects[j].x0 < rects[i].x1;
      const bool y_overlap = rects[i].y0 < rects[j].y1 && rects[j].y0 < rects[i].y1;
      if (x_overlap && y_overlap) return false;
    }
  return true;
}

std::int64_t wbnc_count(const Ifs& ifs, Vec2 x, double r) {
  if (!(r > 0 && r < 1)) fail(Errc::invalid_argument, "wbnc radius must be in (0,1)");
  const auto seed = ifs.seed_corners();

  auto distance_to_parallelogram = [&](const std::array<Vec2, 4>& q, Vec2 p) {
    bool pos = false, neg = false;
    for (int k = 0; k < 4; ++k) {
      const Vec2 a = q[static_cast<std::size_t>(k)];
      const Vec2 b = q[static_cast<std::size_t>((k + 1) % 4)];
      const double cr = cross(b - a, p - a);
      if (cr > 0) pos = true;
      if (cr < 0) neg = true;
    }
    if (!(pos && neg)) return 0.0;  // inside or on the boundary
    double best = 1e300;
    for (int k = 0; k < 4; ++k) {
      const Vec2 a = q[static_cast<std::size_t>(k)];
      const Vec2 b = q[static_cast<std::size_t>((k + 1) % 4)];
      const Vec2 ab = b - a;
      const double len2 = dot(ab, ab);
      double tt = len2 > 0 ? dot(p - a, ab) / len2 : 0.0;
      tt = std::clamp(tt, 0.0, 1.0);
      best = std::min(best, (p - (a + tt * ab)).norm());
    }
    return best;
  };

  struct Node {
    Mat2 A;
    Vec2 t;
  };
  std::vector<Node> stack{Node{Mat2::identity(), Vec2{0, 0}}};
  std::int64_t count = 0;
  std::int64_t visited = 0;
  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    if (++visited > 20'000'000) fail(Errc::resource_limit, "wbnc_count: word budget exceeded");
    for (int i = 0; i < ifs.size(); ++i) {
      const AffineMap2& m = ifs.normalized_map(i);
      Node child{nd.A * m.A, nd.A.apply(m.t) + nd.t};
      if (alpha2(child.A) <= r) {
        std::array<Vec2, 4> q;
        for (int j = 0; j < 4; ++j)
          q[static_cast<std::size_t>(j)] = child.A.apply(seed[static_cast<std::size_t>(j)]) + child.t;
        // open ball: cylinders touching at exactly distance r do not count
        if (distance_to_parallelogram(q, x) < r) ++count;
      } else {
        stack.push_back(child);
      }
    }
  }
  return count;
}

DimensionEstimate frostman_dim(const MeasureModel& measure, int depth) {
  if (depth < 4) fail(Errc::invalid_argument, "frostman depth must be >= 4");
  if (depth > 40) fail(Errc::invalid_argument, "frostman depth too large");
  const SimilarityIfs1D& sys = measure.system();
  const std::vector<double>& weights = measure.weights();
  const int n_maps = sys.size();
  std::vector<SimilarityIfs1D::Map> nm(static_cast<std::size_t>(n_maps));
  for (int i = 0; i < n_maps; ++i) nm[static_cast<std::size_t>(i)] = sys.normalized_map(i);

  const double grid = std::ldexp(1.0, depth);
  const std::int64_t cells = std::int64_t{1} << depth;
  // straddling cylinders below these cutoffs deposit at their midpoint; for
  // dyadic-ratio systems every cylinder lands exactly and the cutoffs never
  // trigger
  const double ratio_floor = std::ldexp(1.0, -(depth + 12));
  const double mass_floor = std::ldexp(1.0, -(depth + 14));
  std::unordered_map<std::int64_t, double> mass;

  auto deposit = [&](double pos, double m) {
    auto idx = static_cast<std::int64_t>(std::floor(pos * grid));
    idx = std::clamp<std::int64_t>(idx, 0, cells - 1);
    mass[idx] += m;
  };

  struct Key {
    double r, off;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t a, b;
      std::memcpy(&a, &k.r, 8);
      std::memcpy(&b, &k.off, 8);
      return std::hash<std::uint64_t>()(a * 0x9e3779b97f4a7c15ull ^ b);
    }
  };

  // Generation-wise expansion with exact-duplicate aggregation; identical
  // cylinders from overlapping words collapse to one node with summed mass.
  std::unordered_map<Key, double, KeyHash> gen;
  gen[Key{1.0, 0.0}] = 1.0;
  std::int64_t budget = 50'000'000;
  while (!gen.empty()) {
    std::unordered_map<Key, double, KeyHash> next;
    for (const auto& [key, m] : gen) {
      if ((budget -= n_maps) < 0) fail(Errc::resource_limit, "frostman_dim: node budget exceeded");
      for (int i = 0; i < n_maps; ++i) {
        const double r = key.r * nm[static_cast<std::size_t>(i)].ratio;
        const double off = key.r * nm[static_cast<std::size_t>(i)].offset + key.off;
        const double p = m * weights[static_cast<std::size_t>(i)];
        const double lo = off, hi = off + r;
        auto idx = static_cast<std::int64_t>(std::floor(lo * grid));
        idx = std::clamp<std::int64_t>(idx, 0, cells - 1);
        const double cell_hi = static_cast<double>(idx + 1) / grid;
        if (hi <= cell_hi) {
          mass[idx] += p;
        } else if (r <= ratio_floor || p < mass_floor) {
          deposit(0.5 * (lo + hi), p);
        } else {
          next[Key{r, off}] += p;
        }
      }
    }
    gen = std::move(next);
  }

  // Aggregate upward and record the per-level minimal local exponent.
  DimensionEstimate est;
  est.method = "frostman";
  est.scale_coarse = 0;
  est.scale_fine = depth;
  std::unordered_map<std::int64_t, double> level_mass = std::move(mass);
  std::vector<double> per_level(static_cast<std::size_t>(depth) + 1, 0.0);
  for (int n = depth; n >= 1; --n) {
    double max_mass = 0;
    for (const auto& [idx, m] : level_mass) max_mass = std::max(max_mass, m);
    per_level[static_cast<std::size_t>(n)] = -std::log2(max_mass) / n;
    est.table.push_back(ScalePoint{0, n, -std::log2(max_mass)});
    if (n > 1) {
      std::unordered_map<std::int64_t, double> coarser;
      for (const auto& [idx, m] : level_mass) coarser[idx >> 1] += m;
      level_mass = std::move(coarser);
    }
  }
  std::reverse(est.table.begin(), est.table.end());
  est.value = per_level[static_cast<std::size_t>(depth)];
  est.slope_stderr = 0;
  return est;
}

namespace {

AnyIfs parse_ifs_value(const nlohmann::json& j) {
  if (!j.contains("maps") || !j["maps"].is_array() || j["maps"].empty())
    fail(Errc::invalid_ifs, "IFS file needs a non-empty \"maps\" array");
  std::optional<std::vector<double>> weights;
  if (j.contains("weights")) weights = j["weights"].get<std::vector<double>>();

  const auto& jmaps = j["maps"];
  const auto& a0 = jmaps[0]["A"];
  const bool one_d = a0.is_array() && a0.size() == 1;

  if (one_d) {
    std::vector<SimilarityIfs1D::Map> maps;
    for (std::size_t i = 0; i < jmaps.size(); ++i) {
      const auto& jm = jmaps[i];
      const auto A = jm["A"].get<std::vector<std::vector<double>>>();
      const auto t = jm["t"].get<std::vector<double>>();
      if (A.size() != 1 || A[0].size() != 1 || t.size() != 1)
        fail(Errc::invalid_ifs, "map " + std::to_string(i) + ": expected 1x1 A and 1-vector t");
      if (A[0][0] == 0.0) fail(Errc::invalid_ifs, "map " + std::to_string(i) + " is singular");
      if (!(std::fabs(A[0][0]) < 1.0))
        fail(Errc::invalid_ifs, "map " + std::to_string(i) + " is not a contraction");
      if (A[0][0] < 0)
        fail(Errc::invalid_ifs, "map " + std::to_string(i) + ": negative 1-D ratio unsupported");
      maps.push_back({A[0][0], t[0]});
    }
    return SimilarityIfs1D(std::move(maps), std::move(weights));
  }

  std::vector<AffineMap2> maps;
  for (std::size_t i = 0; i < jmaps.size(); ++i) {
    const auto& jm = jmaps[i];
    const auto A = jm["A"].get<std::vector<std::vector<double>>>();
    const auto t = jm["t"].get<std::vector<double>>();
    if (A.size() != 2 || A[0].size() != 2 || A[1].size() != 2 || t.size() != 2)
      fail(Errc::invalid_ifs, "map " + std::to_string(i) + ": expected 2x2 A and 2-vector t");
    AffineMap2 m{Mat2{A[0][0], A[0][1], A[1][0], A[1][1]}, Vec2{t[0], t[1]}};
    if (m.A.det() == 0.0) fail(Errc::invalid_ifs, "map " + std::to_string(i) + " is singular");
    if (!(alpha1(m.A) < 1.0))
      fail(Errc::invalid_ifs, "map " + std::to_string(i) + " is not a contraction");
    maps.push_back(m);
  }
  return Ifs(std::move(maps), std::move(weights));
}

}  // namespace

AnyIfs parse_ifs_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    fail(Errc::io_error, std::string("IFS JSON parse error: ") + e.what());
  }
  return parse_ifs_value(j);
}

AnyIfs load_ifs(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::io_error, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_ifs_json(ss.str());
}

}  // namespace affdim
