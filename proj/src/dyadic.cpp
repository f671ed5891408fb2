#include "affdim/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "affdim/morton.hpp"

namespace affdim {

namespace {

void check_dim(int dim) {
  if (dim != 1 && dim != 2) fail(Errc::invalid_argument, "dim must be 1 or 2");
}

void check_level(int dim, int level) {
  if (level < 0) fail(Errc::invalid_argument, "level must be non-negative");
  if (level > max_level(dim))
    fail(Errc::level_cap, "level " + std::to_string(level) + " exceeds cap for dim " +
                              std::to_string(dim));
}

std::uint64_t cell_key(int dim, const Cell& c) {
  if (dim == 1) return static_cast<std::uint64_t>(c.x);
  return morton::encode2(static_cast<std::uint64_t>(c.x), static_cast<std::uint64_t>(c.y));
}

Cell key_cell(int dim, std::uint64_t key) {
  if (dim == 1) return Cell{static_cast<std::int64_t>(key), 0};
  return Cell{static_cast<std::int64_t>(morton::decode2_x(key)),
              static_cast<std::int64_t>(morton::decode2_y(key))};
}

// Keys cover d*level bits; one level strips d bits.
int key_bits_per_level(int dim) { return dim; }

}  // namespace

DyadicCube::DyadicCube(int dim, int level, Cell coords) : dim_(dim), level_(level), coords_(coords) {
  check_dim(dim);
  check_level(dim, level);
  const std::int64_t bound = std::int64_t{1} << level;
  if (coords.x < 0 || coords.x >= bound) fail(Errc::invalid_argument, "cube x out of range");
  if (dim == 2 && (coords.y < 0 || coords.y >= bound))
    fail(Errc::invalid_argument, "cube y out of range");
  if (dim == 1 && coords.y != 0) fail(Errc::invalid_argument, "1-D cube must have y = 0");
}

std::uint64_t DyadicCube::key() const { return cell_key(dim_, coords_); }

double DyadicCube::side() const { return std::ldexp(1.0, -level_); }

std::array<double, 2> DyadicCube::lower() const {
  return {static_cast<double>(coords_.x) * side(), static_cast<double>(coords_.y) * side()};
}

CellSet CellSet::from_cells(int dim, int level, const std::vector<Cell>& cells) {
  check_dim(dim);
  check_level(dim, level);
  const std::int64_t bound = std::int64_t{1} << level;
  std::vector<std::uint64_t> keys;
  keys.reserve(cells.size());
  for (const Cell& c : cells) {
    if (c.x < 0 || c.x >= bound || (dim == 2 && (c.y < 0 || c.y >= bound)) ||
        (dim == 1 && c.y != 0))
      fail(Errc::invalid_argument, "cell out of range for level");
    keys.push_back(cell_key(dim, c));
  }
  return from_keys(dim, level, std::move(keys), false);
}

CellSet CellSet::from_keys(int dim, int level, std::vector<std::uint64_t> keys,
                           bool sorted_unique) {
  check_dim(dim);
  check_level(dim, level);
  if (!sorted_unique) {
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  }
  CellSet out;
  out.dim_ = dim;
  out.level_ = level;
  out.keys_ = std::move(keys);
  return out;
}

Cell CellSet::cell(std::size_t i) const { return key_cell(dim_, keys_[i]); }

std::vector<Cell> CellSet::cells() const {
  std::vector<Cell> out;
  out.reserve(keys_.size());
  for (std::uint64_t k : keys_) out.push_back(key_cell(dim_, k));
  return out;
}

bool CellSet::contains_key(std::uint64_t key) const {
  return std::binary_search(keys_.begin(), keys_.end(), key);
}

std::int64_t covering_number(const CellSet& cells, int n) {
  if (n < 0) fail(Errc::invalid_argument, "covering level must be non-negative");
  if (n > cells.level())
    fail(Errc::invalid_argument, "cannot refine a coarser representation (n > cells.level)");
  const int shift = key_bits_per_level(cells.dim()) * (cells.level() - n);
  std::int64_t count = 0;
  std::uint64_t prev = 0;
  bool first = true;
  for (std::uint64_t k : cells.keys()) {
    const std::uint64_t p = shift >= 64 ? 0 : (k >> shift);
    if (first || p != prev) ++count;
    prev = p;
    first = false;
  }
  return count;
}

CellSet truncate(const CellSet& cells, int n) {
  if (n < 0 || n > cells.level()) fail(Errc::invalid_argument, "bad truncation level");
  const int shift = key_bits_per_level(cells.dim()) * (cells.level() - n);
  std::vector<std::uint64_t> keys;
  keys.reserve(cells.size());
  std::uint64_t prev = 0;
  bool first = true;
  for (std::uint64_t k : cells.keys()) {
    const std::uint64_t p = shift >= 64 ? 0 : (k >> shift);
    if (first || p != prev) keys.push_back(p);
    prev = p;
    first = false;
  }
  return CellSet::from_keys(cells.dim(), n, std::move(keys), true);
}

CellSet point_cells(std::array<double, 2> point, int level) {
  check_level(2, level);
  for (double v : point)
    if (!(v >= 0.0 && v <= 1.0)) fail(Errc::invalid_argument, "point outside [0,1]^d");
  const double scale = std::ldexp(1.0, level);
  const std::int64_t bound = std::int64_t{1} << level;
  std::array<std::vector<std::int64_t>, 2> axis;
  for (int i = 0; i < 2; ++i) {
    const double t = point[i] * scale;
    const double fl = std::floor(t);
    auto idx = static_cast<std::int64_t>(fl);
    if (t == fl) {
      // On a grid plane: both adjacent closed cubes contain the point.
      if (idx - 1 >= 0) axis[i].push_back(idx - 1);
      if (idx < bound) axis[i].push_back(idx);
    } else {
      axis[i].push_back(std::min(idx, bound - 1));
    }
  }
  std::vector<Cell> cells;
  for (std::int64_t x : axis[0])
    for (std::int64_t y : axis[1]) cells.push_back(Cell{x, y});
  return CellSet::from_cells(2, level, cells);
}

CellSet restrict_to(const CellSet& cells, const DyadicCube& q) {
  if (q.dim() != cells.dim()) fail(Errc::invalid_argument, "dimension mismatch");
  if (q.level() > cells.level()) fail(Errc::invalid_argument, "Q finer than cell set");
  const int shift = key_bits_per_level(cells.dim()) * (cells.level() - q.level());
  const std::uint64_t lo = shift >= 64 ? 0 : (q.key() << shift);
  const std::uint64_t hi = shift >= 64 ? ~0ull : ((q.key() + 1) << shift);
  auto ks = cells.keys();
  auto first = std::lower_bound(ks.begin(), ks.end(), lo);
  auto last = std::lower_bound(ks.begin(), ks.end(), hi);
  return CellSet::from_keys(cells.dim(), cells.level(),
                            std::vector<std::uint64_t>(first, last), true);
}

CellSet renormalize(const CellSet& cells, const DyadicCube& q) {
  CellSet inside = restrict_to(cells, q);
  if (inside.empty())
    fail(Errc::empty_result, "renormalize: restriction to the cube is empty");
  const int shift = key_bits_per_level(cells.dim()) * (cells.level() - q.level());
  const std::uint64_t base = shift >= 64 ? 0 : (q.key() << shift);
  std::vector<std::uint64_t> keys;
  keys.reserve(inside.size());
  for (std::uint64_t k : inside.keys()) keys.push_back(k - base);
  return CellSet::from_keys(cells.dim(), cells.level() - q.level(), std::move(keys), true);
}

namespace {

// Distances between equal-size cells reduce to lattice distances between
// lower corners; everything stays in integers until the final sqrt.
struct RefinedFamily {
  int dim;
  int level;
  std::vector<Cell> cells;  // sorted by x then y
};

RefinedFamily refine_family(const CellSet& s, int level) {
  const int extra = level - s.level();
  RefinedFamily out;
  out.dim = s.dim();
  out.level = level;
  const std::int64_t f = std::int64_t{1} << extra;
  for (std::size_t i = 0; i < s.size(); ++i) {
    Cell c = s.cell(i);
    for (std::int64_t dx = 0; dx < f; ++dx) {
      if (s.dim() == 1) {
        out.cells.push_back(Cell{c.x * f + dx, 0});
      } else {
        for (std::int64_t dy = 0; dy < f; ++dy)
          out.cells.push_back(Cell{c.x * f + dx, c.y * f + dy});
      }
    }
  }
  std::sort(out.cells.begin(), out.cells.end(), [](const Cell& a, const Cell& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  return out;
}

// max over a of min over b of squared corner distance.
std::int64_t directed_sq(const RefinedFamily& a, const RefinedFamily& b) {
  std::int64_t worst = 0;
  for (const Cell& ca : a.cells) {
    // b sorted by x: scan outward from the closest x.
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    auto lo = std::lower_bound(b.cells.begin(), b.cells.end(), ca.x,
                               [](const Cell& c, std::int64_t x) { return c.x < x; });
    auto consider = [&](const Cell& cb) {
      const std::int64_t dx = cb.x - ca.x, dy = cb.y - ca.y;
      const std::int64_t d2 = dx * dx + dy * dy;
      if (d2 < best) best = d2;
    };
    auto fwd = lo;
    while (fwd != b.cells.end()) {
      const std::int64_t dx = fwd->x - ca.x;
      if (dx * dx >= best) break;
      consider(*fwd);
      ++fwd;
    }
    auto bwd = lo;
    while (bwd != b.cells.begin()) {
      --bwd;
      const std::int64_t dx = bwd->x - ca.x;
      if (dx * dx >= best) break;
      consider(*bwd);
    }
    if (best > worst) worst = best;
  }
  return worst;
}

std::int64_t directed_refined_sq(const CellSet& a, const CellSet& b, int level) {
  RefinedFamily ra = refine_family(a, level);
  RefinedFamily rb = refine_family(b, level);
  return directed_sq(ra, rb);
}

void check_distance_args(const CellSet& a, const CellSet& b) {
  if (a.dim() != b.dim()) fail(Errc::invalid_argument, "dimension mismatch");
  if (a.empty() || b.empty()) fail(Errc::invalid_argument, "distance of empty cell set");
  const int common = std::max(a.level(), b.level());
  auto refined_size = [&](const CellSet& s) {
    const int extra = common - s.level();
    return static_cast<double>(s.size()) * std::ldexp(1.0, extra * s.dim());
  };
  if (refined_size(a) + refined_size(b) > 5e7)
    fail(Errc::resource_limit, "hausdorff refinement too large");
}

}  // namespace

double one_sided_distance(const CellSet& a, const CellSet& b) {
  check_distance_args(a, b);
  const int common = std::max(a.level(), b.level());
  const std::int64_t d2 = directed_refined_sq(a, b, common);
  return std::sqrt(static_cast<double>(d2)) * std::ldexp(1.0, -common);
}

double hausdorff_distance(const CellSet& a, const CellSet& b) {
  check_distance_args(a, b);
  const int common = std::max(a.level(), b.level());
  const std::int64_t ab = directed_refined_sq(a, b, common);
  const std::int64_t ba = directed_refined_sq(b, a, common);
  return std::sqrt(static_cast<double>(std::max(ab, ba))) * std::ldexp(1.0, -common);
}

CellSetPyramid::CellSetPyramid(const CellSet& finest) : dim_(finest.dim()), finest_(finest.level()) {
  if (finest.empty()) fail(Errc::invalid_argument, "pyramid of empty cell set");
  levels_[finest_] = finest;
  for (int n = finest_ - 1; n >= 0; --n) levels_[n] = truncate(levels_[n + 1], n);
}

const CellSet& CellSetPyramid::at(int level) const {
  auto it = levels_.find(level);
  if (it == levels_.end()) fail(Errc::invalid_argument, "pyramid level out of range");
  return it->second;
}

void write_cells(std::ostream& os, const CellSet& cells) {
  os << cells.dim() << ' ' << cells.level() << ' ' << cells.size() << '\n';
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Cell c = cells.cell(i);
    if (cells.dim() == 1)
      os << c.x << '\n';
    else
      os << c.x << ' ' << c.y << '\n';
  }
}

CellSet read_cells(std::istream& is) {
  int dim = 0, level = 0;
  std::size_t count = 0;
  if (!(is >> dim >> level >> count)) fail(Errc::io_error, "bad cell set header");
  check_dim(dim);
  check_level(dim, level);
  std::vector<Cell> cells(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (dim == 1) {
      if (!(is >> cells[i].x)) fail(Errc::io_error, "truncated cell set");
    } else {
      if (!(is >> cells[i].x >> cells[i].y)) fail(Errc::io_error, "truncated cell set");
    }
  }
  return CellSet::from_cells(dim, level, cells);
}

void save_cells(const std::string& path, const CellSet& cells) {
  std::ofstream f(path);
  if (!f) fail(Errc::io_error, "cannot open " + path + " for writing");
  write_cells(f, cells);
}

CellSet load_cells(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::io_error, "cannot open " + path);
  return read_cells(f);
}

}  // namespace affdim
