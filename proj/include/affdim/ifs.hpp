#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "affdim/dyadic.hpp"
#include "affdim/estimate.hpp"
#include "affdim/linalg.hpp"

namespace affdim {

// An invertible affine contraction x -> Ax + t on the plane.
struct AffineMap2 {
  Mat2 A;
  Vec2 t;
  Vec2 apply(Vec2 v) const { return A.apply(v) + t; }
};

using Word = std::vector<int>;

// A planar affine IFS. On construction the attractor is enclosed in a tight
// axis-aligned box (fixed point of the box Hutchinson operator) and shifted
// into [0,1]^2 by a single homothety; the linear parts are untouched by the
// conjugation. Estimators work in normalized coordinates throughout.
class Ifs {
 public:
  explicit Ifs(std::vector<AffineMap2> maps,
               std::optional<std::vector<double>> weights = std::nullopt);

  int size() const { return static_cast<int>(maps_.size()); }
  const std::vector<AffineMap2>& maps() const { return maps_; }
  const AffineMap2& map(int i) const { return maps_[static_cast<std::size_t>(i)]; }
  const std::optional<std::vector<double>>& weights() const { return weights_; }

  // Normalization x~ = (x - corner) / scale.
  Vec2 norm_corner() const { return corner_; }
  double norm_scale() const { return scale_; }
  Vec2 to_normalized(Vec2 x) const { return (1.0 / scale_) * (x - corner_); }
  const AffineMap2& normalized_map(int i) const { return norm_maps_[static_cast<std::size_t>(i)]; }

  double bounding_radius() const { return r0_; }  // K lies in B(0, r0) originally
  double max_contraction() const { return max_alpha1_; }

  // Cylinder hull (the normalized attractor box; images bound T_w(K)) and
  // the forward-invariant ball used for subtree pruning.
  std::array<Vec2, 4> seed_corners() const { return seed_; }
  Vec2 prune_center() const { return prune_center_; }
  double prune_radius() const { return prune_radius_; }

 private:
  std::vector<AffineMap2> maps_;
  std::vector<AffineMap2> norm_maps_;
  std::optional<std::vector<double>> weights_;
  Vec2 corner_{};
  double scale_ = 1;
  double r0_ = 0;
  double max_alpha1_ = 0;
  std::array<Vec2, 4> seed_{};
  Vec2 prune_center_{};
  double prune_radius_ = 0;
};

// A 1-D similarity system (r_i x + u_i), ratios in (0,1), optional weights.
class SimilarityIfs1D {
 public:
  struct Map {
    double ratio;
    double offset;
  };

  explicit SimilarityIfs1D(std::vector<Map> maps,
                           std::optional<std::vector<double>> weights = std::nullopt);

  int size() const { return static_cast<int>(maps_.size()); }
  const std::vector<Map>& maps() const { return maps_; }
  const std::optional<std::vector<double>>& weights() const { return weights_; }

  double attractor_min() const { return lo_; }
  double attractor_max() const { return hi_; }
  double norm_scale() const { return scale_; }
  double to_normalized(double x) const { return (x - lo_) / scale_; }
  Map normalized_map(int i) const;

 private:
  std::vector<Map> maps_;
  std::optional<std::vector<double>> weights_;
  double lo_ = 0, hi_ = 1, scale_ = 1;
};

// A self-similar measure: a weighted 1-D similarity system.
class MeasureModel {
 public:
  explicit MeasureModel(SimilarityIfs1D system);
  const SimilarityIfs1D& system() const { return sys_; }
  const std::vector<double>& weights() const { return *sys_.weights(); }

 private:
  SimilarityIfs1D sys_;
};

// --- operations ---

// T_w = T_{w1} o ... o T_{wn} in the IFS's original coordinates.
AffineMap2 compose(const Ifs& ifs, const Word& w);

// Linear part only, with symbols validated.
Mat2 compose_linear(const Ifs& ifs, const Word& w);

enum class RasterMode { outer };

struct RasterOptions {
  std::int64_t max_cells = 120'000'000;
  int prune_check_cells = 4096;
  RasterMode mode = RasterMode::outer;
};

// Outer rasterization of the attractor in normalized coordinates: words are
// subdivided until alpha1(A_w) * diam(seed) <= 2^-(level+1), each stopping
// cylinder's seed image is rasterized as an exact parallelogram, and every
// level cube meeting one is collected. Output is a superset of the true cell
// set; every output cell lies within 2 * 2^-level of the attractor.
CellSet rasterize(const Ifs& ifs, int level, const RasterOptions& opts = {});
CellSet rasterize(const SimilarityIfs1D& ifs, int level, const RasterOptions& opts = {});

// First-coordinate system of a lower-triangular (x-autonomous) IFS.
SimilarityIfs1D project_ifs(const Ifs& ifs);

// Rectangular open set condition: images of the open unit square pairwise
// disjoint. Diagonal systems only.
bool check_rosc(const Ifs& ifs);

// Number of stopping cylinders (alpha2(A_w) <= r < alpha2(A_w-)) whose seed
// parallelogram meets the closed ball B(x, r); x in normalized coordinates.
std::int64_t wbnc_count(const Ifs& ifs, Vec2 x, double r);

// Frostman dimension dim_inf of the self-similar measure: pushes mass onto
// the level-n dyadic grid for n <= depth (splitting straddling cylinders by
// recursion) and minimizes log nu(I) / log |I| at the deepest level.
DimensionEstimate frostman_dim(const MeasureModel& measure, int depth);

// --- input files ---

using AnyIfs = std::variant<Ifs, SimilarityIfs1D>;

// JSON: {"maps": [{"A": [[..]], "t": [..]}, ...], "weights": [...]}.
// 1x1 "A" entries give a 1-D system. Rejects singular or non-contracting
// maps with a message naming the offending index.
AnyIfs parse_ifs_json(const std::string& text);
AnyIfs load_ifs(const std::string& path);

}  // namespace affdim
