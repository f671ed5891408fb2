#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "affdim/dimension.hpp"
#include "affdim/dyadic.hpp"
#include "affdim/ifs.hpp"

namespace affdim {

// Count comparisons against 2^exponent share one epsilon policy so the
// certifier and every re-verifier agree on borderline cases.
inline bool count_geq_pow2(std::int64_t count, double exponent) {
  return static_cast<double>(count) >= std::exp2(exponent) * (1.0 - 1e-8);
}

enum class PigeonholeMode { branching, counting };

struct PigeonholeResult {
  PigeonholeMode mode = PigeonholeMode::counting;
  int p = 0;                         // level of the certified cube
  DyadicCube q = DyadicCube::root(1);
  std::vector<std::int64_t> table;   // N_{p+n}(K cap Q) for 0 <= n <= ell
  std::vector<double> ratio_table;   // branching: max count ratio at depth n (1..ell)
  double s = 0, t = 0;
  int ell = 0, k = 0;
  std::int64_t mass = 0;             // N_m(K)
  std::vector<DyadicCube> path;      // descent path, root first
};

// Greedy pigeonhole descent: while some depth-<=ell descendant violates the
// branching bound, move to the shallowest (then lexicographically smallest)
// violator. Counting mode reports the certified per-level counts.
PigeonholeResult furstenberg_pigeonhole(const CellSet& cells, double s, double t, int ell, int k,
                                        PigeonholeMode mode = PigeonholeMode::counting);

struct TangentOptions {
  int max_level = 14;        // 2-D rasterization depth cap
  int max_level_1d = 16;
  int max_window_coarse = 6; // coarse levels searched for zoom windows
  RasterOptions raster;
};

struct ZoomEntry {
  int quality = 0;  // the m of Corollary-style bounds
  DyadicCube window = DyadicCube::root(1);
  CellSet zoom;     // renormalized window contents
  std::vector<std::int64_t> table;
  double t_used = 0, s_used = 0;
  bool truncated = false;  // ideal depth clamped to the feasible cap
};

struct ZoomSequence {
  std::vector<ZoomEntry> entries;
  bool truncated = false;
  std::string note;
};

// Zoom windows certifying N_{p+n} >= 2^{n (eta - 1/m)}-style tables for each
// requested quality m, at the deepest feasible scale.
ZoomSequence weak_tangent_sequence(const Ifs& ifs, double eta, const std::vector<int>& qualities,
                                   const TangentOptions& opts = {});
ZoomSequence weak_tangent_sequence(const SimilarityIfs1D& ifs, double eta,
                                   const std::vector<int>& qualities,
                                   const TangentOptions& opts = {});

struct SliceSearchResult {
  DyadicCube window = DyadicCube::root(2);
  int window_depth = 0;      // fine levels inside the window
  std::int64_t tube_x = 0;   // vertical tube index inside the window
  PigeonholeResult cert;     // 1-D certificate inside the tube
  double s_est = 0, eta_est = 0;
  double certified_slope = 0;
};

// Proof pipeline of the slice proposition at desk scale: zoom window, best
// vertical tube by pigeonhole, then the 1-D descent inside the tube with
// t = s_est - eta_est - 2/n and s = t - 1/n. V must be horizontal.
SliceSearchResult tangent_slice_search(const Ifs& ifs, const Direction& v, int n,
                                       const TangentOptions& opts = {},
                                       std::optional<double> s_est = std::nullopt,
                                       std::optional<double> eta_est = std::nullopt);

struct CountTable {
  std::vector<std::int64_t> counts;  // index n
  double exponent = 0;               // claimed: counts[n] >= 2^{n * exponent}
};

struct ProductTangentReport {
  int quality = 0;
  bool transposed = false;  // tall diagonal systems are transposed internally
  bool truncated = false;

  // desk-scale analogues of the appendix parameters
  int proj_window_level = 0;   // k_m
  int proj_depth = 0;
  int slice_window_level = 0;  // ell_{m,1}
  int slice_fine_level = 0;    // ell_{m,2}
  int amplified_level = 0;     // ell_m
  double r_scale = 0;          // stopping scale r of the cylinder binning
  double u_m = 0, v_m = 0;     // pigeonholed cylinder class g_m(x) = r (u_m x + v_m)
  double bin_width = 0;        // 1 / (m 2^{k_m})
  std::int64_t bin_count = 0;  // M
  double kappa = 0;            // squashing ratio b/a of the chosen map
  int j_m = 0;                 // squashing power
  double eta_used = 0, beta_used = 0;

  CellSet proj_cells;   // P_m, renormalized, 1-D
  CellSet slice_cells;  // E_m amplified window, renormalized, 1-D
  CellSet product;      // assembled product cell set, 2-D
  CountTable proj_table, slice_table;
};

// End-to-end diagonal product-tangent construction at finite precision.
// Requires a diagonal IFS; tall systems (y weaker than x) are transposed.
ProductTangentReport diag_product_tangent(const Ifs& ifs, int m, const TangentOptions& opts = {});

// Brute-force recount of both tables from the stored cell sets; true iff the
// stored counts and inequalities hold exactly as recorded.
bool verify_product_bounds(const ProductTangentReport& report);

// report JSON plus sidecar cell-set files <base>.proj.cells etc.
void save_product_report(const std::string& base_path, const ProductTangentReport& report);
ProductTangentReport load_product_report(const std::string& base_path);

}  // namespace affdim
