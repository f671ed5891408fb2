#pragma once

#include <string>
#include <vector>

namespace affdim {

// One diagnostic point of a count table: log2 of a covering/tube/mass count
// at fine level k+n (k = coarse window level, 0 for single-scale methods).
struct ScalePoint {
  int k = 0;
  int n = 0;
  double log2_count = 0;
};

struct DimensionEstimate {
  double value = 0;
  std::string method;
  int scale_coarse = 0;  // best window's coarse level k
  int scale_fine = 0;    // k + m
  double slope_stderr = 0;
  std::vector<ScalePoint> table;
};

// Least-squares slope of y against x; stderr of the slope coefficient.
struct SlopeFit {
  double slope = 0;
  double intercept = 0;
  double stderr_slope = 0;
};

SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace affdim
