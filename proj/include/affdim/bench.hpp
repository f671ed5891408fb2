#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affdim/dimension.hpp"
#include "affdim/ifs.hpp"

namespace affdim {

enum class FamilyKind { bedford_mcmullen, fraser_jordan, custom };

struct FamilySpec {
  FamilyKind kind = FamilyKind::custom;

  // bedford_mcmullen: maps ((x+i)/n, (y+j)/m) over the digit set
  int grid_n = 0, grid_m = 0;
  std::vector<std::pair<int, int>> digits;

  // fraser_jordan: maps (beta x + b_i, alpha y + a_i), 0 < alpha < beta < 1
  double beta = 0, alpha = 0;
  std::vector<double> offsets_b, offsets_a;

  // custom: IFS file path
  std::string path;

  static FamilySpec bm(int n, int m, std::vector<std::pair<int, int>> digits);
  static FamilySpec fj(double beta, double alpha, std::vector<double> b, std::vector<double> a);
};

// Constructs the family IFS; validates grid bounds, digit distinctness and
// the rectangular open set condition (FJ), naming offenders.
Ifs make_family(const FamilySpec& spec);

enum class Quantity { assouad, projection_assouad, delta, frostman };

const char* quantity_name(Quantity q);

struct ReferenceValue {
  Quantity quantity = Quantity::assouad;
  double value = 0;
  std::string note;
  bool estimator_reference = false;  // no closed form; reference is itself an estimate
};

// Closed-form references for BM and FJ families; errors on custom specs.
std::vector<ReferenceValue> reference_values(const FamilySpec& spec);

struct VerificationRow {
  Quantity quantity = Quantity::assouad;
  double reference = 0;
  double estimate = 0;
  double tolerance = 0;
  bool pass = false;
  bool estimator_reference = false;
  double runtime_seconds = 0;
  std::string note;
};

// Per-quantity tolerances, fixed constants calibrated at the depths noted in
// the README (not CLI knobs).
struct ToleranceTable {
  double assouad_bm = 0.05;
  double projection_bm = 0.03;
  double delta_bm = 0.05;
  double composite_bm = 0.08;
  double assouad_fj = 0.07;
  double projection_fj = 0.03;
  double delta_fj = 0.05;
  double frostman_fj = 0.02;
  double composite_fj = 0.10;
};

// Runs the estimators against the references plus the composite identity
// |assouad - (projection + delta)|. Estimator failures become failed rows.
std::vector<VerificationRow> verify_formula(const FamilySpec& spec, int depth_budget,
                                            const ToleranceTable& tol = {});

void write_rows_csv(std::ostream& os, const std::vector<VerificationRow>& rows);
void write_rows_json(std::ostream& os, const std::vector<VerificationRow>& rows);

}  // namespace affdim
