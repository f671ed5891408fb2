#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "affdim/ifs.hpp"
#include "affdim/linalg.hpp"

namespace affdim {

// A line through the origin in RP^1. The canonical unit vector has positive
// x-coordinate, or equals (0,1) for the vertical line.
class Direction {
 public:
  Direction() : theta_(0) {}
  static Direction from_angle(double theta);
  static Direction from_vector(Vec2 v);
  static Direction horizontal() { return from_angle(0); }
  static Direction vertical() { return from_angle(1.5707963267948966); }

  double angle() const { return theta_; }  // in [0, pi)
  Vec2 unit() const;
  Direction perpendicular() const;

 private:
  double theta_;
};

// Projective distance |sin(theta_a - theta_b)|; scale-free.
double projective_distance(const Direction& a, const Direction& b);

struct SingularData {
  double alpha1 = 0;
  double alpha2 = 0;
  Direction eta1;      // right singular directions
  Direction eta2;
  Direction image1;    // directions of A*eta1, A*eta2
  Direction image2;
  bool degenerate = false;  // alpha1 == alpha2: eta1 defaults to horizontal
};

SingularData singular_data(const Mat2& a);

// ||A e_V||.
double restriction_norm(const Mat2& a, const Direction& v);

enum class ThetaKind { forward = 1, backward = 2 };

// theta_1(w) = <A_w eta1(A_w)>; theta_2(w) uses the reversed-word inverse
// product A_{w1}^-1 ... A_{wn}^-1.
Direction theta(const Ifs& ifs, const Word& w, ThetaKind which);

struct DirectionSet {
  std::vector<Direction> directions;
  int depth = 0;
  double max_movement = 0;  // max angular move between depth-1 and depth
};

enum class FurstenbergKind { forward, backward };

// theta_1 / theta_2 evaluated on every word of the given length, deduplicated
// at projective tolerance 1e-9.
DirectionSet furstenberg_directions(const Ifs& ifs, int depth, FurstenbergKind kind);

enum class DominationClass { dominated, weakly_dominated, strongly_conformal, undetermined };

struct ConeInterval {
  double lo = 0, hi = 0;  // angles, lo <= hi, possibly spanning across pi
};

struct DominationReport {
  DominationClass classification = DominationClass::undetermined;
  double fit_c = 0;
  double fit_tau = 1;
  std::vector<int> conformal_members;     // I_e
  std::vector<int> dominated_members;     // I_h
  std::vector<ConeInterval> multicone;    // certified strongly invariant cone
  bool cone_certified = false;
  double almost_mult_c = 0;               // min |A_uv| / (|A_u| |A_v|) over sampled pairs
  double min_xf_yf_angle = 0;             // delta between approximate X_F and Y_F
};

const char* domination_class_name(DominationClass c);

// Empirical domination classification: conformal-member detection, geometric
// decay fit of max alpha2/alpha1 per word length, and interval-arithmetic
// certification of an invariant multicone. `undetermined` is a value.
DominationReport domination_check(const Ifs& ifs, int maxlen);

// Flat key: value block for CLI consumption.
void write_domination_report(std::ostream& os, const DominationReport& rep);

struct RankOneLimit {
  double kappa = 0;
  Direction kernel;  // V
  Direction image;   // Y
  Word witness;
  double det_ratio = 0;  // |det(A_w / |A_w|)| at the stop
};

// Greedy left-extension keeping |A_w e_V| comparable to alpha2(A_w); stops
// when the normalized product is within tol of rank one.
RankOneLimit rank_one_limit(const Ifs& ifs, const Direction& v, double tol);

}  // namespace affdim
