#include "affdim/semigroup.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "families.hpp"

using namespace affdim;

namespace {

Mat2 random_invertible(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  for (;;) {
    Mat2 m{u(rng), u(rng), u(rng), u(rng)};
    if (std::fabs(m.det()) > 1e-3) return m;
  }
}

// reconstruction U diag(a1,a2) V^T from the returned singular data
Mat2 reconstruct(const Mat2& a, const SingularData& sd) {
  const Vec2 v1 = sd.eta1.unit();
  const Vec2 v2 = sd.eta2.unit();
  Vec2 u1 = a.apply(v1);
  Vec2 u2 = a.apply(v2);
  const double n1 = u1.norm(), n2 = u2.norm();
  u1 = (n1 > 0 ? 1.0 / n1 : 0.0) * u1;
  u2 = (n2 > 0 ? 1.0 / n2 : 0.0) * u2;
  Mat2 out;
  out.a = sd.alpha1 * u1.x * v1.x + sd.alpha2 * u2.x * v2.x;
  out.b = sd.alpha1 * u1.x * v1.y + sd.alpha2 * u2.x * v2.y;
  out.c = sd.alpha1 * u1.y * v1.x + sd.alpha2 * u2.y * v2.x;
  out.d = sd.alpha1 * u1.y * v1.y + sd.alpha2 * u2.y * v2.y;
  return out;
}

const Ifs& dominated_pair() {
  static const Ifs ifs({{Mat2::diagonal(0.5, 0.25), Vec2{0, 0}},
                        {Mat2::diagonal(0.6, 0.2), Vec2{0.4, 0.4}}});
  return ifs;
}

// strictly positive entries, strongly dominated (the projective action
// contracts fast enough for the depth-12/14 stability checks)
const Ifs& positive_pair() {
  static const Ifs ifs({{Mat2{0.55, 0.05, 0.05, 0.12}, Vec2{0, 0}},
                        {Mat2{0.5, 0.08, 0.03, 0.1}, Vec2{0.3, 0.2}}});
  return ifs;
}

}  // namespace

TEST_CASE("singular data on simple matrices") {
  const SingularData d = singular_data(Mat2::diagonal(0.5, 1.0 / 3));
  CHECK(d.alpha1 == doctest::Approx(0.5));
  CHECK(d.alpha2 == doctest::Approx(1.0 / 3));
  CHECK(projective_distance(d.eta1, Direction::horizontal()) < 1e-12);
  CHECK_FALSE(d.degenerate);

  const SingularData r = singular_data(0.7 * Mat2::rotation(1.0));
  CHECK(r.degenerate);
  CHECK(r.alpha1 == doctest::Approx(0.7));
  CHECK(r.alpha2 == doctest::Approx(0.7));
  CHECK(projective_distance(r.eta1, Direction::horizontal()) < 1e-12);

  // shear [[1,1],[0,1]]: alpha1 = golden ratio
  const SingularData s = singular_data(Mat2{1, 1, 0, 1});
  const double phi = 0.5 * (1 + std::sqrt(5.0));
  CHECK(s.alpha1 == doctest::Approx(phi).epsilon(1e-12));
  CHECK(s.alpha2 == doctest::Approx(1 / phi).epsilon(1e-12));

  CHECK_THROWS_AS(singular_data(Mat2{1, 1, 1, 1}), Error);
}

TEST_CASE("singular value reconstruction on random matrices") {
  std::mt19937 rng(2024);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Mat2 a = random_invertible(rng);
    const SingularData sd = singular_data(a);
    CHECK(std::fabs(sd.alpha1 * sd.alpha2 - std::fabs(a.det())) < 1e-10);
    const Mat2 r = reconstruct(a, sd);
    worst = std::max({worst, std::fabs(r.a - a.a), std::fabs(r.b - a.b), std::fabs(r.c - a.c),
                      std::fabs(r.d - a.d)});
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("restriction norm") {
  CHECK(restriction_norm(Mat2::diagonal(0.7, 0.2), Direction::horizontal()) ==
        doctest::Approx(0.7));
  const Mat2 shear{1, 1, 0, 1};
  CHECK(restriction_norm(shear, Direction::vertical()) == doctest::Approx(std::sqrt(2.0)));
  const SingularData sd = singular_data(shear);
  CHECK(restriction_norm(shear, sd.eta1) == doctest::Approx(sd.alpha1));

  std::mt19937 rng(8);
  for (int i = 0; i < 200; ++i) {
    const Mat2 a = random_invertible(rng);
    const Direction v = Direction::from_angle(std::uniform_real_distribution<double>(0, 3.14)(rng));
    CHECK(restriction_norm(a, v) <= alpha1(a) + 1e-12);
  }
}

TEST_CASE("theta directions for diagonal systems") {
  // a > b: contraction is weakest horizontally
  const Ifs& ifs = dominated_pair();
  for (const Word& w : std::vector<Word>{{0}, {1}, {0, 1}, {1, 0, 0}, {0, 1, 1, 0}}) {
    CHECK(projective_distance(theta(ifs, w, ThetaKind::forward), Direction::horizontal()) < 1e-12);
    CHECK(projective_distance(theta(ifs, w, ThetaKind::backward), Direction::vertical()) < 1e-12);
  }
  CHECK_THROWS_AS(theta(ifs, {}, ThetaKind::forward), Error);
}

TEST_CASE("theta against a power-iteration oracle") {
  const Ifs& ifs = positive_pair();
  const Word w{0, 1};
  const Mat2 m = compose_linear(ifs, w);
  // power iteration on A^T A gives the top right-singular direction
  const Mat2 ata = m.transpose() * m;
  Vec2 v{1, 0.3};
  for (int i = 0; i < 200; ++i) {
    v = ata.apply(v);
    v = (1.0 / v.norm()) * v;
  }
  const Direction expect = Direction::from_vector(m.apply(v));
  CHECK(projective_distance(theta(ifs, w, ThetaKind::forward), expect) < 1e-8);
}

TEST_CASE("furstenberg directions of diagonal and positive systems") {
  const DirectionSet back = furstenberg_directions(dominated_pair(), 8, FurstenbergKind::backward);
  REQUIRE(back.directions.size() == 1);
  CHECK(projective_distance(back.directions[0], Direction::vertical()) < 1e-12);
  const DirectionSet fwd = furstenberg_directions(dominated_pair(), 8, FurstenbergKind::forward);
  REQUIRE(fwd.directions.size() == 1);
  CHECK(projective_distance(fwd.directions[0], Direction::horizontal()) < 1e-12);

  const DirectionSet pos12 = furstenberg_directions(positive_pair(), 12, FurstenbergKind::forward);
  const DirectionSet pos14 = furstenberg_directions(positive_pair(), 14, FurstenbergKind::forward);
  for (const Direction& d : pos12.directions) {
    CHECK(d.unit().x > 0);
    CHECK(d.unit().y > 0);  // positive quadrant cone
  }
  // stability: the depth-14 set stays within 1e-6 of the depth-12 set
  for (const Direction& d : pos14.directions) {
    double best = 1;
    for (const Direction& e : pos12.directions) best = std::min(best, projective_distance(d, e));
    CHECK(best < 1e-6);
  }

  const Ifs conf({{0.5 * Mat2::rotation(1.0), Vec2{0, 0}}});
  CHECK_THROWS_AS(furstenberg_directions(conf, 6, FurstenbergKind::forward), Error);
}

TEST_CASE("domination classification of the canonical examples") {
  const DominationReport dom = domination_check(dominated_pair(), 8);
  CHECK(dom.classification == DominationClass::dominated);
  CHECK(dom.cone_certified);
  CHECK(dom.fit_tau < 0.5 + 0.05);
  CHECK(dom.almost_mult_c > 0.9);  // diagonal: exactly multiplicative
  CHECK(dom.min_xf_yf_angle > 0.9);

  const Ifs conf({{0.5 * Mat2::rotation(1.0), Vec2{0, 0}}});
  CHECK(domination_check(conf, 6).classification == DominationClass::strongly_conformal);

  const Ifs weak({{Mat2::diagonal(0.5, 0.25), Vec2{0, 0}},
                  {0.4 * Mat2::diagonal(1.0, -1.0), Vec2{0.5, 0.5}}});
  const DominationReport wd = domination_check(weak, 8);
  CHECK(wd.classification == DominationClass::weakly_dominated);
  CHECK(wd.conformal_members == std::vector<int>{1});
  CHECK(wd.dominated_members == std::vector<int>{0});
}

TEST_CASE("almost multiplicativity separates dominated from rotation mixes") {
  const DominationReport dom = domination_check(dominated_pair(), 8);
  CHECK(dom.almost_mult_c > 0.5);

  const Ifs mix({{0.6 * Mat2::rotation(std::atan(1.0)), Vec2{0, 0}},  // pi/4 rotation
                 {Mat2::diagonal(0.6, 0.18), Vec2{0.3, 0.3}}});
  const DominationReport rep = domination_check(mix, 8);
  CHECK(rep.classification == DominationClass::undetermined);
  CHECK(rep.almost_mult_c < 0.01);
}

TEST_CASE("restriction-norm comparability along forward directions") {
  // alpha1(A_w) <= C1 |A_w|Y| with a stable fitted constant
  const Ifs& ifs = positive_pair();
  const DirectionSet fwd = furstenberg_directions(ifs, 10, FurstenbergKind::forward);
  REQUIRE(!fwd.directions.empty());
  auto fitted_c1 = [&](int maxlen) {
    double worst = 1.0;
    std::vector<Word> stack{{}};
    for (int len = 1; len <= maxlen; ++len) {
      std::vector<Word> next;
      for (const Word& w : stack)
        for (int i = 0; i < ifs.size(); ++i) {
          Word e = w;
          e.push_back(i);
          next.push_back(e);
        }
      stack = next;
      for (const Word& w : stack) {
        const Mat2 m = compose_linear(ifs, w);
        double best_ratio = 1e300;
        for (const Direction& y : fwd.directions)
          best_ratio = std::min(best_ratio, alpha1(m) / restriction_norm(m, y));
        worst = std::max(worst, best_ratio);
      }
    }
    return worst;
  };
  const double c8 = fitted_c1(8);
  const double c10 = fitted_c1(10);
  CHECK(c10 < c8 * 1.10 + 1e-9);  // stabilizes rather than growing
}

TEST_CASE("shift relation of forward directions") {
  const Ifs& ifs = positive_pair();
  const Word u{1, 0};
  const Mat2 au = compose_linear(ifs, u);
  double prev = 1;
  for (int len : {4, 8, 12}) {
    Word w;
    for (int i = 0; i < len; ++i) w.push_back(i % 2);
    Word uw = u;
    uw.insert(uw.end(), w.begin(), w.end());
    const Direction lhs = theta(ifs, uw, ThetaKind::forward);
    const Direction rhs = Direction::from_vector(au.apply(theta(ifs, w, ThetaKind::forward).unit()));
    const double dist = projective_distance(lhs, rhs);
    CHECK(dist <= prev + 1e-12);
    prev = dist;
  }
  CHECK(prev < 1e-6);
}

TEST_CASE("rank one limits") {
  // diagonal, V vertical -> image horizontal, kappa = 1
  const RankOneLimit lim = rank_one_limit(dominated_pair(), Direction::vertical(), 1e-9);
  CHECK(projective_distance(lim.image, Direction::horizontal()) < 1e-8);
  CHECK(lim.kappa == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(lim.det_ratio < 1e-9);

  // BM-style diag(1/4, 1/2): x contracts most, backward direction horizontal
  const Ifs bm = fam::bm_benchmark();
  const RankOneLimit lim2 = rank_one_limit(bm, Direction::horizontal(), 1e-9);
  CHECK(projective_distance(lim2.image, Direction::vertical()) < 1e-8);

  // positive pair: kernel of the limit within 1e-6 of the input V
  const DirectionSet back = furstenberg_directions(positive_pair(), 12, FurstenbergKind::backward);
  REQUIRE(!back.directions.empty());
  const Direction v = back.directions[0];
  const RankOneLimit lim3 = rank_one_limit(positive_pair(), v, 1e-10);
  const Mat2 m = compose_linear(positive_pair(), lim3.witness);
  const SingularData sd = singular_data((1.0 / alpha1(m)) * m);
  CHECK(projective_distance(sd.eta2, v) < 1e-6);

  const Ifs conf({{0.5 * Mat2::rotation(1.0), Vec2{0, 0}}});
  CHECK_THROWS_AS(rank_one_limit(conf, Direction::vertical(), 1e-6), Error);
}

TEST_CASE("domination report serialization") {
  std::stringstream ss;
  write_domination_report(ss, domination_check(dominated_pair(), 6));
  const std::string out = ss.str();
  CHECK(out.find("classification: dominated") != std::string::npos);
  CHECK(out.find("tau:") != std::string::npos);
  CHECK(out.find("cone.0:") != std::string::npos);
}
