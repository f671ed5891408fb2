#include "affdim/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace affdim {

namespace {

constexpr double kPi = std::numbers::pi;

double mod_pi(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0) t += kPi;
  if (t >= kPi) t -= kPi;
  return t;
}

}  // namespace

Direction Direction::from_angle(double theta) {
  Direction d;
  d.theta_ = mod_pi(theta);
  return d;
}

Direction Direction::from_vector(Vec2 v) {
  if (v.x == 0 && v.y == 0) fail(Errc::invalid_argument, "zero vector has no direction");
  return from_angle(std::atan2(v.y, v.x));
}

Vec2 Direction::unit() const {
  if (std::fabs(theta_ - 0.5 * kPi) < 1e-15) return Vec2{0, 1};
  if (theta_ < 0.5 * kPi) return Vec2{std::cos(theta_), std::sin(theta_)};
  return Vec2{std::cos(theta_ - kPi), std::sin(theta_ - kPi)};
}

Direction Direction::perpendicular() const { return from_angle(theta_ + 0.5 * kPi); }

double projective_distance(const Direction& a, const Direction& b) {
  return std::fabs(std::sin(a.angle() - b.angle()));
}

SingularData singular_data(const Mat2& a) {
  if (a.det() == 0.0) fail(Errc::invalid_argument, "singular matrix");
  const double e = a.a * a.a + a.c * a.c;
  const double g = a.b * a.b + a.d * a.d;
  const double f = a.a * a.b + a.c * a.d;
  SingularData sd;
  const auto sv = singular_values(a);
  sd.alpha1 = sv[0];
  sd.alpha2 = sv[1];
  sd.degenerate = (sd.alpha1 - sd.alpha2) <= 1e-12 * sd.alpha1;
  if (sd.degenerate) {
    sd.eta1 = Direction::horizontal();
  } else {
    sd.eta1 = Direction::from_angle(0.5 * std::atan2(2 * f, e - g));
  }
  sd.eta2 = sd.eta1.perpendicular();
  sd.image1 = Direction::from_vector(a.apply(sd.eta1.unit()));
  sd.image2 = Direction::from_vector(a.apply(sd.eta2.unit()));
  return sd;
}

double restriction_norm(const Mat2& a, const Direction& v) { return a.apply(v.unit()).norm(); }

namespace {

Mat2 renorm(const Mat2& m) {
  const double s = m.max_abs();
  return s > 0 ? (1.0 / s) * m : m;
}

Direction top_image_direction(const Mat2& m) {
  SingularData sd = singular_data(m);
  if (sd.degenerate) fail(Errc::degenerate_direction, "degenerate product (alpha1 == alpha2)");
  return sd.image1;
}

bool member_is_conformal(const Mat2& a, double tol = 1e-10) {
  const double e = a.a * a.a + a.c * a.c;
  const double g = a.b * a.b + a.d * a.d;
  const double f = a.a * a.b + a.c * a.d;
  const double scale = std::max(e, g);
  return std::fabs(e - g) <= tol * scale && std::fabs(f) <= tol * scale;
}

}  // namespace

Direction theta(const Ifs& ifs, const Word& w, ThetaKind which) {
  if (w.empty()) fail(Errc::invalid_argument, "theta needs a non-empty word");
  Mat2 m = Mat2::identity();
  for (int s : w) {
    if (s < 0 || s >= ifs.size()) fail(Errc::invalid_argument, "word symbol out of range");
    const Mat2& a = ifs.map(s).A;
    m = renorm(m * (which == ThetaKind::forward ? a : a.inverse()));
  }
  return top_image_direction(m);
}

DirectionSet furstenberg_directions(const Ifs& ifs, int depth, FurstenbergKind kind) {
  if (depth < 1) fail(Errc::invalid_argument, "depth must be >= 1");
  bool all_conformal = true;
  for (int i = 0; i < ifs.size(); ++i) all_conformal &= member_is_conformal(ifs.map(i).A);
  if (all_conformal)
    fail(Errc::no_furstenberg_directions, "strongly conformal tuple has no Furstenberg directions");

  double words = 1;
  for (int i = 0; i < depth; ++i) words *= ifs.size();
  if (words > 2e7) fail(Errc::resource_limit, "furstenberg_directions: too many words");

  std::vector<Mat2> letters(static_cast<std::size_t>(ifs.size()));
  for (int i = 0; i < ifs.size(); ++i)
    letters[static_cast<std::size_t>(i)] =
        kind == FurstenbergKind::forward ? ifs.map(i).A : ifs.map(i).A.inverse();

  DirectionSet out;
  out.depth = depth;
  std::vector<double> angles;

  struct Node {
    Mat2 m;
    int len;
  };
  std::vector<Node> stack{Node{Mat2::identity(), 0}};
  while (!stack.empty()) {
    Node nd = stack.back();
    stack.pop_back();
    if (nd.len == depth - 1) {
      // parent direction for the movement diagnostic (may be degenerate)
      bool have_parent = false;
      Direction parent;
      if (nd.len > 0) {
        SingularData sd = singular_data(nd.m);
        if (!sd.degenerate) {
          parent = sd.image1;
          have_parent = true;
        }
      }
      for (const Mat2& a : letters) {
        const Mat2 leaf = renorm(nd.m * a);
        SingularData sd = singular_data(leaf);
        if (sd.degenerate) continue;
        angles.push_back(sd.image1.angle());
        if (have_parent)
          out.max_movement = std::max(out.max_movement, projective_distance(parent, sd.image1));
      }
    } else {
      for (const Mat2& a : letters) stack.push_back(Node{renorm(nd.m * a), nd.len + 1});
    }
  }
  if (angles.empty())
    fail(Errc::no_furstenberg_directions, "every product of the given depth was degenerate");

  std::sort(angles.begin(), angles.end());
  std::vector<Direction> dirs;
  for (double a : angles) {
    if (!dirs.empty() && projective_distance(dirs.back(), Direction::from_angle(a)) <= 1e-9)
      continue;
    dirs.push_back(Direction::from_angle(a));
  }
  // wraparound dedup: first and last angles may coincide projectively
  if (dirs.size() > 1 && projective_distance(dirs.front(), dirs.back()) <= 1e-9) dirs.pop_back();
  out.directions = std::move(dirs);
  return out;
}

namespace {

// Arcs on RP^1 as (start, length) with start in [0, pi), length < pi.
struct Arc {
  double start, length;
};

double arc_offset(const Arc& a, double theta) { return mod_pi(theta - a.start); }

bool arc_contains(const Arc& a, double theta, double margin) {
  const double off = arc_offset(a, theta);
  return off >= -margin && off <= a.length + margin;
}

std::vector<Arc> merge_arcs(std::vector<Arc> arcs) {
  if (arcs.empty()) return arcs;
  // unroll to [0, 2pi), merge, fold back
  struct Seg {
    double lo, hi;
  };
  std::vector<Seg> segs;
  for (const Arc& a : arcs) {
    segs.push_back(Seg{a.start, a.start + a.length});
    segs.push_back(Seg{a.start + kPi, a.start + a.length + kPi});
  }
  std::sort(segs.begin(), segs.end(), [](const Seg& x, const Seg& y) { return x.lo < y.lo; });
  std::vector<Seg> merged;
  for (const Seg& s : segs) {
    if (!merged.empty() && s.lo <= merged.back().hi + 1e-12)
      merged.back().hi = std::max(merged.back().hi, s.hi);
    else
      merged.push_back(s);
  }
  std::vector<Arc> out;
  for (const Seg& s : merged) {
    if (s.lo >= kPi) continue;  // the unrolled copy
    double hi = s.hi;
    out.push_back(Arc{s.lo, std::min(hi - s.lo, kPi - 1e-12)});
  }
  // a segment starting below pi may swallow the copy of an early arc; refold
  // by merging containments
  std::vector<Arc> folded;
  for (const Arc& a : out) {
    bool sub = false;
    for (const Arc& b : out)
      if (&a != &b && arc_contains(b, a.start, 1e-12) &&
          arc_offset(b, a.start) + a.length <= b.length + 1e-12)
        sub = true;
    if (!sub) folded.push_back(a);
  }
  return folded;
}

// Image of a projective arc under an invertible matrix: the arc between the
// endpoint images that contains the midpoint image.
Arc map_arc(const Mat2& m, const Arc& a) {
  auto map_angle = [&](double th) {
    const Vec2 w = m.apply(Vec2{std::cos(th), std::sin(th)});
    return mod_pi(std::atan2(w.y, w.x));
  };
  const double p = map_angle(a.start);
  const double q = map_angle(a.start + a.length);
  const double mid = map_angle(a.start + 0.5 * a.length);
  Arc up{p, mod_pi(q - p)};
  if (arc_contains(up, mid, 1e-12)) return up;
  return Arc{q, mod_pi(p - q)};
}

bool arc_inside(const Arc& inner, const std::vector<Arc>& cover, double margin) {
  for (const Arc& c : cover) {
    const double off = arc_offset(c, inner.start);
    if (off >= margin && off + inner.length <= c.length - margin) return true;
  }
  return false;
}

bool arcs_equal(std::vector<Arc> a, std::vector<Arc> b, double tol) {
  if (a.size() != b.size()) return false;
  auto key = [](const Arc& x) { return x.start; };
  std::sort(a.begin(), a.end(), [&](const Arc& x, const Arc& y) { return key(x) < key(y); });
  std::sort(b.begin(), b.end(), [&](const Arc& x, const Arc& y) { return key(x) < key(y); });
  // allow a cyclic start mismatch when arcs wrap
  for (std::size_t shift = 0; shift < a.size(); ++shift) {
    bool ok = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Arc& x = a[i];
      const Arc& y = b[(i + shift) % b.size()];
      if (std::fabs(mod_pi(x.start - y.start + 0.5 * kPi) - 0.5 * kPi) > tol ||
          std::fabs(x.length - y.length) > tol) {
        ok = false;
        break;
      }
    }
    if (ok) return true;
  }
  return false;
}

std::vector<Mat2> enumerate_products(const std::vector<Mat2>& letters, int len_lo, int len_hi,
                                     std::size_t cap) {
  std::vector<Mat2> cur{Mat2::identity()};
  std::vector<Mat2> out;
  for (int len = 1; len <= len_hi; ++len) {
    std::vector<Mat2> next;
    next.reserve(cur.size() * letters.size());
    for (const Mat2& m : cur)
      for (const Mat2& a : letters) next.push_back(m * a);
    cur = std::move(next);
    if (len >= len_lo)
      for (const Mat2& m : cur) {
        out.push_back(m);
        if (out.size() > cap) fail(Errc::resource_limit, "word enumeration too large");
      }
  }
  return out;
}

}  // namespace

const char* domination_class_name(DominationClass c) {
  switch (c) {
    case DominationClass::dominated: return "dominated";
    case DominationClass::weakly_dominated: return "weakly-dominated";
    case DominationClass::strongly_conformal: return "strongly-conformal";
    case DominationClass::undetermined: return "undetermined";
  }
  return "unknown";
}

DominationReport domination_check(const Ifs& ifs, int maxlen) {
  if (maxlen < 4) fail(Errc::invalid_argument, "domination_check needs maxlen >= 4");
  DominationReport rep;

  for (int i = 0; i < ifs.size(); ++i) {
    if (member_is_conformal(ifs.map(i).A))
      rep.conformal_members.push_back(i);
    else
      rep.dominated_members.push_back(i);
  }
  if (rep.dominated_members.empty()) {
    rep.classification = DominationClass::strongly_conformal;
    rep.almost_mult_c = 1.0;
    return rep;
  }

  std::vector<Mat2> h_letters;
  for (int i : rep.dominated_members) h_letters.push_back(ifs.map(i).A);

  // (iii) geometric decay of max alpha2/alpha1 over the non-conformal words
  {
    std::vector<double> xs, ys;
    std::vector<Mat2> cur{Mat2::identity()};
    for (int len = 1; len <= maxlen; ++len) {
      std::vector<Mat2> next;
      for (const Mat2& m : cur)
        for (const Mat2& a : h_letters) next.push_back(renorm(m * a));
      cur = std::move(next);
      if (cur.size() > 4'000'000) fail(Errc::resource_limit, "domination_check: too many words");
      double worst = 0;
      for (const Mat2& m : cur) {
        const auto sv = singular_values(m);
        worst = std::max(worst, sv[0] > 0 ? sv[1] / sv[0] : 1.0);
      }
      xs.push_back(len);
      ys.push_back(std::log(std::max(worst, 1e-300)));
    }
    const SlopeFit fit = fit_slope(xs, ys);
    rep.fit_tau = std::exp(fit.slope);
    rep.fit_c = std::exp(fit.intercept);
  }
  const bool decays = rep.fit_tau < 1.0 - 1e-3;

  // (iv) multicone search: dilated cover of deep forward image directions of
  // the non-conformal part, endpoint-mapped invariance check.
  if (decays) {
    int probe = 1;
    double count = static_cast<double>(h_letters.size());
    while (probe < 10 && count * h_letters.size() <= 20000) {
      ++probe;
      count *= static_cast<double>(h_letters.size());
    }
    std::vector<double> angles;
    for (const Mat2& m : enumerate_products(h_letters, probe, probe, 100000)) {
      SingularData sd = singular_data(renorm(m));
      if (!sd.degenerate) angles.push_back(sd.image1.angle());
    }
    for (double eps : {0.02, 0.05, 0.1, 0.2, 0.35, 0.6}) {
      std::vector<Arc> arcs;
      for (double a : angles) arcs.push_back(Arc{mod_pi(a - eps), 2 * eps});
      std::vector<Arc> cone = merge_arcs(arcs);
      if (cone.empty()) continue;
      double total = 0;
      for (const Arc& a : cone) total += a.length;
      if (total > 0.9 * kPi) continue;  // cone must avoid a neighbourhood of X_F
      bool invariant = true;
      for (const Mat2& a : h_letters)
        for (const Arc& c : cone)
          if (!arc_inside(map_arc(a, c), cone, 1e-9)) {
            invariant = false;
            break;
          }
      if (!invariant) continue;
      bool conformal_fixes = true;
      for (int i : rep.conformal_members) {
        std::vector<Arc> images;
        for (const Arc& c : cone) images.push_back(map_arc(ifs.map(i).A, c));
        if (!arcs_equal(merge_arcs(images), cone, 1e-9)) {
          conformal_fixes = false;
          break;
        }
      }
      if (!conformal_fixes) continue;
      rep.cone_certified = true;
      for (const Arc& c : cone) rep.multicone.push_back(ConeInterval{c.start, c.start + c.length});
      break;
    }
  }

  if (rep.cone_certified) {
    rep.classification = rep.conformal_members.empty() ? DominationClass::dominated
                                                       : DominationClass::weakly_dominated;
  } else {
    rep.classification = DominationClass::undetermined;
  }

  // almost-multiplicativity constant over word pairs
  {
    const int pair_len = std::min(maxlen, 8);
    std::vector<Mat2> all_letters;
    for (int i = 0; i < ifs.size(); ++i) all_letters.push_back(ifs.map(i).A);
    std::vector<Mat2> words = enumerate_products(all_letters, 1, pair_len, 200000);
    std::size_t stride = 1;
    while (words.size() / stride > 1500) ++stride;
    double cmin = 1.0;
    for (std::size_t i = 0; i < words.size(); i += stride)
      for (std::size_t j = 0; j < words.size(); j += stride) {
        const double nu = alpha1(words[i]), nv = alpha1(words[j]);
        const double nuv = alpha1(words[i] * words[j]);
        if (nu > 0 && nv > 0) cmin = std::min(cmin, nuv / (nu * nv));
      }
    rep.almost_mult_c = cmin;
  }

  // min projective angle between approximate X_F and Y_F
  if (rep.classification != DominationClass::undetermined) {
    const int depth = std::min(maxlen, 10);
    try {
      DirectionSet yf = furstenberg_directions(ifs, depth, FurstenbergKind::forward);
      DirectionSet xf = furstenberg_directions(ifs, depth, FurstenbergKind::backward);
      double delta = 1.0;
      for (const Direction& y : yf.directions)
        for (const Direction& x : xf.directions)
          delta = std::min(delta, projective_distance(x, y));
      rep.min_xf_yf_angle = delta;
    } catch (const Error&) {
      rep.min_xf_yf_angle = 0;
    }
  }
  return rep;
}

void write_domination_report(std::ostream& os, const DominationReport& rep) {
  os << "classification: " << domination_class_name(rep.classification) << '\n';
  os << "tau: " << rep.fit_tau << '\n';
  os << "c: " << rep.fit_c << '\n';
  os << "C: " << rep.almost_mult_c << '\n';
  os << "delta: " << rep.min_xf_yf_angle << '\n';
  os << "cone_certified: " << (rep.cone_certified ? 1 : 0) << '\n';
  os << "conformal_members:";
  for (int i : rep.conformal_members) os << ' ' << i;
  os << '\n';
  os << "dominated_members:";
  for (int i : rep.dominated_members) os << ' ' << i;
  os << '\n';
  for (std::size_t i = 0; i < rep.multicone.size(); ++i)
    os << "cone." << i << ": " << rep.multicone[i].lo << ' ' << rep.multicone[i].hi << '\n';
}

RankOneLimit rank_one_limit(const Ifs& ifs, const Direction& v, double tol) {
  if (!(tol > 0 && tol < 1)) fail(Errc::invalid_argument, "tol must be in (0,1)");
  bool all_conformal = true;
  for (int i = 0; i < ifs.size(); ++i) all_conformal &= member_is_conformal(ifs.map(i).A);
  if (all_conformal)
    fail(Errc::invalid_argument, "strongly conformal tuple has no rank-one limits");

  Mat2 m = Mat2::identity();
  std::vector<int> rword;  // letters in reverse order (we extend on the left)
  const Vec2 ev = v.unit();
  for (std::int64_t step = 0; step < 1'000'000; ++step) {
    const auto sv = singular_values(m);
    if (sv[0] > 0 && sv[1] / sv[0] < tol) {
      // rank-one within tol: extract image direction and the projection scalar
      SingularData sd = singular_data(m);
      RankOneLimit out;
      out.kernel = v;
      out.image = sd.image1;
      out.det_ratio = sv[1] / sv[0];
      out.witness.assign(rword.rbegin(), rword.rend());
      const Mat2 mhat = (1.0 / sv[0]) * m;
      // pi_Y^V = (e_Y w^T) / <w, e_Y> with w the unit normal of V
      const Vec2 ey = out.image.unit();
      const Vec2 w{-ev.y, ev.x};
      const double denom = dot(w, ey);
      if (std::fabs(denom) < 1e-12)
        fail(Errc::degenerate_direction, "rank-one image coincides with the kernel direction");
      const Mat2 proj{ey.x * w.x / denom, ey.x * w.y / denom, ey.y * w.x / denom,
                      ey.y * w.y / denom};
      const double pf = proj.a * proj.a + proj.b * proj.b + proj.c * proj.c + proj.d * proj.d;
      out.kappa = (mhat.a * proj.a + mhat.b * proj.b + mhat.c * proj.c + mhat.d * proj.d) / pf;
      return out;
    }
    int best = -1;
    double best_score = 1e300;
    for (int i = 0; i < ifs.size(); ++i) {
      const Mat2 cand = ifs.map(i).A * m;  // left extension
      const auto csv = singular_values(cand);
      if (csv[1] <= 0) continue;
      const double score = cand.apply(ev).norm() / csv[1];
      if (score < best_score - 1e-15) {
        best_score = score;
        best = i;
      }
    }
    if (best < 0) fail(Errc::non_convergence, "rank_one_limit: no admissible extension");
    m = renorm(ifs.map(best).A * m);
    rword.push_back(best);
  }
  fail(Errc::non_convergence, "rank_one_limit: tolerance not reached within 1e6 letters");
}

}  // namespace affdim
