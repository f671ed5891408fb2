#pragma once

#include <array>
#include <cmath>

namespace affdim {

struct Vec2 {
  double x = 0, y = 0;
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
  double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 1, b = 0, c = 0, d = 1;

  static Mat2 identity() { return {1, 0, 0, 1}; }
  static Mat2 diagonal(double p, double q) { return {p, 0, 0, q}; }
  static Mat2 rotation(double angle) {
    const double co = std::cos(angle), si = std::sin(angle);
    return {co, -si, si, co};
  }

  Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  double det() const { return a * d - b * c; }
  Mat2 transpose() const { return {a, c, b, d}; }
  Mat2 inverse() const {
    const double dt = det();
    return {d / dt, -b / dt, -c / dt, a / dt};
  }
  friend Mat2 operator*(const Mat2& L, const Mat2& R) {
    return {L.a * R.a + L.b * R.c, L.a * R.b + L.b * R.d,
            L.c * R.a + L.d * R.c, L.c * R.b + L.d * R.d};
  }
  friend Mat2 operator*(double s, const Mat2& M) { return {s * M.a, s * M.b, s * M.c, s * M.d}; }
  double max_abs() const {
    return std::max(std::max(std::fabs(a), std::fabs(b)), std::max(std::fabs(c), std::fabs(d)));
  }
};

// Singular values alpha1 >= alpha2 >= 0 of a 2x2 matrix, closed form.
inline std::array<double, 2> singular_values(const Mat2& m) {
  const double e = m.a * m.a + m.c * m.c;   // |col1|^2 of A (via A^T A entries)
  const double g = m.b * m.b + m.d * m.d;
  const double f = m.a * m.b + m.c * m.d;
  const double q = 0.5 * (e + g);
  const double h = std::hypot(0.5 * (e - g), f);
  const double s1 = std::sqrt(std::max(q + h, 0.0));
  // q - h cancels badly; use det for the small singular value when possible.
  double s2;
  if (s1 > 0) {
    s2 = std::fabs(m.det()) / s1;
  } else {
    s2 = 0;
  }
  return {s1, s2};
}

inline double alpha1(const Mat2& m) { return singular_values(m)[0]; }
inline double alpha2(const Mat2& m) { return singular_values(m)[1]; }

}  // namespace affdim
