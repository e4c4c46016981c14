#pragma once

#include <cmath>
#include <limits>

namespace flatspec {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 rot90(Vec2 a) { return {-a.y, a.x}; }
inline Vec2 normalized(Vec2 a) { double n = norm(a); return {a.x / n, a.y / n}; }

inline Vec2 rotated(Vec2 v, double theta) {
  double c = std::cos(theta), s = std::sin(theta);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Counterclockwise angle from `from` to `to`, in [0, 2*pi).
inline double ccw_angle(Vec2 from, Vec2 to) {
  double a = std::atan2(cross(from, to), dot(from, to));
  if (a < 0) a += 2.0 * kPi;
  return a;
}

// Direction of v as an angle in [0, pi); v and -v give the same answer.
inline double direction_angle(Vec2 v) {
  double a = std::atan2(v.y, v.x);
  if (a < 0) a += kPi;
  if (a >= kPi) a -= kPi;  // atan2 returned exactly pi
  return a;
}

// Flips v if needed so that its direction angle lies in [0, pi).
inline Vec2 canonical_direction(Vec2 v) {
  if (v.y < 0 || (v.y == 0 && v.x < 0)) return -v;
  return v;
}

// Whether a holonomy vector is already in canonical direction. The y
// component is quantized so both endpoints of a near-horizontal connection
// make the same call.
inline bool canonical_orientation(Vec2 hol) {
  double n = std::hypot(hol.x, hol.y);
  double y = std::abs(hol.y) <= 1e-12 * n ? 0.0 : hol.y;
  return y > 0 || (y == 0 && hol.x > 0);
}

// 2x2 real matrix [[a, b], [c, d]] acting on column vectors.
struct Mat2 {
  double a = 1, b = 0, c = 0, d = 1;

  Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  double det() const { return a * d - b * c; }

  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }

  Mat2 transposed() const { return {a, c, b, d}; }

  // Inverse via the adjugate; valid for any invertible matrix.
  Mat2 inverse() const {
    double dt = det();
    return {d / dt, -b / dt, -c / dt, a / dt};
  }

  static Mat2 identity() { return {1, 0, 0, 1}; }
  static Mat2 rotation(double theta) {
    double cs = std::cos(theta), sn = std::sin(theta);
    return {cs, -sn, sn, cs};
  }
  static Mat2 diagonal(double p, double q) { return {p, 0, 0, q}; }
};

// Orientation-preserving chart map z -> s*z + t with s in {+1, -1}.
// All transition maps of a half-translation surface have this form.
struct IsoMap {
  double s = 1.0;
  Vec2 t{0.0, 0.0};

  Vec2 apply(Vec2 z) const { return {s * z.x + t.x, s * z.y + t.y}; }
  Vec2 apply_dir(Vec2 d) const { return {s * d.x, s * d.y}; }

  // this o other
  IsoMap compose(const IsoMap& o) const { return {s * o.s, apply(o.t)}; }
  IsoMap inverse() const { return {s, {-s * t.x, -s * t.y}}; }

  static IsoMap identity() { return {}; }
  static IsoMap translation(Vec2 v) { return {1.0, v}; }
};

}  // namespace flatspec
