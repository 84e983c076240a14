#pragma once

#include <cmath>

#include "jumps/error.hpp"

namespace jumps {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
  Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 1.0, b = 0.0;
  double c = 0.0, d = 1.0;

  static Mat2 identity() { return {}; }
  static Mat2 rotation(double radians) {
    const double cs = std::cos(radians), sn = std::sin(radians);
    return {cs, -sn, sn, cs};
  }
  static Mat2 scaling(double s) { return {s, 0.0, 0.0, s}; }

  double det() const { return a * d - b * c; }
  Mat2 transposed() const { return {a, c, b, d}; }

  friend Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
  }
  friend Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
            m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
  }
  friend Mat2 operator*(double s, const Mat2& m) {
    return {s * m.a, s * m.b, s * m.c, s * m.d};
  }
  friend bool operator==(const Mat2&, const Mat2&) = default;
};

// p -> linear * p + offset. Used to map normalized coordinates back to
// the frame a sequence was read in.
struct AffineTransform2D {
  Mat2 linear;
  Vec2 offset;

  static AffineTransform2D identity() { return {}; }

  Vec2 apply(Vec2 p) const { return linear * p + offset; }

  // (*this) after `inner`: p -> this(inner(p)).
  AffineTransform2D compose(const AffineTransform2D& inner) const {
    return {linear * inner.linear, linear * inner.offset + offset};
  }

  AffineTransform2D inverse() const {
    const double det = linear.det();
    if (!(std::abs(det) > 1e-12)) {
      throw DataError("affine transform is not invertible");
    }
    const Mat2 inv{linear.d / det, -linear.b / det, -linear.c / det,
                   linear.a / det};
    return {inv, -1.0 * (inv * offset)};
  }
};

// p -> scale * rotation * p + translation, rotation proper (det = +1).
struct SimilarityTransform2D {
  double scale = 1.0;
  Mat2 rotation;
  Vec2 translation;

  Vec2 apply(Vec2 p) const { return scale * (rotation * p) + translation; }
  double angle() const { return std::atan2(rotation.c, rotation.a); }
  AffineTransform2D to_affine() const {
    return {scale * rotation, translation};
  }
};

}  // namespace jumps
