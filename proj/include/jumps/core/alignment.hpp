#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "jumps/core/pose_sequence.hpp"

namespace jumps {

struct BoundingBox {
  Vec2 min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void extend(Vec2 p) {
    min = {std::min(min.x, p.x), std::min(min.y, p.y)};
    max = {std::max(max.x, p.x), std::max(max.y, p.y)};
  }
  Vec2 center() const { return 0.5 * (min + max); }
  double larger_side() const { return std::max(max.x - min.x, max.y - min.y); }
};

inline BoundingBox available_bounds(const PoseSequence& seq) {
  BoundingBox box;
  for (std::size_t f = 0; f < seq.frames(); ++f) {
    for (std::size_t j = 0; j < seq.joints(); ++j) {
      if (seq.available(f, j)) box.extend(seq.at(f, j));
    }
  }
  return box;
}

// Centers the sequence-wide bounding box of available joints at the origin
// and scales its larger side to 2. The returned sequence's norm maps back to
// the input's source frame.
inline PoseSequence normalize(const PoseSequence& seq) {
  if (seq.mask().none()) throw DataError("cannot normalize a sequence with no available joints");
  const BoundingBox box = available_bounds(seq);
  const double half = box.larger_side() / 2.0;
  if (!(half > 0.0) || !std::isfinite(half)) {
    throw DataError("cannot normalize a sequence with a degenerate bounding box");
  }
  const Vec2 center = box.center();
  PoseSequence out = seq;
  for (auto& p : out.positions()) p = (1.0 / half) * (p - center);
  out.norm = seq.norm.compose(AffineTransform2D{Mat2::scaling(half), center});
  return out;
}

// Similarity transform minimizing sum |s R source + t - target|^2 over the
// masked correspondences of all frames. Reflections are excluded.
inline SimilarityTransform2D procrustes_align(const PoseSequence& source,
                                              const PoseSequence& target,
                                              const JointMask& mask) {
  require_same_shape(source, target);
  if (mask.frames() != source.frames() || mask.joints() != source.joints()) {
    throw DataError("procrustes mask shape mismatch");
  }
  std::size_t n = 0;
  Vec2 mean_s, mean_t;
  for (std::size_t f = 0; f < source.frames(); ++f) {
    for (std::size_t j = 0; j < source.joints(); ++j) {
      if (!mask(f, j)) continue;
      mean_s += source.at(f, j);
      mean_t += target.at(f, j);
      ++n;
    }
  }
  if (n < 2) throw DataError("procrustes needs at least 2 correspondences");
  mean_s = (1.0 / static_cast<double>(n)) * mean_s;
  mean_t = (1.0 / static_cast<double>(n)) * mean_t;

  // Cross-covariance M = sum b a^T with a, b centered source / target.
  double m00 = 0, m01 = 0, m10 = 0, m11 = 0, source_var = 0;
  for (std::size_t f = 0; f < source.frames(); ++f) {
    for (std::size_t j = 0; j < source.joints(); ++j) {
      if (!mask(f, j)) continue;
      const Vec2 a = source.at(f, j) - mean_s;
      const Vec2 b = target.at(f, j) - mean_t;
      m00 += b.x * a.x;
      m01 += b.x * a.y;
      m10 += b.y * a.x;
      m11 += b.y * a.y;
      source_var += dot(a, a);
    }
  }
  if (!(source_var > 0.0)) throw DataError("procrustes source points are coincident");

  // The proper rotation maximizing trace(R^T M) is the rotation part of the
  // polar factor of M restricted to det = +1; in 2D it has a closed form.
  const double cos_term = m00 + m11;
  const double sin_term = m10 - m01;
  const double r = std::hypot(cos_term, sin_term);
  if (!(r > 0.0)) throw DataError("procrustes target is degenerate");

  SimilarityTransform2D t;
  t.rotation = {cos_term / r, -sin_term / r, sin_term / r, cos_term / r};
  t.scale = r / source_var;
  t.translation = mean_t - t.scale * (t.rotation * mean_s);
  return t;
}

// Sum of squared masked residuals |transform(source) - target|^2.
inline double masked_squared_error(const PoseSequence& source, const PoseSequence& target,
                                   const JointMask& mask, const SimilarityTransform2D& t) {
  double sum = 0.0;
  for (std::size_t f = 0; f < source.frames(); ++f) {
    for (std::size_t j = 0; j < source.joints(); ++j) {
      if (!mask(f, j)) continue;
      const Vec2 d = t.apply(source.at(f, j)) - target.at(f, j);
      sum += dot(d, d);
    }
  }
  return sum;
}

}  // namespace jumps
