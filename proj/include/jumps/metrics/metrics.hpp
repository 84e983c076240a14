#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "jumps/core/pose_sequence.hpp"
#include "jumps/core/topology.hpp"

namespace jumps {

// Mean Euclidean distance over masked (frame, joint) pairs.
inline double mpjpe(const PoseSequence& x, const PoseSequence& y, const JointMask& mask) {
  require_same_shape(x, y);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t f = 0; f < x.frames(); ++f) {
    for (std::size_t j = 0; j < x.joints(); ++j) {
      if (!mask(f, j)) continue;
      sum += norm(x.at(f, j) - y.at(f, j));
      ++n;
    }
  }
  if (n == 0) throw DataError("mpjpe over an empty mask");
  return sum / static_cast<double>(n);
}

inline double mpjpe(const PoseSequence& x, const PoseSequence& y) {
  return mpjpe(x, y, JointMask(x.frames(), x.joints(), true));
}

// Mean velocity error; a (frame, joint) pair counts when the joint is masked
// at both f and f - 1.
inline double mpjve(const PoseSequence& x, const PoseSequence& y, const JointMask& mask) {
  require_same_shape(x, y);
  if (x.frames() < 2) throw DataError("mpjve needs at least 2 frames");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t f = 1; f < x.frames(); ++f) {
    for (std::size_t j = 0; j < x.joints(); ++j) {
      if (!mask(f, j) || !mask(f - 1, j)) continue;
      const Vec2 vx = x.at(f, j) - x.at(f - 1, j);
      const Vec2 vy = y.at(f, j) - y.at(f - 1, j);
      sum += norm(vx - vy);
      ++n;
    }
  }
  if (n == 0) throw DataError("mpjve has no valid frame pairs");
  return sum / static_cast<double>(n);
}

inline double mpjve(const PoseSequence& x, const PoseSequence& y) {
  return mpjve(x, y, JointMask(x.frames(), x.joints(), true));
}

// One scored (frame, joint) pair: its position error and the frame's head size.
struct JointError {
  std::size_t sequence = 0;
  std::size_t frame = 0;
  std::size_t joint = 0;
  double error = 0.0;
  double head_size = 0.0;
};

struct ErrorCollection {
  std::vector<JointError> errors;
  std::size_t frames_excluded = 0;  // zero head size
};

// Errors of `pred` against `gt` on pairs where gt is available and `restrict`
// (if given) is set. Frames whose gt head size is zero or unavailable are
// skipped and counted.
inline void collect_errors(ErrorCollection& out, const PoseSequence& pred, const PoseSequence& gt,
                           const SkeletonTopology& topo, std::size_t sequence_id,
                           const JointMask* restrict = nullptr, double head_factor = 1.0) {
  require_same_shape(pred, gt);
  if (!topo.head_pair) throw DataError("topology '" + topo.name + "' has no head_pair");
  if (gt.joints() != topo.joint_count()) throw DataError("sequence does not match topology");
  const auto [ha, hb] = *topo.head_pair;
  for (std::size_t f = 0; f < gt.frames(); ++f) {
    const double head = gt.available(f, ha) && gt.available(f, hb)
                            ? head_factor * norm(gt.at(f, ha) - gt.at(f, hb))
                            : 0.0;
    if (!(head > 0.0)) {
      ++out.frames_excluded;
      continue;
    }
    for (std::size_t j = 0; j < gt.joints(); ++j) {
      if (!gt.available(f, j)) continue;
      if (restrict && !(*restrict)(f, j)) continue;
      out.errors.push_back({sequence_id, f, j, norm(pred.at(f, j) - gt.at(f, j)), head});
    }
  }
}

// Fraction of pairs with error <= alpha * head size (inclusive).
inline double pckh(const std::vector<JointError>& errors, double alpha) {
  if (errors.empty()) throw DataError("pckh over an empty set of joints");
  std::size_t hits = 0;
  for (const auto& e : errors) {
    if (e.error <= alpha * e.head_size) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(errors.size());
}

inline constexpr std::size_t kAucThresholds = 101;

inline double auc_threshold(std::size_t i) { return static_cast<double>(i) / 100.0; }

// PCKh at thresholds 0.00, 0.01, ..., 1.00.
inline std::array<double, kAucThresholds> pckh_curve(const std::vector<JointError>& errors) {
  std::array<double, kAucThresholds> curve{};
  for (std::size_t i = 0; i < kAucThresholds; ++i) curve[i] = pckh(errors, auc_threshold(i));
  return curve;
}

inline double auc(const std::vector<JointError>& errors) {
  double sum = 0.0;
  for (double v : pckh_curve(errors)) sum += v;
  return sum / static_cast<double>(kAucThresholds);
}

inline double pckh(const PoseSequence& pred, const PoseSequence& gt, const SkeletonTopology& topo,
                   double alpha, const JointMask* restrict = nullptr) {
  ErrorCollection c;
  collect_errors(c, pred, gt, topo, 0, restrict);
  return pckh(c.errors, alpha);
}

inline double auc(const PoseSequence& pred, const PoseSequence& gt, const SkeletonTopology& topo,
                  const JointMask* restrict = nullptr) {
  ErrorCollection c;
  collect_errors(c, pred, gt, topo, 0, restrict);
  return auc(c.errors);
}

}  // namespace jumps
