#pragma once

#include "jumps/core/pose_sequence.hpp"
#include "jumps/core/topology.hpp"

namespace jumps {

namespace detail {

inline const DownsampleMap& checked_map(const SkeletonTopology& full,
                                        const SkeletonTopology& reduced) {
  if (!reduced.downsample_map) {
    throw DataError("topology '" + reduced.name + "' has no downsample_map");
  }
  const auto& map = *reduced.downsample_map;
  if (map.target != full.name) {
    throw DataError("topology '" + reduced.name + "' maps into '" + map.target + "', not '" +
                    full.name + "'");
  }
  if (map.to_target.size() != reduced.joint_count()) throw DataError("downsample_map size mismatch");
  for (JointId id : map.to_target) {
    if (id >= full.joint_count()) throw DataError("downsample_map references an unknown joint");
  }
  return map;
}

}  // namespace detail

// Keeps the joints of `full` that `reduced` maps onto; every other joint is
// marked unavailable. Positions are left untouched.
inline PoseSequence downsample(const PoseSequence& seq, const SkeletonTopology& full,
                               const SkeletonTopology& reduced) {
  if (seq.joints() != full.joint_count()) throw DataError("sequence does not match topology");
  const auto& map = detail::checked_map(full, reduced);
  std::vector<bool> keep(full.joint_count(), false);
  for (JointId id : map.to_target) keep[id] = true;
  PoseSequence out = seq;
  for (std::size_t f = 0; f < seq.frames(); ++f) {
    for (std::size_t j = 0; j < seq.joints(); ++j) {
      out.mask().set(f, j, keep[j] && seq.available(f, j));
    }
  }
  return out;
}

// Full-topology sequence -> reduced-topology sequence holding only the
// mapped joints.
inline PoseSequence restrict_to(const PoseSequence& seq, const SkeletonTopology& full,
                                const SkeletonTopology& reduced) {
  if (seq.joints() != full.joint_count()) throw DataError("sequence does not match topology");
  const auto& map = detail::checked_map(full, reduced);
  PoseSequence out(seq.frames(), reduced.joint_count());
  for (std::size_t f = 0; f < seq.frames(); ++f) {
    for (std::size_t r = 0; r < reduced.joint_count(); ++r) {
      out.at(f, r) = seq.at(f, map.to_target[r]);
      out.mask().set(f, r, seq.available(f, map.to_target[r]));
    }
  }
  out.norm = seq.norm;
  out.fps = seq.fps;
  return out;
}

// Reduced-topology sequence -> full topology, available only where the
// reduced joint is mapped and available. Unmapped positions are zero.
inline PoseSequence embed(const PoseSequence& seq, const SkeletonTopology& reduced,
                          const SkeletonTopology& full) {
  if (seq.joints() != reduced.joint_count()) throw DataError("sequence does not match topology");
  const auto& map = detail::checked_map(full, reduced);
  PoseSequence out(seq.frames(), full.joint_count());
  out.mask() = JointMask(seq.frames(), full.joint_count(), false);
  for (std::size_t f = 0; f < seq.frames(); ++f) {
    for (std::size_t r = 0; r < reduced.joint_count(); ++r) {
      out.at(f, map.to_target[r]) = seq.at(f, r);
      out.mask().set(f, map.to_target[r], seq.available(f, r));
    }
  }
  out.norm = seq.norm;
  out.fps = seq.fps;
  return out;
}

}  // namespace jumps
