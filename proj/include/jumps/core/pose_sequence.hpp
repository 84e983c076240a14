#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "jumps/core/geometry.hpp"
#include "jumps/error.hpp"

namespace jumps {

// Frames x joints availability flags.
class JointMask {
 public:
  JointMask() = default;
  JointMask(std::size_t frames, std::size_t joints, bool value = true)
      : frames_(frames), joints_(joints), bits_(frames * joints, value ? 1 : 0) {}

  std::size_t frames() const { return frames_; }
  std::size_t joints() const { return joints_; }

  bool operator()(std::size_t f, std::size_t j) const { return bits_[f * joints_ + j] != 0; }
  void set(std::size_t f, std::size_t j, bool value) { bits_[f * joints_ + j] = value ? 1 : 0; }

  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  bool all() const { return count() == bits_.size(); }
  bool none() const { return count() == 0; }

  JointMask operator&(const JointMask& o) const {
    require_same_shape(o);
    JointMask out(frames_, joints_, false);
    for (std::size_t i = 0; i < bits_.size(); ++i) out.bits_[i] = bits_[i] & o.bits_[i];
    return out;
  }

  JointMask operator~() const {
    JointMask out = *this;
    for (auto& b : out.bits_) b = b ? 0 : 1;
    return out;
  }

  void require_same_shape(const JointMask& o) const {
    if (o.frames_ != frames_ || o.joints_ != joints_) {
      throw DataError("mask shape mismatch");
    }
  }

  friend bool operator==(const JointMask&, const JointMask&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t joints_ = 0;
  std::vector<std::uint8_t> bits_;
};

// F x J 2D joint positions with availability mask. `norm` maps the stored
// coordinates back to the frame the sequence originally came from.
class PoseSequence {
 public:
  PoseSequence() = default;
  PoseSequence(std::size_t frames, std::size_t joints)
      : frames_(frames), joints_(joints), positions_(frames * joints), mask_(frames, joints, true) {}

  std::size_t frames() const { return frames_; }
  std::size_t joints() const { return joints_; }

  Vec2& at(std::size_t f, std::size_t j) { return positions_[f * joints_ + j]; }
  const Vec2& at(std::size_t f, std::size_t j) const { return positions_[f * joints_ + j]; }

  std::span<Vec2> positions() { return positions_; }
  std::span<const Vec2> positions() const { return positions_; }

  JointMask& mask() { return mask_; }
  const JointMask& mask() const { return mask_; }
  bool available(std::size_t f, std::size_t j) const { return mask_(f, j); }

  AffineTransform2D norm;
  std::optional<double> fps;

  // Frames [begin, begin + count) with mask, norm and fps carried over.
  PoseSequence slice(std::size_t begin, std::size_t count) const {
    if (begin + count > frames_) throw DataError("frame slice out of range");
    PoseSequence out(count, joints_);
    for (std::size_t f = 0; f < count; ++f) {
      for (std::size_t j = 0; j < joints_; ++j) {
        out.at(f, j) = at(begin + f, j);
        out.mask_.set(f, j, mask_(begin + f, j));
      }
    }
    out.norm = norm;
    out.fps = fps;
    return out;
  }

  // Applies `t` to every position (masked or not).
  PoseSequence transformed(const AffineTransform2D& t) const {
    PoseSequence out = *this;
    for (auto& p : out.positions_) p = t.apply(p);
    return out;
  }

  // Positions mapped back through `norm`, with norm reset to identity.
  PoseSequence denormalized() const {
    PoseSequence out = transformed(norm);
    out.norm = AffineTransform2D::identity();
    return out;
  }

  bool finite_where_available() const {
    for (std::size_t i = 0; i < positions_.size(); ++i) {
      if (mask_(i / joints_, i % joints_) &&
          !(std::isfinite(positions_[i].x) && std::isfinite(positions_[i].y))) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t frames_ = 0;
  std::size_t joints_ = 0;
  std::vector<Vec2> positions_;
  JointMask mask_;
};

inline void require_same_shape(const PoseSequence& a, const PoseSequence& b) {
  if (a.frames() != b.frames() || a.joints() != b.joints()) {
    throw DataError("pose sequence shape mismatch");
  }
}

}  // namespace jumps
