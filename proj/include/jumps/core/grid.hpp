#pragma once

#include <cstddef>
#include <vector>

#include "jumps/core/pose_sequence.hpp"
#include "jumps/core/topology.hpp"

namespace jumps {

// C x H x F array. Channels 0-3 hold (x, y) of an entry's first joint and
// (x, y) of its second joint; channels 4-7, when present, their velocities.
class GridTensor {
 public:
  GridTensor() = default;
  GridTensor(std::size_t channels, std::size_t height, std::size_t frames)
      : channels_(channels), height_(height), frames_(frames), data_(channels * height * frames, 0.0) {}

  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t frames() const { return frames_; }

  double& operator()(std::size_t c, std::size_t h, std::size_t f) {
    return data_[(c * height_ + h) * frames_ + f];
  }
  double operator()(std::size_t c, std::size_t h, std::size_t f) const {
    return data_[(c * height_ + h) * frames_ + f];
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const GridTensor&, const GridTensor&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t frames_ = 0;
  std::vector<double> data_;
};

// Lays a pose sequence out as the paired-joint grid. Axial joints fill both
// halves of their entry. Velocity at frame 0 is zero.
inline GridTensor encode_grid(const PoseSequence& seq, const SkeletonTopology& topo,
                              bool with_velocities = false) {
  if (seq.joints() != topo.joint_count()) {
    throw DataError("sequence has " + std::to_string(seq.joints()) + " joints, topology '" +
                    topo.name + "' has " + std::to_string(topo.joint_count()));
  }
  const std::size_t H = topo.grid_height(), F = seq.frames();
  GridTensor grid(with_velocities ? 8 : 4, H, F);
  for (std::size_t h = 0; h < H; ++h) {
    const GridEntry& e = topo.grid_order[h];
    for (std::size_t f = 0; f < F; ++f) {
      const Vec2 a = seq.at(f, e.first), b = seq.at(f, e.second);
      grid(0, h, f) = a.x;
      grid(1, h, f) = a.y;
      grid(2, h, f) = b.x;
      grid(3, h, f) = b.y;
    }
  }
  if (with_velocities) {
    for (std::size_t c = 0; c < 4; ++c) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t f = 1; f < F; ++f) {
          grid(c + 4, h, f) = grid(c, h, f) - grid(c, h, f - 1);
        }
      }
    }
  }
  return grid;
}

// Inverse of encode_grid on the position channels. Axial joints take the
// mean of their two halves. The result has a full mask.
inline PoseSequence decode_grid(const GridTensor& grid, const SkeletonTopology& topo) {
  if (grid.channels() != 4) {
    throw DataError("decode_grid expects 4 channels, got " + std::to_string(grid.channels()));
  }
  if (grid.height() != topo.grid_height()) throw DataError("grid height does not match topology");
  PoseSequence seq(grid.frames(), topo.joint_count());
  for (std::size_t h = 0; h < grid.height(); ++h) {
    const GridEntry& e = topo.grid_order[h];
    for (std::size_t f = 0; f < grid.frames(); ++f) {
      const Vec2 a{grid(0, h, f), grid(1, h, f)};
      const Vec2 b{grid(2, h, f), grid(3, h, f)};
      if (e.axial()) {
        seq.at(f, e.first) = {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0};
      } else {
        seq.at(f, e.first) = a;
        seq.at(f, e.second) = b;
      }
    }
  }
  return seq;
}

}  // namespace jumps
