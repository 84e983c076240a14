#pragma once

#include <vector>

#include <torch/torch.h>

#include "jumps/core/grid.hpp"
#include "jumps/core/pose_sequence.hpp"
#include "jumps/core/topology.hpp"

namespace jumps {

// Differentiable counterparts of encode_grid/decode_grid over batches.
// Grids are N x 4 x H x F, joint tensors N x F x J x 2.
class GridLayout {
 public:
  explicit GridLayout(const SkeletonTopology& topo);

  torch::Tensor joints_from_grid(const torch::Tensor& grid) const;
  torch::Tensor grid_from_joints(const torch::Tensor& joints) const;

  // Averages the two halves of every axial row (same as decode then encode).
  torch::Tensor symmetrize(const torch::Tensor& grid) const;

  // Critic input: symmetrized grid with velocity channels.
  torch::Tensor critic_input(const torch::Tensor& grid) const;

  std::size_t height() const { return height_; }
  std::size_t joints() const { return joints_; }

 private:
  std::size_t height_ = 0;
  std::size_t joints_ = 0;
  torch::Tensor first_slot_;   // J: row * 2 + slot of the first occurrence
  torch::Tensor second_slot_;  // J: the other half for axial joints, else the same
  torch::Tensor gather_;       // 2H: joint feeding each (row, slot)
};

// Appends velocity channels (v[0] = 0) to a N x 4 x H x F grid.
torch::Tensor with_velocities(const torch::Tensor& grid);

torch::Tensor to_tensor(const GridTensor& grid, const torch::TensorOptions& opts = {});
GridTensor to_grid(const torch::Tensor& grid);  // C x H x F

// F x J x 2 tensor from a sequence (positions only) and back.
torch::Tensor joints_tensor(const PoseSequence& seq, const torch::TensorOptions& opts = {});
PoseSequence sequence_from_joints(const torch::Tensor& joints);

// F x J mask as 0/1 values.
torch::Tensor mask_tensor(const JointMask& mask, const torch::TensorOptions& opts = {});

// Stack of encoded grids, N x 4 x H x F.
torch::Tensor grid_batch(const std::vector<PoseSequence>& seqs, const SkeletonTopology& topo,
                         const torch::TensorOptions& opts = {});

}  // namespace jumps
