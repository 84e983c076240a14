#include "jumps/net/grid_ops.hpp"

#include "jumps/error.hpp"

namespace jumps {

GridLayout::GridLayout(const SkeletonTopology& topo) : height_(topo.grid_height()), joints_(topo.joint_count()) {
  validate(topo);
  std::vector<int64_t> first(joints_, -1), second(joints_, -1), gather(2 * height_);
  for (std::size_t h = 0; h < height_; ++h) {
    const auto& e = topo.grid_order[h];
    gather[2 * h] = static_cast<int64_t>(e.first);
    gather[2 * h + 1] = static_cast<int64_t>(e.second);
    if (e.axial()) {
      first[e.first] = static_cast<int64_t>(2 * h);
      second[e.first] = static_cast<int64_t>(2 * h + 1);
    } else {
      first[e.first] = second[e.first] = static_cast<int64_t>(2 * h);
      first[e.second] = second[e.second] = static_cast<int64_t>(2 * h + 1);
    }
  }
  first_slot_ = torch::tensor(first, torch::kLong);
  second_slot_ = torch::tensor(second, torch::kLong);
  gather_ = torch::tensor(gather, torch::kLong);
}

torch::Tensor GridLayout::joints_from_grid(const torch::Tensor& grid) const {
  if (grid.dim() != 4 || grid.size(1) != 4 || grid.size(2) != static_cast<int64_t>(height_)) {
    throw DataError("expected N x 4 x " + std::to_string(height_) + " x F grid");
  }
  const int64_t n = grid.size(0), f = grid.size(3);
  // N x (slot, xy) x H x F -> N x F x (H, slot) x xy
  const auto rows = grid.reshape({n, 2, 2, static_cast<int64_t>(height_), f})
                        .permute({0, 4, 3, 1, 2})
                        .reshape({n, f, static_cast<int64_t>(2 * height_), 2});
  return (rows.index_select(2, first_slot_) + rows.index_select(2, second_slot_)) * 0.5;
}

torch::Tensor GridLayout::grid_from_joints(const torch::Tensor& joints) const {
  if (joints.dim() != 4 || joints.size(2) != static_cast<int64_t>(joints_) || joints.size(3) != 2) {
    throw DataError("expected N x F x " + std::to_string(joints_) + " x 2 joints");
  }
  const int64_t n = joints.size(0), f = joints.size(1);
  return joints.index_select(2, gather_)
      .view({n, f, static_cast<int64_t>(height_), 2, 2})
      .permute({0, 3, 4, 2, 1})
      .reshape({n, 4, static_cast<int64_t>(height_), f});
}

torch::Tensor GridLayout::symmetrize(const torch::Tensor& grid) const {
  return grid_from_joints(joints_from_grid(grid));
}

torch::Tensor GridLayout::critic_input(const torch::Tensor& grid) const { return with_velocities(symmetrize(grid)); }

torch::Tensor with_velocities(const torch::Tensor& grid) {
  if (grid.dim() != 4 || grid.size(1) != 4) throw DataError("expected N x 4 x H x F grid");
  const auto diff = grid.narrow(3, 1, grid.size(3) - 1) - grid.narrow(3, 0, grid.size(3) - 1);
  const auto vel = torch::cat({torch::zeros_like(grid.narrow(3, 0, 1)), diff}, 3);
  return torch::cat({grid, vel}, 1);
}

torch::Tensor to_tensor(const GridTensor& grid, const torch::TensorOptions& opts) {
  auto t = torch::tensor(grid.data(), torch::kFloat64)
               .view({static_cast<int64_t>(grid.channels()), static_cast<int64_t>(grid.height()),
                      static_cast<int64_t>(grid.frames())});
  return t.to(opts.dtype());
}

GridTensor to_grid(const torch::Tensor& grid) {
  if (grid.dim() != 3) throw DataError("expected C x H x F tensor");
  const auto t = grid.detach().to(torch::kFloat64).contiguous();
  GridTensor g(t.size(0), t.size(1), t.size(2));
  std::copy(t.data_ptr<double>(), t.data_ptr<double>() + t.numel(), g.data().begin());
  return g;
}

torch::Tensor joints_tensor(const PoseSequence& seq, const torch::TensorOptions& opts) {
  std::vector<double> flat;
  flat.reserve(seq.positions().size() * 2);
  for (const auto& p : seq.positions()) {
    flat.push_back(p.x);
    flat.push_back(p.y);
  }
  return torch::tensor(flat, torch::kFloat64)
      .view({static_cast<int64_t>(seq.frames()), static_cast<int64_t>(seq.joints()), 2})
      .to(opts.dtype());
}

PoseSequence sequence_from_joints(const torch::Tensor& joints) {
  if (joints.dim() != 3 || joints.size(2) != 2) throw DataError("expected F x J x 2 tensor");
  const auto t = joints.detach().to(torch::kFloat64).contiguous();
  PoseSequence seq(t.size(0), t.size(1));
  const double* p = t.data_ptr<double>();
  for (auto& v : seq.positions()) {
    v = {p[0], p[1]};
    p += 2;
  }
  return seq;
}

torch::Tensor mask_tensor(const JointMask& mask, const torch::TensorOptions& opts) {
  std::vector<double> flat;
  flat.reserve(mask.frames() * mask.joints());
  for (std::size_t f = 0; f < mask.frames(); ++f) {
    for (std::size_t j = 0; j < mask.joints(); ++j) flat.push_back(mask(f, j) ? 1.0 : 0.0);
  }
  return torch::tensor(flat, torch::kFloat64)
      .view({static_cast<int64_t>(mask.frames()), static_cast<int64_t>(mask.joints())})
      .to(opts.dtype());
}

torch::Tensor grid_batch(const std::vector<PoseSequence>& seqs, const SkeletonTopology& topo,
                         const torch::TensorOptions& opts) {
  if (seqs.empty()) throw DataError("empty batch");
  std::vector<torch::Tensor> grids;
  grids.reserve(seqs.size());
  for (const auto& s : seqs) grids.push_back(to_tensor(encode_grid(s, topo), opts));
  return torch::stack(grids);
}

}  // namespace jumps
