#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "jumps/net/networks.hpp"

namespace jumps {

inline constexpr int kCheckpointFormatVersion = 1;

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

// Binary archive: "JMPT", u32 version, u32 count, then per tensor
// u32 name length, name, u8 dtype (0 f32, 1 f64, 2 i32), u32 rank, i64 dims,
// little-endian values. Float64 is used only for float64-precision models.
void write_archive(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors read_archive(const std::filesystem::path& path);

// Parameters and buffers of a module, in registration order.
NamedTensors module_state(const torch::nn::Module& m);

// Copies archive values into `m`; every name and shape must match exactly.
void load_module_state(torch::nn::Module& m, const NamedTensors& state, const std::string& what);

struct Checkpoint {
  Model model;
  nlohmann::json manifest;
};

// Directory with `manifest`, one archive per subnetwork and optionally
// `optimizer.state`. Written to a sibling temp dir and renamed into place.
void save_checkpoint(const std::filesystem::path& dir, const Model& model, nlohmann::json manifest,
                     const NamedTensors* optimizer_state = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& dir);

NamedTensors load_optimizer_state(const std::filesystem::path& dir);

}  // namespace jumps
