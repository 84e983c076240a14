#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace jumps {

// One strided convolution stage of D/E; G mirrors the list with transposed
// convolutions.
struct LayerSpec {
  int channels = 0;
  std::array<int, 2> kernel{3, 4};   // (entries, frames)
  std::array<int, 2> stride{2, 2};
  std::array<int, 2> padding{1, 1};

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Precision { Float32, Float64 };

struct NetworkConfig {
  int latent_dim = 64;
  int base_channels = 48;  // used when `layers` is empty
  int height = 18;
  int frames = 24;
  std::vector<LayerSpec> layers;  // empty: 4 stages of base * {1, 2, 4, 8}
  double leaky_slope = 0.2;
  Precision precision = Precision::Float32;

  // Stage list with defaults filled in.
  std::vector<LayerSpec> schedule() const;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

// Spatial size after every conv stage, starting with the input (H, F).
std::vector<std::array<int, 2>> conv_shapes(const NetworkConfig& cfg);

void validate(const NetworkConfig& cfg);

nlohmann::json to_json(const NetworkConfig& cfg);
NetworkConfig network_config_from_json(const nlohmann::json& j);

std::string to_string(Precision p);
Precision precision_from_string(const std::string& s);

// Paper-scale and desk-scale presets.
NetworkConfig default_network_config();
NetworkConfig desk_network_config();

}  // namespace jumps
