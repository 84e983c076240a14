#include "jumps/net/config.hpp"

#include "jumps/error.hpp"

namespace jumps {

std::vector<LayerSpec> NetworkConfig::schedule() const {
  if (!layers.empty()) return layers;
  std::vector<LayerSpec> out;
  for (int m : {1, 2, 4, 8}) {
    LayerSpec l;
    l.channels = base_channels * m;
    out.push_back(l);
  }
  return out;
}

std::vector<std::array<int, 2>> conv_shapes(const NetworkConfig& cfg) {
  std::vector<std::array<int, 2>> shapes{{cfg.height, cfg.frames}};
  for (const auto& l : cfg.schedule()) {
    std::array<int, 2> next{};
    for (int a = 0; a < 2; ++a) {
      next[a] = (shapes.back()[a] + 2 * l.padding[a] - l.kernel[a]) / l.stride[a] + 1;
    }
    shapes.push_back(next);
  }
  return shapes;
}

void validate(const NetworkConfig& cfg) {
  if (cfg.latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (cfg.height < 1 || cfg.frames < 2) throw ConfigError("grid must be at least 1 x 2");
  const auto layers = cfg.schedule();
  if (layers.empty()) throw ConfigError("network needs at least one stage");
  for (const auto& l : layers) {
    if (l.channels < 1) throw ConfigError("stage channels must be >= 1");
    for (int a = 0; a < 2; ++a) {
      if (l.kernel[a] < 1 || l.stride[a] < 1 || l.padding[a] < 0) {
        throw ConfigError("invalid kernel/stride/padding");
      }
    }
  }
  const auto shapes = conv_shapes(cfg);
  for (std::size_t i = 1; i < shapes.size(); ++i) {
    if (shapes[i][0] < 1 || shapes[i][1] < 1) {
      throw ConfigError("layer schedule collapses the " + std::to_string(cfg.height) + "x" +
                        std::to_string(cfg.frames) + " grid at stage " + std::to_string(i));
    }
    // The mirrored transposed stage must be able to recover the size.
    for (int a = 0; a < 2; ++a) {
      const auto& l = layers[i - 1];
      const int base = (shapes[i][a] - 1) * l.stride[a] - 2 * l.padding[a] + l.kernel[a];
      const int extra = shapes[i - 1][a] - base;
      if (extra < 0 || extra >= l.stride[a]) throw ConfigError("layer schedule cannot be mirrored");
    }
  }
  if (!(cfg.leaky_slope >= 0.0)) throw ConfigError("leaky_slope must be >= 0");
}

std::string to_string(Precision p) { return p == Precision::Float64 ? "float64" : "float32"; }

Precision precision_from_string(const std::string& s) {
  if (s == "float32") return Precision::Float32;
  if (s == "float64") return Precision::Float64;
  throw ConfigError("unknown precision '" + s + "'");
}

nlohmann::json to_json(const NetworkConfig& cfg) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : cfg.schedule()) {
    layers.push_back({{"channels", l.channels},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"padding", l.padding}});
  }
  return {{"latent_dim", cfg.latent_dim},
          {"base_channels", cfg.base_channels},
          {"height", cfg.height},
          {"frames", cfg.frames},
          {"layers", layers},
          {"leaky_slope", cfg.leaky_slope},
          {"precision", to_string(cfg.precision)}};
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig cfg;
  try {
    cfg.latent_dim = j.value("latent_dim", cfg.latent_dim);
    cfg.base_channels = j.value("base_channels", cfg.base_channels);
    cfg.height = j.value("height", cfg.height);
    cfg.frames = j.value("frames", cfg.frames);
    cfg.leaky_slope = j.value("leaky_slope", cfg.leaky_slope);
    if (j.contains("precision")) cfg.precision = precision_from_string(j.at("precision"));
    if (j.contains("layers")) {
      for (const auto& lj : j.at("layers")) {
        LayerSpec l;
        l.channels = lj.at("channels");
        l.kernel = lj.value("kernel", l.kernel);
        l.stride = lj.value("stride", l.stride);
        l.padding = lj.value("padding", l.padding);
        cfg.layers.push_back(l);
      }
      // An explicit copy of the default schedule is the default schedule.
      NetworkConfig plain;
      plain.base_channels = cfg.base_channels;
      if (cfg.layers == plain.schedule()) cfg.layers.clear();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

NetworkConfig default_network_config() { return {}; }

NetworkConfig desk_network_config() {
  NetworkConfig cfg;
  cfg.latent_dim = 32;
  cfg.base_channels = 16;
  return cfg;
}

}  // namespace jumps
