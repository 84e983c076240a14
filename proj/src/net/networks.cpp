#include "jumps/net/networks.hpp"

#include <mutex>

#include "jumps/error.hpp"

namespace jumps {

namespace nn = torch::nn;

torch::Dtype torch_dtype(Precision p) { return p == Precision::Float64 ? torch::kFloat64 : torch::kFloat32; }

namespace {

std::string shape_string(const torch::Tensor& t) {
  std::string s = "[";
  for (int64_t i = 0; i < t.dim(); ++i) s += (i ? ", " : "") + std::to_string(t.size(i));
  return s + "]";
}

}  // namespace

ConvStackImpl::ConvStackImpl(const NetworkConfig& cfg, int in_channels, int outputs, Norm norm)
    : cfg_(cfg), in_channels_(in_channels) {
  validate(cfg);
  const auto layers = cfg.schedule();
  int c = in_channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    body_->push_back(nn::Conv2d(nn::Conv2dOptions(c, l.channels, {l.kernel[0], l.kernel[1]})
                                    .stride({l.stride[0], l.stride[1]})
                                    .padding({l.padding[0], l.padding[1]})));
    if (i > 0) {
      if (norm == Norm::Batch) {
        body_->push_back(nn::BatchNorm2d(l.channels));
      } else {
        body_->push_back(nn::GroupNorm(nn::GroupNormOptions(1, l.channels)));
      }
    }
    body_->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(cfg.leaky_slope)));
    c = l.channels;
  }
  const auto last = conv_shapes(cfg).back();
  head_ = nn::Linear(c * last[0] * last[1], outputs);
  register_module("body", body_);
  register_module("head", head_);
}

torch::Tensor ConvStackImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != in_channels_ || x.size(2) != cfg_.height || x.size(3) != cfg_.frames) {
    throw DataError("expected N x " + std::to_string(in_channels_) + " x " + std::to_string(cfg_.height) +
                    " x " + std::to_string(cfg_.frames) + " input, got " + shape_string(x));
  }
  return head_->forward(body_->forward(x).flatten(1));
}

std::vector<std::array<int, 2>> transposed_output_padding(const NetworkConfig& cfg) {
  const auto layers = cfg.schedule();
  const auto shapes = conv_shapes(cfg);
  std::vector<std::array<int, 2>> pad(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    for (int a = 0; a < 2; ++a) {
      pad[i][a] = shapes[i][a] - ((shapes[i + 1][a] - 1) * l.stride[a] - 2 * l.padding[a] + l.kernel[a]);
    }
  }
  return pad;
}

GeneratorImpl::GeneratorImpl(const NetworkConfig& cfg) : cfg_(cfg) {
  validate(cfg);
  const auto layers = cfg.schedule();
  const auto shapes = conv_shapes(cfg);
  const auto pad = transposed_output_padding(cfg);
  seed_shape_ = {layers.back().channels, shapes.back()[0], shapes.back()[1]};
  project_ = nn::Linear(cfg.latent_dim, seed_shape_[0] * seed_shape_[1] * seed_shape_[2]);
  project_norm_ = nn::BatchNorm2d(seed_shape_[0]);
  for (std::size_t k = layers.size(); k-- > 0;) {
    const auto& l = layers[k];
    const int out = k == 0 ? 4 : layers[k - 1].channels;
    body_->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(l.channels, out, {l.kernel[0], l.kernel[1]})
                                             .stride({l.stride[0], l.stride[1]})
                                             .padding({l.padding[0], l.padding[1]})
                                             .output_padding({pad[k][0], pad[k][1]})));
    if (k == 0) {
      body_->push_back(nn::Tanh());
    } else {
      body_->push_back(nn::BatchNorm2d(out));
      body_->push_back(nn::ReLU());
    }
  }
  register_module("project", project_);
  register_module("project_norm", project_norm_);
  register_module("body", body_);
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& z) {
  if (z.dim() != 2 || z.size(1) != cfg_.latent_dim) {
    throw DataError("expected N x " + std::to_string(cfg_.latent_dim) + " latent codes, got " + shape_string(z));
  }
  auto h = project_->forward(z).view({z.size(0), seed_shape_[0], seed_shape_[1], seed_shape_[2]});
  h = torch::relu(project_norm_->forward(h));
  return body_->forward(h);
}

void Model::train(bool on) {
  encoder->train(on);
  generator->train(on);
  discriminator->train(on);
}

Model make_model(const NetworkConfig& cfg, const SkeletonTopology& topo, std::uint64_t seed) {
  validate(cfg);
  if (static_cast<int>(topo.grid_height()) != cfg.height) {
    throw ConfigError("network height " + std::to_string(cfg.height) + " does not match topology '" + topo.name +
                      "' (" + std::to_string(topo.grid_height()) + " grid rows)");
  }
  // Module constructors draw from the global torch generator.
  static std::mutex init_mutex;
  std::lock_guard lock(init_mutex);
  torch::manual_seed(seed);
  Model m{cfg, topo, Encoder(cfg), Generator(cfg), Discriminator(cfg)};
  const auto dtype = torch_dtype(cfg.precision);
  m.encoder->to(dtype);
  m.generator->to(dtype);
  m.discriminator->to(dtype);
  return m;
}

std::int64_t count_parameters(const nn::Module& m) {
  std::int64_t n = 0;
  for (const auto& p : m.parameters()) n += p.numel();
  return n;
}

ParameterCounts count_parameters(const Model& model) {
  if (!model.loaded()) throw ConfigError("model is not loaded");
  return {count_parameters(*model.encoder), count_parameters(*model.generator),
          count_parameters(*model.discriminator)};
}

ParameterCounts analytic_parameter_counts(const NetworkConfig& cfg) {
  validate(cfg);
  const auto layers = cfg.schedule();
  const auto last = conv_shapes(cfg).back();
  const std::int64_t flat = static_cast<std::int64_t>(layers.back().channels) * last[0] * last[1];

  auto conv = [](std::int64_t in, std::int64_t out, const LayerSpec& l) {
    return in * out * l.kernel[0] * l.kernel[1] + out;
  };
  auto stack = [&](std::int64_t in, std::int64_t outputs) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      n += conv(in, layers[i].channels, layers[i]);
      if (i > 0) n += 2 * layers[i].channels;  // norm scale + shift
      in = layers[i].channels;
    }
    return n + flat * outputs + outputs;
  };

  ParameterCounts c;
  c.encoder = stack(4, cfg.latent_dim);
  c.discriminator = stack(8, 1);
  c.generator = cfg.latent_dim * flat + flat + 2 * layers.back().channels;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const std::int64_t out = k == 0 ? 4 : layers[k - 1].channels;
    c.generator += conv(layers[k].channels, out, layers[k]);  // transposed: same weight count
    if (k > 0) c.generator += 2 * out;
  }
  return c;
}

}  // namespace jumps
