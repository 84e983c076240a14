#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "jumps/core/topology.hpp"
#include "jumps/net/config.hpp"

namespace jumps {

torch::Dtype torch_dtype(Precision p);

// Strided-conv stack shared by D and E: input C x H x F -> `outputs` values.
// D uses layer-wise normalization (GroupNorm with one group), E batch
// normalization; neither normalizes the first stage.
class ConvStackImpl : public torch::nn::Module {
 public:
  enum class Norm { Batch, Layer };

  ConvStackImpl(const NetworkConfig& cfg, int in_channels, int outputs, Norm norm);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Linear head() const { return head_; }

 private:
  NetworkConfig cfg_;
  int in_channels_;
  torch::nn::Sequential body_;
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(ConvStack);

// E: N x 4 x H x F -> N x Z.
class EncoderImpl : public ConvStackImpl {
 public:
  explicit EncoderImpl(const NetworkConfig& cfg) : ConvStackImpl(cfg, 4, cfg.latent_dim, Norm::Batch) {}
};
TORCH_MODULE(Encoder);

// D: N x 8 x H x F -> N (unbounded critic score).
class DiscriminatorImpl : public ConvStackImpl {
 public:
  explicit DiscriminatorImpl(const NetworkConfig& cfg) : ConvStackImpl(cfg, 8, 1, Norm::Layer) {}
  torch::Tensor forward(const torch::Tensor& x) { return ConvStackImpl::forward(x).squeeze(1); }
};
TORCH_MODULE(Discriminator);

// G: N x Z -> N x 4 x H x F in [-1, 1].
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(const NetworkConfig& cfg);
  torch::Tensor forward(const torch::Tensor& z);

 private:
  NetworkConfig cfg_;
  std::array<int, 3> seed_shape_{};  // channels, h, w after the linear layer
  torch::nn::Linear project_{nullptr};
  torch::nn::BatchNorm2d project_norm_{nullptr};
  torch::nn::Sequential body_;
};
TORCH_MODULE(Generator);

struct ParameterCounts {
  std::int64_t encoder = 0;
  std::int64_t generator = 0;
  std::int64_t discriminator = 0;

  friend bool operator==(const ParameterCounts&, const ParameterCounts&) = default;
};

// E, G and D plus the topology they were built for.
struct Model {
  NetworkConfig config;
  SkeletonTopology topology;
  Encoder encoder{nullptr};
  Generator generator{nullptr};
  Discriminator discriminator{nullptr};

  bool loaded() const { return !encoder.is_empty() && !generator.is_empty() && !discriminator.is_empty(); }
  torch::TensorOptions options() const { return torch::TensorOptions().dtype(torch_dtype(config.precision)); }
  void train(bool on = true);
};

// Builds freshly initialized networks; weights drawn from a generator seeded by `seed`.
Model make_model(const NetworkConfig& cfg, const SkeletonTopology& topo, std::uint64_t seed);

std::int64_t count_parameters(const torch::nn::Module& m);
ParameterCounts count_parameters(const Model& model);

// Layer-by-layer closed-form counts for a config.
ParameterCounts analytic_parameter_counts(const NetworkConfig& cfg);

// Output padding of each generator stage (indexed like the conv schedule).
std::vector<std::array<int, 2>> transposed_output_padding(const NetworkConfig& cfg);

}  // namespace jumps
