#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "jumps/core/pose_sequence.hpp"
#include "jumps/losses/losses.hpp"
#include "jumps/net/checkpoint.hpp"
#include "jumps/net/networks.hpp"

namespace jumps {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

void validate(const AdamConfig& a, bool allow_zero_lr = true);
nlohmann::json to_json(const AdamConfig& a);
AdamConfig adam_config_from_json(const nlohmann::json& j, AdamConfig base = {});

struct TrainConfig {
  NetworkConfig network = default_network_config();
  LossWeights weights;
  AdamConfig adam_e, adam_g, adam_d;
  std::int64_t epochs = 60;
  std::int64_t batch_size = 256;  // reduced to the training set size when larger
  std::optional<std::int64_t> max_steps;  // overrides epochs when set
  std::int64_t n_critic = 1;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 1000;  // steps; 0 = only at the end
  std::int64_t eval_every = 100;         // held-out MPJPE cadence in steps
  std::int64_t heldout = 16;             // sequences held out of training
  std::string dataset;                   // dataset directory, relative to the config file

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& cfg);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Desk-scale acceptance preset: batch 64, Z = 32, base 16, Adam lr 5e-4.
TrainConfig desk_train_config();

struct StepLosses {
  double critic = 0;               // L_D
  double generator = 0;            // L_G
  double reconstruction = 0;       // L_Rec
  double backward = 0;             // L_Rec_backward
  double mixed = 0;                // L_Mix
  double wasserstein = 0;          // mean D(real) - mean D(fake)
};

// Training split: a seeded shuffle of the dataset, the last `heldout` entries
// held out.
struct Split {
  std::vector<PoseSequence> train;
  std::vector<PoseSequence> heldout;
};
Split split_dataset(const std::vector<PoseSequence>& seqs, std::int64_t heldout, std::uint64_t seed);

class Trainer {
 public:
  Trainer(TrainConfig cfg, const SkeletonTopology& topo, std::vector<PoseSequence> train,
          std::vector<PoseSequence> heldout);

  // One critic step (n_critic times) followed by one joint E/G step.
  StepLosses step();

  // Mean reconstruction MPJPE of G(E(x)) over the held-out slice (eval mode).
  double heldout_mpjpe();
  // Same over the training set.
  double train_mpjpe();

  // Mean squared error between z and E(G(z)) on `n` prior samples.
  double latent_error(std::int64_t n, std::uint64_t seed);

  std::int64_t steps_done() const { return step_; }
  std::int64_t epoch() const { return step_ / steps_per_epoch_; }
  std::int64_t steps_per_epoch() const { return steps_per_epoch_; }
  std::int64_t total_steps() const;
  std::int64_t batch_size() const { return batch_; }

  const TrainConfig& config() const { return cfg_; }
  Model& model() { return model_; }
  const Model& model() const { return model_; }

  NamedTensors optimizer_state() const;
  void load_optimizer_state(const NamedTensors& state);

  // Checkpoint manifest extras and restore.
  nlohmann::json manifest(const StepLosses* last = nullptr, std::optional<double> heldout = std::nullopt) const;
  void save(const std::filesystem::path& dir, const StepLosses* last = nullptr,
            std::optional<double> heldout = std::nullopt) const;
  void restore(const std::filesystem::path& dir);

 private:
  std::vector<int64_t> batch_indices(std::int64_t step) const;
  torch::Tensor heldout_grids_mpjpe(const torch::Tensor& grids);

  TrainConfig cfg_;
  Model model_;
  GridLayout layout_;
  torch::Tensor train_grids_;
  torch::Tensor heldout_grids_;
  std::int64_t batch_ = 0;
  std::int64_t steps_per_epoch_ = 0;
  std::int64_t step_ = 0;
  std::unique_ptr<torch::optim::Adam> opt_e_, opt_g_, opt_d_;
};

struct FitOptions {
  std::filesystem::path out;
  std::optional<std::filesystem::path> resume;
  std::function<void(std::int64_t step, const StepLosses&)> on_step;
};

struct FitResult {
  std::int64_t steps = 0;
  double heldout_mpjpe = 0;
  std::filesystem::path checkpoint;
};

// Runs the loop, writing `metrics.csv` and `checkpoint/` under `out`.
// Non-finite losses abort with NumericalError after writing `diagnostic.json`;
// the last good checkpoint stays in place.
FitResult fit(const TrainConfig& cfg, const SkeletonTopology& topo, const std::vector<PoseSequence>& seqs,
              const FitOptions& opts);

}  // namespace jumps
