#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "jumps/core/grid.hpp"
#include "jumps/core/pose_sequence.hpp"
#include "jumps/data/chunk.hpp"
#include "jumps/losses/losses.hpp"
#include "jumps/net/networks.hpp"
#include "jumps/train/trainer.hpp"

namespace jumps {

struct InferConfig {
  std::int64_t iterations = 200;
  AdamConfig adam{.lr = 1.0, .beta1 = 0.8, .beta2 = 0.999, .eps = 1e-8};
  LossWeights weights;  // only the gammas are read
  std::int64_t starts = 8;   // start 0 is encoder-initialized when encoder_init is on
  bool encoder_init = true;
  bool overlap = true;       // stride F/2, else F
  bool procrustes = true;
  std::uint64_t seed = 0;
  std::size_t workers = 1;   // chunks inverted in parallel

  friend bool operator==(const InferConfig&, const InferConfig&) = default;
};

void validate(const InferConfig& cfg);
nlohmann::json to_json(const InferConfig& cfg);
InferConfig infer_config_from_json(const nlohmann::json& j, InferConfig base = {});

// Puts all three networks in eval mode; call before sharing across threads.
void ensure_eval(const Model& model);

// Encoder input for a partially observed sequence: missing joints take the
// centroid of all available joints.
GridTensor zero_fill(const PoseSequence& x, const SkeletonTopology& topo);

struct StartTrace {
  std::vector<double> contextual;  // per iteration, before the update
  std::vector<double> total;
};

struct ChunkResult {
  PoseSequence output;        // full mask, in the input's coordinates
  torch::Tensor z;            // selected latent code, 1 x Z
  double loss = 0;            // final L_Inp of the selected start
  double contextual = 0;
  std::size_t selected = 0;
  std::vector<double> start_losses;  // final L_Inp per start
  std::vector<double> start_contextual;
  std::vector<StartTrace> traces;
  SimilarityTransform2D alignment;   // selected start, normalized chunk units
};

// Optimizes latent codes so G(z) matches the available joints of `x` (exactly
// F frames, model topology). `stream` decorrelates prior starts across chunks.
ChunkResult invert_chunk(const PoseSequence& x, const Model& model, const InferConfig& cfg,
                         std::uint64_t stream = 0);

struct InpaintResult {
  PoseSequence output;  // full topology, full mask, input length
  std::vector<Window> windows;
  std::vector<double> chunk_losses;
  std::vector<std::size_t> selected_starts;
  std::vector<SimilarityTransform2D> alignments;
  std::vector<std::size_t> frame_chunk;  // chunk each output frame came from
  bool padded = false;                   // input was shorter than F
  double masked_mpjpe = 0;               // output vs input on available joints
};

InpaintResult stitch(const PoseSequence& x, const Model& model, const InferConfig& cfg);

// Embeds a reduced-topology sequence into the model's topology and stitches.
InpaintResult upsample(const PoseSequence& x, const SkeletonTopology& reduced, const Model& model,
                       const InferConfig& cfg);

nlohmann::json to_json(const InpaintResult& r);

}  // namespace jumps
