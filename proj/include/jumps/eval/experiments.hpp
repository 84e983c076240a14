#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jumps/infer/inpaint.hpp"
#include "jumps/metrics/metrics.hpp"

namespace jumps {

enum class Variant { Full, NoOverlap, NoEncoderInit, NoProcrustes };

const std::vector<Variant>& all_variants();
std::string variant_name(Variant v);
InferConfig variant_config(InferConfig base, Variant v);

struct ScoreRow {
  std::string method;
  std::string joints;  // "missing", "all" or "input"
  double pckh_01 = 0, pckh_05 = 0, pckh_10 = 0, auc = 0;
  std::array<double, kAucThresholds> curve{};
  std::size_t evaluated = 0;
  std::size_t frames_excluded = 0;
};

ScoreRow score(const std::string& method, const std::string& joints, const ErrorCollection& errors);

struct MethodErrors {
  std::string method;
  std::string joints;
  ErrorCollection errors;
};

struct EvalReport {
  std::string kind;  // "upsampling" or "hpe"
  std::vector<ScoreRow> rows;
  std::vector<MethodErrors> errors;
  std::vector<std::vector<PoseSequence>> outputs;  // per method, per sequence
  std::vector<std::string> methods;
  nlohmann::json settings = nlohmann::json::object();
};

struct EvalOptions {
  std::size_t workers = 1;  // over sequences
  double head_factor = 1.0;
  std::vector<Variant> variants = all_variants();
};

// Full-topology sequence restricted and re-expanded to the model's topology.
using Upsampler = std::function<PoseSequence(const PoseSequence& reduced_input, std::size_t index)>;

// Downsamples every ground-truth sequence, runs `up` and scores both the
// joints absent from the reduced input and all joints.
void eval_upsampler(EvalReport& report, const std::string& method, const std::vector<PoseSequence>& gt,
                    const SkeletonTopology& full, const SkeletonTopology& reduced, const Upsampler& up,
                    const EvalOptions& opts);

EvalReport eval_upsampling(const std::vector<PoseSequence>& gt, const SkeletonTopology& reduced, const Model& model,
                           const InferConfig& cfg, const EvalOptions& opts);

// Externally estimated reduced-topology poses against full ground truth. The
// baseline row scores the raw input on its own joints.
EvalReport eval_hpe(const std::vector<PoseSequence>& predictions, const std::vector<PoseSequence>& gt,
                    const SkeletonTopology& reduced, const Model& model, const InferConfig& cfg,
                    const EvalOptions& opts);

// MPJVE on the frames either side of every multiple of `chunk` (velocity into
// the frame), over joints available in gt.
double boundary_mpjve(const PoseSequence& pred, const PoseSequence& gt, std::size_t chunk);

nlohmann::json to_json(const EvalReport& r);
std::string rows_csv(const EvalReport& r);
std::string errors_csv(const EvalReport& r, const SkeletonTopology& topo);
// report.json, report.csv and errors.csv under `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& r, const SkeletonTopology& topo);

}  // namespace jumps
