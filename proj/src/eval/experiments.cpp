#include "jumps/eval/experiments.hpp"

#include <cstdio>

#include "jumps/core/downsample.hpp"
#include "jumps/core/pose_io.hpp"
#include "jumps/error.hpp"
#include "jumps/util/parallel.hpp"

namespace jumps {

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::Full, Variant::NoOverlap, Variant::NoEncoderInit,
                                      Variant::NoProcrustes};
  return v;
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoOverlap: return "w/o overlap";
    case Variant::NoEncoderInit: return "w/o encoder-init";
    case Variant::NoProcrustes: return "w/o P.A.";
  }
  return "?";
}

InferConfig variant_config(InferConfig base, Variant v) {
  switch (v) {
    case Variant::Full: break;
    case Variant::NoOverlap: base.overlap = false; break;
    case Variant::NoEncoderInit: base.encoder_init = false; break;
    case Variant::NoProcrustes: base.procrustes = false; break;
  }
  return base;
}

ScoreRow score(const std::string& method, const std::string& joints, const ErrorCollection& c) {
  ScoreRow r;
  r.method = method;
  r.joints = joints;
  r.curve = pckh_curve(c.errors);
  r.pckh_01 = pckh(c.errors, 0.1);
  r.pckh_05 = pckh(c.errors, 0.5);
  r.pckh_10 = pckh(c.errors, 1.0);
  r.auc = auc(c.errors);
  r.evaluated = c.errors.size();
  r.frames_excluded = c.frames_excluded;
  return r;
}

namespace {

JointMask missing_mask(std::size_t frames, const SkeletonTopology& full, const SkeletonTopology& reduced) {
  JointMask m(frames, full.joint_count(), true);
  for (JointId id : reduced.downsample_map->to_target) {
    for (std::size_t f = 0; f < frames; ++f) m.set(f, id, false);
  }
  return m;
}

// Worker count is left out so reports compare across machines.
nlohmann::json settings_json(const InferConfig& cfg) {
  auto j = to_json(cfg);
  j.erase("workers");
  return j;
}

void add_rows(EvalReport& report, const std::string& method, std::vector<PoseSequence> outputs,
              std::vector<MethodErrors> groups) {
  for (auto& g : groups) {
    report.rows.push_back(score(method, g.joints, g.errors));
    report.errors.push_back(std::move(g));
  }
  report.methods.push_back(method);
  report.outputs.push_back(std::move(outputs));
}

}  // namespace

void eval_upsampler(EvalReport& report, const std::string& method, const std::vector<PoseSequence>& gt,
                    const SkeletonTopology& full, const SkeletonTopology& reduced, const Upsampler& up,
                    const EvalOptions& opts) {
  if (gt.empty()) throw DataError("no ground-truth sequences to evaluate");
  restrict_to(gt.front(), full, reduced);  // validates the mapping up front
  auto outputs = parallel_map(gt.size(), opts.workers, [&](std::size_t i) {
    auto out = up(restrict_to(gt[i], full, reduced), i);
    if (out.frames() != gt[i].frames() || out.joints() != full.joint_count()) {
      throw DataError("upsampler output does not match ground truth " + std::to_string(i));
    }
    return out;
  });
  MethodErrors missing{method, "missing", {}}, all{method, "all", {}};
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto restrict = missing_mask(gt[i].frames(), full, reduced);
    collect_errors(missing.errors, outputs[i], gt[i], full, i, &restrict, opts.head_factor);
    collect_errors(all.errors, outputs[i], gt[i], full, i, nullptr, opts.head_factor);
  }
  add_rows(report, method, std::move(outputs), {std::move(missing), std::move(all)});
}

EvalReport eval_upsampling(const std::vector<PoseSequence>& gt, const SkeletonTopology& reduced, const Model& model,
                           const InferConfig& cfg, const EvalOptions& opts) {
  if (!model.loaded()) throw DataError("model is not loaded");
  ensure_eval(model);
  EvalReport report;
  report.kind = "upsampling";
  report.settings = {{"infer", settings_json(cfg)}, {"sequences", gt.size()}, {"head_factor", opts.head_factor}};
  for (Variant v : opts.variants) {
    auto vc = variant_config(cfg, v);
    vc.workers = 1;
    eval_upsampler(
        report, variant_name(v), gt, model.topology, reduced,
        [&](const PoseSequence& x, std::size_t) { return upsample(x, reduced, model, vc).output; }, opts);
  }
  return report;
}

EvalReport eval_hpe(const std::vector<PoseSequence>& predictions, const std::vector<PoseSequence>& gt,
                    const SkeletonTopology& reduced, const Model& model, const InferConfig& cfg,
                    const EvalOptions& opts) {
  if (!model.loaded()) throw DataError("model is not loaded");
  if (predictions.size() != gt.size() || gt.empty()) {
    throw DataError("predictions and ground truth are unpaired (" + std::to_string(predictions.size()) + " vs " +
                    std::to_string(gt.size()) + ")");
  }
  ensure_eval(model);
  const auto& full = model.topology;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (predictions[i].frames() != gt[i].frames() || predictions[i].joints() != reduced.joint_count() ||
        gt[i].joints() != full.joint_count()) {
      throw DataError("prediction " + std::to_string(i) + " does not pair with its ground truth");
    }
  }
  EvalReport report;
  report.kind = "hpe";
  report.settings = {{"infer", settings_json(cfg)}, {"sequences", gt.size()}, {"head_factor", opts.head_factor}};

  // Raw estimates on their own joints.
  {
    std::vector<PoseSequence> embedded;
    MethodErrors base{"baseline", "input", {}};
    for (std::size_t i = 0; i < gt.size(); ++i) {
      embedded.push_back(embed(predictions[i], reduced, full));
      const auto own = embed(restrict_to(gt[i], full, reduced), reduced, full).mask();
      collect_errors(base.errors, embedded.back(), gt[i], full, i, &own, opts.head_factor);
    }
    add_rows(report, "baseline", std::move(embedded), {std::move(base)});
  }

  auto vc = cfg;
  vc.workers = 1;
  auto outputs = parallel_map(gt.size(), opts.workers,
                              [&](std::size_t i) { return upsample(predictions[i], reduced, model, vc).output; });
  MethodErrors all{"jumps", "all", {}}, missing{"jumps", "missing", {}};
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto restrict = missing_mask(gt[i].frames(), full, reduced);
    collect_errors(all.errors, outputs[i], gt[i], full, i, nullptr, opts.head_factor);
    collect_errors(missing.errors, outputs[i], gt[i], full, i, &restrict, opts.head_factor);
  }
  add_rows(report, "jumps", std::move(outputs), {std::move(all), std::move(missing)});
  return report;
}

double boundary_mpjve(const PoseSequence& pred, const PoseSequence& gt, std::size_t chunk) {
  require_same_shape(pred, gt);
  if (chunk == 0) throw ConfigError("chunk length must be positive");
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t b = chunk; b < gt.frames(); b += chunk) {
    for (std::size_t f : {b - 1, b}) {
      if (f == 0) continue;
      for (std::size_t j = 0; j < gt.joints(); ++j) {
        if (!gt.available(f, j) || !gt.available(f - 1, j)) continue;
        sum += norm((pred.at(f, j) - pred.at(f - 1, j)) - (gt.at(f, j) - gt.at(f - 1, j)));
        ++n;
      }
    }
  }
  if (n == 0) throw DataError("sequence has no chunk boundary to score");
  return sum / static_cast<double>(n);
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"method", row.method},
                    {"joints", row.joints},
                    {"pckh@0.1", row.pckh_01},
                    {"pckh@0.5", row.pckh_05},
                    {"pckh@1.0", row.pckh_10},
                    {"auc", row.auc},
                    {"curve", row.curve},
                    {"evaluated", row.evaluated},
                    {"frames_excluded", row.frames_excluded}});
  }
  return {{"format", "jumps-report"}, {"kind", r.kind}, {"settings", r.settings}, {"rows", rows}};
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string rows_csv(const EvalReport& r) {
  std::string out = "method,joints,pckh@0.1,pckh@0.5,pckh@1.0,auc\n";
  for (const auto& row : r.rows) {
    out += row.method + "," + row.joints + "," + num(row.pckh_01) + "," + num(row.pckh_05) + "," + num(row.pckh_10) +
           "," + num(row.auc) + "\n";
  }
  return out;
}

std::string errors_csv(const EvalReport& r, const SkeletonTopology& topo) {
  std::string out = "method,joints,sequence,frame,joint,joint_name,error,head_size\n";
  for (const auto& g : r.errors) {
    for (const auto& e : g.errors.errors) {
      out += g.method + "," + g.joints + "," + std::to_string(e.sequence) + "," + std::to_string(e.frame) + "," +
             std::to_string(e.joint) + "," + topo.joint_names.at(e.joint) + "," + num(e.error) + "," +
             num(e.head_size) + "\n";
    }
  }
  return out;
}

void write_report(const std::filesystem::path& dir, const EvalReport& r, const SkeletonTopology& topo) {
  std::filesystem::create_directories(dir);
  write_text_file(dir / "report.json", to_json(r).dump(2) + "\n");
  write_text_file(dir / "report.csv", rows_csv(r));
  write_text_file(dir / "errors.csv", errors_csv(r, topo));
}

}  // namespace jumps
