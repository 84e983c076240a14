#include "jumps/cli/dispatch.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "jumps/cli/plot.hpp"
#include "jumps/core/pose_io.hpp"
#include "jumps/data/dataset.hpp"
#include "jumps/error.hpp"
#include "jumps/eval/experiments.hpp"
#include "jumps/infer/inpaint.hpp"
#include "jumps/net/checkpoint.hpp"
#include "jumps/train/trainer.hpp"
#include "jumps/util/parallel.hpp"

namespace fs = std::filesystem;

namespace jumps {

namespace {

nlohmann::json read_config(const fs::path& path) {
  const auto text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Variant parse_variant(const std::string& s) {
  if (s == "full") return Variant::Full;
  if (s == "no-overlap") return Variant::NoOverlap;
  if (s == "no-encoder-init") return Variant::NoEncoderInit;
  if (s == "no-procrustes") return Variant::NoProcrustes;
  throw ConfigError("unknown variant '" + s + "' (full, no-overlap, no-encoder-init, no-procrustes)");
}

// Pose files of a directory, sorted by name.
std::vector<fs::path> pose_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("directory '" + dir.string() + "' not found");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t workers = default_workers();
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--workers", c.workers, "Parallel workers (1 = serial reference)")->check(CLI::PositiveNumber);
}

struct InferFlags {
  std::optional<fs::path> config;
  bool no_overlap = false, no_procrustes = false, no_encoder_init = false;
  std::optional<std::int64_t> starts, iterations;
};

void add_infer_flags(CLI::App* app, InferFlags& f) {
  app->add_option("--config", f.config, "Inference config file");
  app->add_flag("--no-overlap", f.no_overlap, "Chunk without overlap");
  app->add_flag("--no-procrustes", f.no_procrustes, "Disable per-step alignment");
  app->add_flag("--no-encoder-init", f.no_encoder_init, "Start every optimization from the prior");
  app->add_option("--starts", f.starts, "Parallel latent starts");
  app->add_option("--iters", f.iterations, "Optimization iterations");
}

InferConfig infer_config(const InferFlags& f, const Common& c) {
  InferConfig cfg;
  if (f.config) cfg = infer_config_from_json(read_config(*f.config));
  if (f.no_overlap) cfg.overlap = false;
  if (f.no_procrustes) cfg.procrustes = false;
  if (f.no_encoder_init) cfg.encoder_init = false;
  if (f.starts) cfg.starts = *f.starts;
  if (f.iterations) cfg.iterations = *f.iterations;
  if (c.seed) cfg.seed = *c.seed;
  cfg.workers = c.workers;
  validate(cfg);
  return cfg;
}

Model load_model(const fs::path& dir) {
  auto ck = load_checkpoint(dir);
  return std::move(ck.model);
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  Common common;
  fs::path spec, out;
  std::optional<std::size_t> count;
};

int run_synth(const SynthArgs& a) {
  auto j = read_config(a.spec);
  auto spec = dataset_spec_from_json(j);
  if (a.common.seed) spec.random_seed = *a.common.seed;
  if (a.count) spec.count = *a.count;
  const auto ds = build_dataset(spec, a.common.workers);
  write_dataset(a.out, ds, to_json(spec), spec.random_seed);
  std::cout << "wrote " << ds.sequences.size() << " sequences to " << a.out.string() << "\n";
  return 0;
}

struct TrainArgs {
  Common common;
  fs::path config, out;
  std::optional<fs::path> data, resume;
  std::optional<std::int64_t> steps;
};

int run_train(const TrainArgs& a) {
  auto j = read_config(a.config);
  auto cfg = train_config_from_json(j);
  // A relative dataset in a config file is relative to that file.
  fs::path data = a.data ? *a.data : fs::path(cfg.dataset);
  if (!a.data && data.is_relative() && !data.empty()) data = a.config.parent_path() / data;
  if (a.steps) cfg.max_steps = *a.steps;
  if (a.common.seed) cfg.seed = *a.common.seed;
  validate(cfg);
  if (data.empty()) throw ConfigError("no dataset given (config 'dataset' or --data)");
  const auto ds = read_dataset(data);
  fs::create_directories(a.out);
  // Recorded relative to the run so copies of the run stay comparable.
  cfg.dataset = fs::absolute(data).lexically_normal().lexically_relative(fs::absolute(a.out).lexically_normal()).string();
  write_text_file(a.out / "config.json", to_json(cfg).dump(2) + "\n");
  FitOptions opts;
  opts.out = a.out;
  opts.resume = a.resume;
  const std::int64_t every = std::max<std::int64_t>(1, cfg.eval_every);
  opts.on_step = [&](std::int64_t step, const StepLosses& l) {
    if (step % every == 0) {
      std::cerr << "step " << step << "  L_D " << l.critic << "  L_G " << l.generator << "  L_Rec "
                << l.reconstruction << "\n";
    }
  };
  const auto res = fit(cfg, ds.topology, ds.sequences, opts);
  std::cout << "trained " << res.steps << " steps, held-out MPJPE " << res.heldout_mpjpe << ", checkpoint "
            << res.checkpoint.string() << "\n";
  return 0;
}

struct InferArgs {
  Common common;
  InferFlags flags;
  fs::path model, in, out;
  std::optional<fs::path> report;
};

int run_infer(const InferArgs& a) {
  const auto input = read_pose_file(a.in);
  const auto cfg = infer_config(a.flags, a.common);
  const auto model = load_model(a.model);
  InpaintResult r;
  if (input.topology == model.topology) {
    r = stitch(input.sequence, model, cfg);
  } else {
    r = upsample(input.sequence, input.topology, model, cfg);
  }
  write_pose_file(a.out, r.output, model.topology);
  if (a.report) write_text_file(*a.report, to_json(r).dump(2) + "\n");
  std::cout << "wrote " << a.out.string() << " (" << r.output.frames() << " frames, masked MPJPE "
            << r.masked_mpjpe << ")\n";
  return 0;
}

struct EvalArgs {
  Common common;
  InferFlags flags;
  fs::path model, out;
  fs::path data, pred, gt;
  std::string variants = "full,no-overlap,no-encoder-init,no-procrustes";
  std::optional<std::size_t> limit;
  double head_factor = 1.0;
};

EvalOptions eval_options(const EvalArgs& a) {
  EvalOptions o;
  o.workers = a.common.workers;
  o.head_factor = a.head_factor;
  o.variants.clear();
  for (const auto& v : split_list(a.variants)) o.variants.push_back(parse_variant(v));
  if (o.variants.empty()) throw ConfigError("no variants selected");
  return o;
}

void print_rows(const EvalReport& r) { std::cout << rows_csv(r); }

int run_eval_upsampling(const EvalArgs& a) {
  const auto opts = eval_options(a);
  auto ds = read_dataset(a.data);
  if (a.limit && *a.limit < ds.sequences.size()) ds.sequences.resize(*a.limit);
  const auto cfg = infer_config(a.flags, a.common);
  const auto model = load_model(a.model);
  if (!(ds.topology == model.topology)) throw DataError("dataset topology does not match the model");
  const auto report = eval_upsampling(ds.sequences, reduced_topology(), model, cfg, opts);
  write_report(a.out, report, model.topology);
  print_rows(report);
  return 0;
}

int run_eval_hpe(const EvalArgs& a) {
  const auto opts = eval_options(a);
  std::vector<PoseSequence> preds, gts;
  std::optional<SkeletonTopology> reduced;
  std::optional<SkeletonTopology> full;
  for (const auto& p : pose_files(a.pred)) {
    const auto gt_path = a.gt / p.filename();
    if (!fs::exists(gt_path)) throw DataError("unpaired prediction '" + p.string() + "': no " + gt_path.string());
    auto pf = read_pose_file(p);
    auto gf = read_pose_file(gt_path);
    if (reduced && !(pf.topology == *reduced)) throw DataError("predictions mix topologies");
    if (full && !(gf.topology == *full)) throw DataError("ground truth mixes topologies");
    reduced = pf.topology;
    full = gf.topology;
    preds.push_back(std::move(pf.sequence));
    gts.push_back(std::move(gf.sequence));
    if (a.limit && preds.size() == *a.limit) break;
  }
  if (preds.empty()) throw DataError("no prediction files in '" + a.pred.string() + "'");
  const auto cfg = infer_config(a.flags, a.common);
  const auto model = load_model(a.model);
  if (!(*full == model.topology)) throw DataError("ground truth topology does not match the model");
  const auto report = eval_hpe(preds, gts, *reduced, model, cfg, opts);
  write_report(a.out, report, model.topology);
  print_rows(report);
  return 0;
}

struct PlotArgs {
  Common common;
  std::optional<fs::path> report;
  std::vector<fs::path> poses;
  std::vector<std::string> labels;
  std::vector<std::size_t> frames;
  fs::path out;
};

int run_plot(const PlotArgs& a) {
  if (!a.report && a.poses.empty()) throw ConfigError("plot needs --report or --pose");
  fs::create_directories(a.out);
  if (a.report) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(*a.report));
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError("malformed report '" + a.report->string() + "': " + e.what());
    }
    write_text_file(a.out / "pckh.svg", pckh_svg(j));
  }
  if (!a.poses.empty()) {
    std::vector<PlotLayer> layers;
    for (std::size_t i = 0; i < a.poses.size(); ++i) {
      auto pf = read_pose_file(a.poses[i]);
      const std::string label = i < a.labels.size() ? a.labels[i] : a.poses[i].stem().string();
      layers.push_back({label, std::move(pf.sequence), std::move(pf.topology)});
    }
    write_text_file(a.out / "skeleton.svg", skeleton_svg(layers, a.frames));
  }
  std::cout << "wrote plots to " << a.out.string() << "\n";
  return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  CLI::App app{"Joint upsampling of 2D pose sequences with a learned motion prior", "jumps"};
  app.require_subcommand(1);
  app.fallthrough(false);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth-data", "Build a synthetic 2D pose dataset");
  s->add_option("--spec", synth.spec, "Dataset spec file")->required();
  s->add_option("--out", synth.out, "Output dataset directory")->required();
  s->add_option("--count", synth.count, "Maximum number of sequences");
  add_common(s, synth.common);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the encoder, generator and critic");
  t->add_option("--config", train.config, "Training config file")->required();
  t->add_option("--out", train.out, "Output directory")->required();
  t->add_option("--data", train.data, "Dataset directory (overrides the config)");
  t->add_option("--steps", train.steps, "Stop after this many steps");
  t->add_option("--resume", train.resume, "Checkpoint to resume from");
  add_common(t, train.common);

  InferArgs infer;
  auto* i = app.add_subcommand("infer", "Upsample or inpaint a pose file");
  i->add_option("--model", infer.model, "Checkpoint directory")->required();
  i->add_option("--in", infer.in, "Input pose file")->required();
  i->add_option("--out", infer.out, "Output pose file")->required();
  i->add_option("--report", infer.report, "Optional JSON summary of the chunks");
  add_infer_flags(i, infer.flags);
  add_common(i, infer.common);

  EvalArgs up;
  auto* u = app.add_subcommand("eval-upsampling", "Score 12 -> 28 joint upsampling on a dataset");
  u->add_option("--model", up.model, "Checkpoint directory")->required();
  u->add_option("--data", up.data, "Ground-truth dataset directory")->required();
  u->add_option("--out", up.out, "Report directory")->required();
  u->add_option("--variants", up.variants, "Comma list: full,no-overlap,no-encoder-init,no-procrustes");
  u->add_option("--limit", up.limit, "Use only the first N sequences");
  u->add_option("--head-factor", up.head_factor, "Head size factor")->check(CLI::PositiveNumber);
  add_infer_flags(u, up.flags);
  add_common(u, up.common);

  EvalArgs hpe;
  hpe.variants = "full";
  auto* h = app.add_subcommand("eval-hpe", "Post-process external 12-joint estimates and score them");
  h->add_option("--model", hpe.model, "Checkpoint directory")->required();
  h->add_option("--pred", hpe.pred, "Directory of 12-joint estimate pose files")->required();
  h->add_option("--gt", hpe.gt, "Directory of ground-truth pose files with matching names")->required();
  h->add_option("--out", hpe.out, "Report directory")->required();
  h->add_option("--limit", hpe.limit, "Use only the first N pairs");
  h->add_option("--head-factor", hpe.head_factor, "Head size factor")->check(CLI::PositiveNumber);
  add_infer_flags(h, hpe.flags);
  add_common(h, hpe.common);

  PlotArgs plot;
  auto* p = app.add_subcommand("plot", "Render skeleton overlays and PCKh curves as SVG");
  p->add_option("--report", plot.report, "report.json from an evaluation");
  p->add_option("--pose", plot.poses, "Pose files to overlay (repeatable)");
  p->add_option("--label", plot.labels, "Legend labels, one per --pose");
  p->add_option("--frames", plot.frames, "Frames to draw")->delimiter(',');
  p->add_option("--out", plot.out, "Output directory")->required();
  add_common(p, plot.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  torch::set_num_threads(1);
  try {
    if (s->parsed()) return run_synth(synth);
    if (t->parsed()) return run_train(train);
    if (i->parsed()) return run_infer(infer);
    if (u->parsed()) return run_eval_upsampling(up);
    if (h->parsed()) return run_eval_hpe(hpe);
    if (p->parsed()) return run_plot(plot);
  } catch (const ConfigError& e) {
    std::cerr << "jumps: configuration error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "jumps: numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "jumps: error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace jumps
