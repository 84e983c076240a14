#include "jumps/infer/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jumps/core/alignment.hpp"
#include "jumps/core/downsample.hpp"
#include "jumps/error.hpp"
#include "jumps/metrics/metrics.hpp"
#include "jumps/net/grid_ops.hpp"
#include "jumps/util/parallel.hpp"

namespace jumps {

void validate(const InferConfig& cfg) {
  if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (cfg.starts < 1) throw ConfigError("starts must be >= 1");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  validate(cfg.adam, false);
  validate(cfg.weights);
}

nlohmann::json to_json(const InferConfig& cfg) {
  return {{"iterations", cfg.iterations},
          {"optimizer", to_json(cfg.adam)},
          {"weights",
           {{"gamma_p", cfg.weights.gamma_p}, {"gamma_s", cfg.weights.gamma_s}, {"gamma_d", cfg.weights.gamma_d}}},
          {"starts", cfg.starts},
          {"encoder_init", cfg.encoder_init},
          {"overlap", cfg.overlap},
          {"procrustes", cfg.procrustes},
          {"seed", cfg.seed},
          {"workers", cfg.workers}};
}

InferConfig infer_config_from_json(const nlohmann::json& j, InferConfig cfg) {
  try {
    cfg.iterations = j.value("iterations", cfg.iterations);
    if (j.contains("optimizer")) cfg.adam = adam_config_from_json(j.at("optimizer"), cfg.adam);
    if (j.contains("weights")) cfg.weights = loss_weights_from_json(j.at("weights"), cfg.weights);
    cfg.starts = j.value("starts", cfg.starts);
    cfg.encoder_init = j.value("encoder_init", cfg.encoder_init);
    cfg.overlap = j.value("overlap", cfg.overlap);
    cfg.procrustes = j.value("procrustes", cfg.procrustes);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.workers = j.value("workers", cfg.workers);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("infer config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

GridTensor zero_fill(const PoseSequence& x, const SkeletonTopology& topo) {
  if (x.mask().none()) throw DataError("no available joints to fill from");
  Vec2 sum;
  std::size_t n = 0;
  for (std::size_t f = 0; f < x.frames(); ++f) {
    for (std::size_t j = 0; j < x.joints(); ++j) {
      if (x.available(f, j)) {
        sum += x.at(f, j);
        ++n;
      }
    }
  }
  const Vec2 centroid = (1.0 / static_cast<double>(n)) * sum;
  PoseSequence filled = x;
  for (std::size_t f = 0; f < x.frames(); ++f) {
    for (std::size_t j = 0; j < x.joints(); ++j) {
      if (!x.available(f, j)) filled.at(f, j) = centroid;
    }
  }
  filled.mask() = JointMask(x.frames(), x.joints(), true);
  return encode_grid(filled, topo);
}

void ensure_eval(const Model& model) {
  auto e = model.encoder;
  auto g = model.generator;
  auto d = model.discriminator;
  if (e->is_training()) e->eval();
  if (g->is_training()) g->eval();
  if (d->is_training()) d->eval();
}

namespace {

// Aligns each start's output onto the target on the available joints. The
// transforms are constants for autograd.
struct Alignment {
  torch::Tensor linear;  // S x 2 x 2
  torch::Tensor offset;  // S x 2
  std::vector<SimilarityTransform2D> transforms;
};

Alignment solve_alignment(const torch::Tensor& x_hat, const PoseSequence& target, bool enabled) {
  const int64_t s = x_hat.size(0);
  Alignment a;
  a.transforms.resize(static_cast<std::size_t>(s));
  if (enabled) {
    const auto detached = x_hat.detach();
    for (int64_t i = 0; i < s; ++i) {
      try {
        a.transforms[i] = procrustes_align(sequence_from_joints(detached[i]), target, target.mask());
      } catch (const DataError&) {
        a.transforms[i] = SimilarityTransform2D{};  // degenerate: identity
      }
    }
  }
  auto lin = torch::empty({s, 2, 2}, torch::kFloat64);
  auto off = torch::empty({s, 2}, torch::kFloat64);
  auto l = lin.accessor<double, 3>();
  auto o = off.accessor<double, 2>();
  for (int64_t i = 0; i < s; ++i) {
    const auto& t = a.transforms[i];
    l[i][0][0] = t.scale * t.rotation.a;
    l[i][0][1] = t.scale * t.rotation.b;
    l[i][1][0] = t.scale * t.rotation.c;
    l[i][1][1] = t.scale * t.rotation.d;
    o[i][0] = t.translation.x;
    o[i][1] = t.translation.y;
  }
  a.linear = lin.to(x_hat.dtype());
  a.offset = off.to(x_hat.dtype());
  return a;
}

torch::Tensor apply_alignment(const torch::Tensor& x_hat, const Alignment& a) {
  return torch::einsum("sfjk,slk->sfjl", {x_hat, a.linear}) + a.offset.view({-1, 1, 1, 2});
}

std::vector<double> to_vector(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat64).contiguous();
  return {c.data_ptr<double>(), c.data_ptr<double>() + c.numel()};
}

}  // namespace

ChunkResult invert_chunk(const PoseSequence& x, const Model& model, const InferConfig& cfg, std::uint64_t stream) {
  validate(cfg);
  if (!model.loaded()) throw DataError("model is not loaded");
  const auto& topo = model.topology;
  const int64_t frames = model.config.frames, zdim = model.config.latent_dim;
  if (static_cast<int64_t>(x.frames()) != frames) {
    throw DataError("chunk has " + std::to_string(x.frames()) + " frames, model expects " + std::to_string(frames));
  }
  if (x.joints() != topo.joint_count()) throw DataError("chunk does not match the model topology");
  if (x.mask().none()) throw DataError("chunk has no available joints");
  ensure_eval(model);

  // Normalize by the available joints; `to_source` maps back.
  PoseSequence local = x;
  local.norm = AffineTransform2D::identity();
  const PoseSequence xn = normalize(local);
  const AffineTransform2D to_source = xn.norm;

  const auto opts = model.options();
  const GridLayout layout(topo);
  const auto target = joints_tensor(xn, opts).unsqueeze(0);
  const auto mask = mask_tensor(xn.mask(), opts);
  auto encoder = model.encoder;
  auto generator = model.generator;
  auto discriminator = model.discriminator;
  const Critic critic = [&](const torch::Tensor& g) { return discriminator->forward(g); };

  // Starts.
  const int64_t starts = cfg.starts;
  torch::Tensor z;
  {
    torch::NoGradGuard no_grad;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(derive_seed(cfg.seed, 0x1a7e, stream));
    z = torch::randn({starts, zdim}, gen, opts);
    if (cfg.encoder_init) {
      const auto grid = to_tensor(zero_fill(xn, topo), opts).unsqueeze(0);
      z[0] = encoder->forward(grid)[0];
    }
  }
  z.requires_grad_(true);
  torch::optim::Adam opt({z}, torch::optim::AdamOptions(cfg.adam.lr)
                                  .betas({cfg.adam.beta1, cfg.adam.beta2})
                                  .eps(cfg.adam.eps));

  ChunkResult out;
  out.traces.resize(static_cast<std::size_t>(starts));
  auto evaluate = [&](const torch::Tensor& zz, Alignment& align) {
    const auto x_hat = layout.joints_from_grid(generator->forward(zz));
    align = solve_alignment(x_hat, xn, cfg.procrustes);
    const auto aligned = apply_alignment(x_hat, align);
    return std::make_pair(aligned, inpainting_loss(target, mask, aligned, critic, layout, cfg.weights));
  };

  for (int64_t it = 0; it < cfg.iterations; ++it) {
    Alignment align;
    auto [aligned, terms] = evaluate(z, align);
    const auto ctx = to_vector(terms.contextual), tot = to_vector(terms.total);
    for (int64_t s = 0; s < starts; ++s) {
      if (!std::isfinite(tot[s])) throw NumericalError("non-finite inpainting loss at iteration " + std::to_string(it));
      out.traces[s].contextual.push_back(ctx[s]);
      out.traces[s].total.push_back(tot[s]);
    }
    // Starts are independent: the summed loss gives each its own gradient.
    const auto grad = torch::autograd::grad({terms.total.sum()}, {z})[0];
    z.mutable_grad() = grad;
    opt.step();
  }

  torch::NoGradGuard no_grad;
  Alignment align;
  auto [aligned, terms] = evaluate(z, align);
  out.start_losses = to_vector(terms.total);
  out.start_contextual = to_vector(terms.contextual);
  for (double v : out.start_losses) {
    if (!std::isfinite(v)) throw NumericalError("non-finite final inpainting loss");
  }
  out.selected = static_cast<std::size_t>(
      std::min_element(out.start_losses.begin(), out.start_losses.end()) - out.start_losses.begin());
  out.loss = out.start_losses[out.selected];
  out.contextual = out.start_contextual[out.selected];
  out.alignment = align.transforms[out.selected];
  out.z = z.detach()[static_cast<int64_t>(out.selected)].unsqueeze(0).clone();
  out.output = sequence_from_joints(aligned[static_cast<int64_t>(out.selected)]).transformed(to_source);
  out.output.norm = x.norm;
  out.output.fps = x.fps;
  return out;
}

namespace {

// gamma_p * MPJPE + gamma_s * MPJVE of `cand` at frame f over the input's
// available joints, velocities taken into f. Without a previous frame only the
// position term counts.
double frame_loss(const PoseSequence& cand, std::size_t cf, const PoseSequence& x, std::size_t f,
                  const LossWeights& w, bool velocity) {
  double pos = 0, vel = 0;
  std::size_t np = 0, nv = 0;
  for (std::size_t j = 0; j < x.joints(); ++j) {
    if (!x.available(f, j)) continue;
    pos += norm(cand.at(cf, j) - x.at(f, j));
    ++np;
    if (velocity && x.available(f - 1, j)) {
      vel += norm((cand.at(cf, j) - cand.at(cf - 1, j)) - (x.at(f, j) - x.at(f - 1, j)));
      ++nv;
    }
  }
  double loss = np ? w.gamma_p * pos / static_cast<double>(np) : 0.0;
  if (nv) loss += w.gamma_s * vel / static_cast<double>(nv);
  return loss;
}

}  // namespace

InpaintResult stitch(const PoseSequence& x, const Model& model, const InferConfig& cfg) {
  validate(cfg);
  if (!model.loaded()) throw DataError("model is not loaded");
  if (x.joints() != model.topology.joint_count()) throw DataError("sequence does not match the model topology");
  if (x.frames() == 0) throw DataError("empty sequence");
  if (x.mask().none()) throw DataError("sequence has no available joints");
  ensure_eval(model);
  const std::size_t F = static_cast<std::size_t>(model.config.frames);

  InpaintResult r;
  PoseSequence input = x;
  if (x.frames() < F) {
    // Edge repetition up to one chunk.
    input = PoseSequence(F, x.joints());
    for (std::size_t f = 0; f < F; ++f) {
      const std::size_t src = std::min(f, x.frames() - 1);
      for (std::size_t j = 0; j < x.joints(); ++j) {
        input.at(f, j) = x.at(src, j);
        input.mask().set(f, j, x.available(src, j));
      }
    }
    input.norm = x.norm;
    input.fps = x.fps;
    r.padded = true;
  }

  r.windows = chunk_windows(input.frames(), F, cfg.overlap ? F / 2 : F);
  const auto chunks = parallel_map(r.windows.size(), cfg.workers, [&](std::size_t i) {
    const auto piece = input.slice(r.windows[i].begin, F);
    if (piece.mask().none()) throw DataError("chunk " + std::to_string(i) + " has no available joints");
    return invert_chunk(piece, model, cfg, i);
  });
  for (const auto& c : chunks) {
    r.chunk_losses.push_back(c.loss);
    r.selected_starts.push_back(c.selected);
    r.alignments.push_back(c.alignment);
  }

  const std::size_t length = x.frames();
  r.output = PoseSequence(length, x.joints());
  r.output.norm = x.norm;
  r.output.fps = x.fps;
  r.frame_chunk.resize(length);
  for (std::size_t f = 0; f < length; ++f) {
    std::vector<std::size_t> cands;
    for (std::size_t i = 0; i < r.windows.size(); ++i) {
      if (r.windows[i].begin <= f && f < r.windows[i].end) cands.push_back(i);
    }
    std::size_t best = cands.front();
    if (cands.size() > 1) {
      bool velocity = f > 0;
      for (std::size_t i : cands) velocity = velocity && f > r.windows[i].begin;
      double best_loss = std::numeric_limits<double>::infinity();
      for (std::size_t i : cands) {
        const double l = frame_loss(chunks[i].output, f - r.windows[i].begin, input, f, cfg.weights, velocity);
        if (l < best_loss) {
          best_loss = l;
          best = i;
        }
      }
    }
    r.frame_chunk[f] = best;
    for (std::size_t j = 0; j < x.joints(); ++j) {
      r.output.at(f, j) = chunks[best].output.at(f - r.windows[best].begin, j);
    }
  }
  if (!r.output.finite_where_available()) throw NumericalError("non-finite inpainting output");
  r.masked_mpjpe = mpjpe(r.output, x, x.mask());
  return r;
}

InpaintResult upsample(const PoseSequence& x, const SkeletonTopology& reduced, const Model& model,
                       const InferConfig& cfg) {
  return stitch(embed(x, reduced, model.topology), model, cfg);
}

nlohmann::json to_json(const InpaintResult& r) {
  nlohmann::json chunks = nlohmann::json::array();
  for (std::size_t i = 0; i < r.windows.size(); ++i) {
    const auto& t = r.alignments[i];
    chunks.push_back({{"begin", r.windows[i].begin},
                      {"end", r.windows[i].end},
                      {"loss", r.chunk_losses[i]},
                      {"selected_start", r.selected_starts[i]},
                      {"alignment",
                       {{"scale", t.scale}, {"angle", t.angle()}, {"translation", {t.translation.x, t.translation.y}}}}});
  }
  return {{"frames", r.output.frames()},
          {"padded", r.padded},
          {"masked_mpjpe", r.masked_mpjpe},
          {"chunks", chunks},
          {"frame_chunk", r.frame_chunk}};
}

}  // namespace jumps
