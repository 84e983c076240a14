#include "jumps/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <ATen/CPUGeneratorImpl.h>

#include "jumps/core/pose_io.hpp"
#include "jumps/error.hpp"
#include "jumps/util/parallel.hpp"

namespace jumps {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

void validate(const AdamConfig& a, bool allow_zero_lr) {
  if (!std::isfinite(a.lr) || a.lr < 0.0 || (!allow_zero_lr && a.lr == 0.0)) {
    throw ConfigError("learning rate must be positive");
  }
  if (!(a.beta1 >= 0.0 && a.beta1 < 1.0) || !(a.beta2 >= 0.0 && a.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(a.eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

nlohmann::json to_json(const AdamConfig& a) {
  return {{"lr", a.lr}, {"beta1", a.beta1}, {"beta2", a.beta2}, {"eps", a.eps}};
}

AdamConfig adam_config_from_json(const nlohmann::json& j, AdamConfig a) {
  a.lr = j.value("lr", a.lr);
  a.beta1 = j.value("beta1", a.beta1);
  a.beta2 = j.value("beta2", a.beta2);
  a.eps = j.value("eps", a.eps);
  return a;
}

void validate(const TrainConfig& cfg) {
  validate(cfg.network);
  validate(cfg.weights);
  for (const auto* a : {&cfg.adam_e, &cfg.adam_g, &cfg.adam_d}) validate(*a, false);
  if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
  if (cfg.batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (cfg.max_steps && *cfg.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (cfg.n_critic < 1) throw ConfigError("n_critic must be >= 1");
  if (cfg.checkpoint_every < 0 || cfg.eval_every < 0) throw ConfigError("cadences must be >= 0");
  if (cfg.heldout < 0) throw ConfigError("heldout must be >= 0");
}

nlohmann::json to_json(const TrainConfig& cfg) {
  nlohmann::json j{{"network", to_json(cfg.network)},
                   {"weights", to_json(cfg.weights)},
                   {"optimizer",
                    {{"encoder", to_json(cfg.adam_e)},
                     {"generator", to_json(cfg.adam_g)},
                     {"discriminator", to_json(cfg.adam_d)}}},
                   {"epochs", cfg.epochs},
                   {"batch_size", cfg.batch_size},
                   {"n_critic", cfg.n_critic},
                   {"seed", cfg.seed},
                   {"checkpoint_every", cfg.checkpoint_every},
                   {"eval_every", cfg.eval_every},
                   {"heldout", cfg.heldout},
                   {"dataset", cfg.dataset}};
  j["max_steps"] = cfg.max_steps ? nlohmann::json(*cfg.max_steps) : nlohmann::json(nullptr);
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  try {
    if (j.contains("network")) cfg.network = network_config_from_json(j.at("network"));
    if (j.contains("weights")) cfg.weights = loss_weights_from_json(j.at("weights"));
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      // A flat object applies to all three subnetworks.
      const AdamConfig shared = adam_config_from_json(o);
      cfg.adam_e = o.contains("encoder") ? adam_config_from_json(o.at("encoder"), shared) : shared;
      cfg.adam_g = o.contains("generator") ? adam_config_from_json(o.at("generator"), shared) : shared;
      cfg.adam_d = o.contains("discriminator") ? adam_config_from_json(o.at("discriminator"), shared) : shared;
    }
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    if (j.contains("max_steps") && !j.at("max_steps").is_null()) cfg.max_steps = j.at("max_steps").get<std::int64_t>();
    cfg.n_critic = j.value("n_critic", cfg.n_critic);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.heldout = j.value("heldout", cfg.heldout);
    cfg.dataset = j.value("dataset", cfg.dataset);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

TrainConfig desk_train_config() {
  TrainConfig cfg;
  cfg.network = desk_network_config();
  cfg.batch_size = 64;
  cfg.max_steps = 2000;
  cfg.heldout = 16;
  cfg.eval_every = 100;
  cfg.checkpoint_every = 500;
  // 2000 steps is far short of the full schedule.
  cfg.adam_e.lr = cfg.adam_g.lr = cfg.adam_d.lr = 5e-4;
  return cfg;
}

// ---------------------------------------------------------------------------
// Trainer

Split split_dataset(const std::vector<PoseSequence>& seqs, std::int64_t heldout, std::uint64_t seed) {
  if (heldout < 0 || heldout >= static_cast<std::int64_t>(seqs.size())) {
    throw DataError("held-out slice of " + std::to_string(heldout) + " leaves no training data (" +
                    std::to_string(seqs.size()) + " sequences)");
  }
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0x5911));
  std::shuffle(order.begin(), order.end(), rng);
  Split s;
  const std::size_t cut = seqs.size() - static_cast<std::size_t>(heldout);
  for (std::size_t i = 0; i < order.size(); ++i) (i < cut ? s.train : s.heldout).push_back(seqs[order[i]]);
  return s;
}

namespace {

void check_sequences(const std::vector<PoseSequence>& seqs, const NetworkConfig& net, const char* what) {
  for (const auto& s : seqs) {
    if (static_cast<int>(s.frames()) != net.frames) {
      throw DataError(std::string(what) + " sequence has " + std::to_string(s.frames()) + " frames, network expects " +
                      std::to_string(net.frames));
    }
    if (!s.mask().all()) throw DataError(std::string(what) + " sequences must be fully observed");
  }
}

torch::optim::AdamOptions adam_options(const AdamConfig& a) {
  return torch::optim::AdamOptions(a.lr).betas({a.beta1, a.beta2}).eps(a.eps);
}

// Freezes a module's parameters for the lifetime of the guard.
class FreezeGuard {
 public:
  explicit FreezeGuard(torch::nn::Module& m) : params_(m.parameters()) {
    for (auto& p : params_) p.requires_grad_(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.requires_grad_(true);
  }

 private:
  std::vector<torch::Tensor> params_;
};

double checked(const torch::Tensor& t, const char* name, std::int64_t step) {
  const double v = t.item<double>();
  if (!std::isfinite(v)) {
    throw NumericalError(std::string("non-finite ") + name + " at step " + std::to_string(step));
  }
  return v;
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, const SkeletonTopology& topo, std::vector<PoseSequence> train,
                 std::vector<PoseSequence> heldout)
    : cfg_(std::move(cfg)), layout_(topo) {
  validate(cfg_.network);
  validate(cfg_.weights);
  for (const auto* a : {&cfg_.adam_e, &cfg_.adam_g, &cfg_.adam_d}) validate(*a, true);
  if (cfg_.epochs < 1 || cfg_.batch_size < 2 || cfg_.n_critic < 1) throw ConfigError("invalid train config");
  if (train.size() < 2) throw DataError("training needs at least 2 sequences");
  check_sequences(train, cfg_.network, "training");
  check_sequences(heldout, cfg_.network, "held-out");

  model_ = make_model(cfg_.network, topo, derive_seed(cfg_.seed, 0x1417));
  const auto opts = model_.options();
  train_grids_ = grid_batch(train, topo, opts);
  if (!heldout.empty()) heldout_grids_ = grid_batch(heldout, topo, opts);
  batch_ = std::min<std::int64_t>(cfg_.batch_size, static_cast<std::int64_t>(train.size()));
  steps_per_epoch_ = static_cast<std::int64_t>(train.size()) / batch_;

  opt_e_ = std::make_unique<torch::optim::Adam>(model_.encoder->parameters(), adam_options(cfg_.adam_e));
  opt_g_ = std::make_unique<torch::optim::Adam>(model_.generator->parameters(), adam_options(cfg_.adam_g));
  opt_d_ = std::make_unique<torch::optim::Adam>(model_.discriminator->parameters(), adam_options(cfg_.adam_d));
}

std::int64_t Trainer::total_steps() const {
  return cfg_.max_steps ? *cfg_.max_steps : cfg_.epochs * steps_per_epoch_;
}

std::vector<int64_t> Trainer::batch_indices(std::int64_t step) const {
  const std::int64_t n = train_grids_.size(0);
  std::vector<int64_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(derive_seed(cfg_.seed, 0xe90c, step / steps_per_epoch_));
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto begin = perm.begin() + (step % steps_per_epoch_) * batch_;
  return {begin, begin + batch_};
}

StepLosses Trainer::step() {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(derive_seed(cfg_.seed, 0x57e9, step_));
  const auto opts = model_.options();
  const auto idx = batch_indices(step_);
  const auto real4 = train_grids_.index_select(0, torch::tensor(idx, torch::kLong));
  const auto real8 = with_velocities(real4);
  const int64_t n = real4.size(0), zdim = cfg_.network.latent_dim;
  const Critic critic = [this](const torch::Tensor& x) { return model_.discriminator->forward(x); };
  model_.train(true);

  StepLosses out;
  // Step 1: critic.
  for (std::int64_t k = 0; k < cfg_.n_critic; ++k) {
    const auto z = torch::randn({n, zdim}, gen, opts);
    const auto u = torch::rand({n}, gen, opts);
    torch::Tensor fake4;
    {
      torch::NoGradGuard no_grad;
      fake4 = model_.generator->forward(z);
    }
    const auto fake8 = layout_.critic_input(fake4);
    const auto score_fake = critic(fake8).mean();
    const auto score_real = critic(real8).mean();
    auto loss = score_fake - score_real;
    if (cfg_.weights.lambda_gp > 0.0) loss = loss + cfg_.weights.lambda_gp * gradient_penalty(critic, real8, fake8, u);
    out.critic = checked(loss, "L_D", step_);
    out.wasserstein = (score_real - score_fake).item<double>();
    opt_d_->zero_grad();
    loss.backward();
    opt_d_->step();
  }

  // Step 2: encoder and generator together, critic frozen.
  {
    FreezeGuard freeze(*model_.discriminator);
    const auto z_adv = torch::randn({n, zdim}, gen, opts);
    const auto z_back = torch::randn({n, zdim}, gen, opts);
    const auto l_g = -critic(layout_.critic_input(model_.generator->forward(z_adv))).mean();
    const auto x_hat4 = model_.generator->forward(model_.encoder->forward(real4));
    const auto l_rec =
        reconstruction_loss(layout_.joints_from_grid(real4), layout_.joints_from_grid(x_hat4), cfg_.weights);
    const auto z_hat = model_.encoder->forward(layout_.symmetrize(model_.generator->forward(z_back)));
    const auto l_back = backward_reconstruction_loss(z_back, z_hat, cfg_.weights.lambda_z);
    const auto l_mix = mixed_loss(critic, layout_.critic_input(x_hat4), cfg_.weights.lambda_m);
    const auto total = l_g + l_rec + l_back + l_mix;
    checked(total, "generator/encoder loss", step_);
    out.generator = l_g.item<double>();
    out.reconstruction = l_rec.item<double>();
    out.backward = l_back.item<double>();
    out.mixed = l_mix.item<double>();
    opt_e_->zero_grad();
    opt_g_->zero_grad();
    total.backward();
    opt_e_->step();
    opt_g_->step();
  }
  ++step_;
  return out;
}

torch::Tensor Trainer::heldout_grids_mpjpe(const torch::Tensor& grids) {
  torch::NoGradGuard no_grad;
  model_.train(false);
  const auto x_hat = model_.generator->forward(model_.encoder->forward(grids));
  return mpjpe(layout_.joints_from_grid(x_hat), layout_.joints_from_grid(grids));
}

double Trainer::heldout_mpjpe() {
  if (!heldout_grids_.defined()) return std::nan("");
  return heldout_grids_mpjpe(heldout_grids_).mean().item<double>();
}

double Trainer::train_mpjpe() { return heldout_grids_mpjpe(train_grids_).mean().item<double>(); }

double Trainer::latent_error(std::int64_t n, std::uint64_t seed) {
  torch::NoGradGuard no_grad;
  model_.train(false);
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto z = torch::randn({n, cfg_.network.latent_dim}, gen, model_.options());
  const auto z_hat = model_.encoder->forward(layout_.symmetrize(model_.generator->forward(z)));
  return (z_hat - z).pow(2).mean().item<double>();
}

// ---------------------------------------------------------------------------
// Optimizer state

namespace {

void dump_adam(const torch::optim::Adam& opt, const torch::nn::Module& m, const std::string& prefix,
               NamedTensors& out) {
  for (const auto& item : m.named_parameters()) {
    const auto it = opt.state().find(item.value().unsafeGetTensorImpl());
    if (it == opt.state().end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const std::string base = prefix + "." + item.key();
    out.emplace_back(base + ".step", torch::tensor({static_cast<int32_t>(s.step())}, torch::kInt32));
    out.emplace_back(base + ".exp_avg", s.exp_avg());
    out.emplace_back(base + ".exp_avg_sq", s.exp_avg_sq());
  }
}

void load_adam(torch::optim::Adam& opt, torch::nn::Module& m, const std::string& prefix,
               const std::map<std::string, torch::Tensor>& state) {
  opt.state().clear();
  for (auto& item : m.named_parameters()) {
    const std::string base = prefix + "." + item.key();
    const auto step = state.find(base + ".step");
    if (step == state.end()) continue;
    const auto avg = state.find(base + ".exp_avg");
    const auto avg_sq = state.find(base + ".exp_avg_sq");
    if (avg == state.end() || avg_sq == state.end()) throw DataError("optimizer state incomplete for " + base);
    const auto& p = item.value();
    if (avg->second.sizes() != p.sizes() || avg_sq->second.sizes() != p.sizes()) {
      throw DataError("optimizer state shape mismatch for " + base);
    }
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(step->second.item<int64_t>());
    s->exp_avg(avg->second.to(p.dtype()).clone());
    s->exp_avg_sq(avg_sq->second.to(p.dtype()).clone());
    opt.state()[p.unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace

NamedTensors Trainer::optimizer_state() const {
  NamedTensors out;
  dump_adam(*opt_e_, *model_.encoder, "encoder", out);
  dump_adam(*opt_g_, *model_.generator, "generator", out);
  dump_adam(*opt_d_, *model_.discriminator, "discriminator", out);
  return out;
}

void Trainer::load_optimizer_state(const NamedTensors& state) {
  std::map<std::string, torch::Tensor> byname(state.begin(), state.end());
  load_adam(*opt_e_, *model_.encoder, "encoder", byname);
  load_adam(*opt_g_, *model_.generator, "generator", byname);
  load_adam(*opt_d_, *model_.discriminator, "discriminator", byname);
}

// ---------------------------------------------------------------------------
// Checkpoints

nlohmann::json Trainer::manifest(const StepLosses* last, std::optional<double> heldout) const {
  nlohmann::json metrics = nlohmann::json::object();
  if (last) {
    metrics = {{"L_D", last->critic},          {"L_G", last->generator}, {"L_Rec", last->reconstruction},
               {"L_Rec_backward", last->backward}, {"L_Mix", last->mixed},     {"wasserstein", last->wasserstein}};
  }
  if (heldout && std::isfinite(*heldout)) metrics["heldout_mpjpe"] = *heldout;
  return {{"train", to_json(cfg_)},
          {"train_state", {{"step", step_}, {"epoch", epoch()}, {"batch_size", batch_}}},
          {"metrics", metrics}};
}

void Trainer::save(const fs::path& dir, const StepLosses* last, std::optional<double> heldout) const {
  const auto opt = optimizer_state();
  save_checkpoint(dir, model_, manifest(last, heldout), &opt);
}

void Trainer::restore(const fs::path& dir) {
  auto ck = load_checkpoint(dir);
  if (ck.model.config != cfg_.network) throw ConfigError("checkpoint network does not match the train config");
  if (!(ck.model.topology == model_.topology)) throw ConfigError("checkpoint topology does not match");
  load_module_state(*model_.encoder, module_state(*ck.model.encoder), "encoder");
  load_module_state(*model_.generator, module_state(*ck.model.generator), "generator");
  load_module_state(*model_.discriminator, module_state(*ck.model.discriminator), "discriminator");
  if (fs::exists(dir / "optimizer.state")) load_optimizer_state(jumps::load_optimizer_state(dir));
  try {
    step_ = ck.manifest.at("train_state").at("step").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint has no training state: " + std::string(e.what()));
  }
}

// ---------------------------------------------------------------------------
// fit

namespace {

std::string fmt(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

constexpr const char* kCsvHeader = "step,epoch,L_D,L_G,L_Rec,L_Rec_backward,L_Mix,heldout_mpjpe";

// Keeps the header and rows with step <= `upto`.
void truncate_log(const fs::path& path, std::int64_t upto) {
  std::string kept = std::string(kCsvHeader) + "\n";
  if (fs::exists(path)) {
    std::istringstream in(read_text_file(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= upto) kept += line + "\n";
    }
  }
  write_text_file(path, kept);
}

}  // namespace

FitResult fit(const TrainConfig& cfg, const SkeletonTopology& topo, const std::vector<PoseSequence>& seqs,
              const FitOptions& opts) {
  validate(cfg);
  auto split = split_dataset(seqs, cfg.heldout, cfg.seed);
  Trainer trainer(cfg, topo, std::move(split.train), std::move(split.heldout));
  if (opts.resume) trainer.restore(*opts.resume);

  fs::create_directories(opts.out);
  const fs::path log_path = opts.out / "metrics.csv";
  const fs::path ckpt = opts.out / "checkpoint";
  truncate_log(log_path, opts.resume ? trainer.steps_done() : -1);
  std::ofstream log(log_path, std::ios::app);
  if (!log) throw DataError("cannot write '" + log_path.string() + "'");

  FitResult result;
  result.checkpoint = ckpt;
  const std::int64_t total = trainer.total_steps();
  while (trainer.steps_done() < total) {
    StepLosses losses;
    try {
      losses = trainer.step();
    } catch (const NumericalError& e) {
      log.flush();
      nlohmann::json diag{{"step", trainer.steps_done()}, {"error", e.what()}, {"checkpoint", ckpt.string()}};
      write_text_file(opts.out / "diagnostic.json", diag.dump(2) + "\n");
      throw;
    }
    const std::int64_t s = trainer.steps_done();
    std::optional<double> heldout;
    if ((cfg.eval_every > 0 && s % cfg.eval_every == 0) || s == total) heldout = trainer.heldout_mpjpe();
    log << s << ',' << (s - 1) / trainer.steps_per_epoch() << ',' << fmt(losses.critic) << ','
        << fmt(losses.generator) << ',' << fmt(losses.reconstruction) << ',' << fmt(losses.backward) << ','
        << fmt(losses.mixed) << ',' << (heldout ? fmt(*heldout) : "") << '\n';
    if (opts.on_step) opts.on_step(s, losses);
    if ((cfg.checkpoint_every > 0 && s % cfg.checkpoint_every == 0) || s == total) {
      log.flush();
      trainer.save(ckpt, &losses, heldout);
    }
    if (heldout) result.heldout_mpjpe = *heldout;
  }
  result.steps = trainer.steps_done();
  return result;
}

}  // namespace jumps
