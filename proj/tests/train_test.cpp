#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "jumps/core/pose_io.hpp"
#include "jumps/error.hpp"
#include "jumps/net/checkpoint.hpp"
#include "jumps/train/trainer.hpp"

namespace fs = std::filesystem;

namespace jumps {
namespace {

SkeletonTopology toy_topology() {
  SkeletonTopology t;
  t.name = "toy";
  t.joint_names = {"lh", "rh", "head", "lf", "rf"};
  t.pairs = {{0, 1}, {3, 4}};
  t.axial = {2};
  t.grid_order = {{0, 1}, {2, 2}, {3, 4}};
  t.head_pair = JointPair{2, 0};
  validate(t);
  return t;
}

TrainConfig tiny_train_config(std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.network.latent_dim = 3;
  cfg.network.height = 3;
  cfg.network.frames = 8;
  cfg.network.layers = {LayerSpec{.channels = 6}, LayerSpec{.channels = 12}};
  cfg.batch_size = 8;
  cfg.max_steps = 6;
  cfg.heldout = 4;
  cfg.eval_every = 2;
  cfg.checkpoint_every = 0;
  cfg.seed = seed;
  cfg.adam_e.lr = cfg.adam_g.lr = cfg.adam_d.lr = 1e-3;
  return cfg;
}

// Smooth swaying poses inside the unit square.
std::vector<PoseSequence> toy_sequences(std::size_t n, std::size_t frames = 8, std::uint64_t seed = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::array<Vec2, 5> rest{{{-0.4, 0.1}, {0.4, 0.1}, {0.0, 0.5}, {-0.2, -0.6}, {0.2, -0.6}}};
  std::vector<PoseSequence> out;
  for (std::size_t i = 0; i < n; ++i) {
    PoseSequence s(frames, 5);
    const double amp = 0.15 * u(rng), phase = 3 * u(rng), shift = 0.1 * u(rng);
    for (std::size_t f = 0; f < frames; ++f) {
      const double sway = amp * std::sin(phase + 0.5 * static_cast<double>(f));
      for (std::size_t j = 0; j < 5; ++j) s.at(f, j) = {rest[j].x + sway + shift, rest[j].y + 0.5 * sway};
    }
    out.push_back(std::move(s));
  }
  return out;
}

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("jumps_train_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::vector<torch::Tensor> snapshot(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (const auto& p : m.parameters()) out.push_back(p.detach().clone());
  return out;
}

bool same(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!torch::equal(a[i], b[i])) return false;
  }
  return true;
}

Trainer make_trainer(const TrainConfig& cfg, std::size_t n = 16) {
  auto split = split_dataset(toy_sequences(n), cfg.heldout, cfg.seed);
  return Trainer(cfg, toy_topology(), split.train, split.heldout);
}

std::string slurp(const fs::path& p) { return read_text_file(p); }

// ---------------------------------------------------------------------------

TEST(Split, SeededDisjointAndComplete) {
  auto seqs = toy_sequences(10);
  const auto a = split_dataset(seqs, 3, 5), b = split_dataset(seqs, 3, 5), c = split_dataset(seqs, 3, 6);
  EXPECT_EQ(a.train.size(), 7u);
  EXPECT_EQ(a.heldout.size(), 3u);
  for (std::size_t i = 0; i < a.heldout.size(); ++i) {
    EXPECT_EQ(a.heldout[i].positions()[0], b.heldout[i].positions()[0]);
  }
  std::set<double> seen;
  for (const auto* part : {&a.train, &a.heldout}) {
    for (const auto& s : *part) seen.insert(s.positions()[0].x);
  }
  EXPECT_EQ(seen.size(), 10u);
  bool differs = false;
  for (std::size_t i = 0; i < 3; ++i) differs |= c.heldout[i].positions()[0] != a.heldout[i].positions()[0];
  EXPECT_TRUE(differs);
  EXPECT_THROW(split_dataset(seqs, 10, 0), DataError);
}

TEST(TrainConfig, JsonRoundTripAndValidation) {
  auto cfg = tiny_train_config();
  EXPECT_EQ(train_config_from_json(to_json(cfg)), cfg);
  EXPECT_EQ(train_config_from_json(to_json(desk_train_config())), desk_train_config());

  auto j = to_json(cfg);
  j["optimizer"] = {{"lr", 0.01}, {"discriminator", {{"lr", 0.02}}}};
  const auto flat = train_config_from_json(j);
  EXPECT_EQ(flat.adam_e.lr, 0.01);
  EXPECT_EQ(flat.adam_g.lr, 0.01);
  EXPECT_EQ(flat.adam_d.lr, 0.02);

  for (auto [key, value] : std::vector<std::pair<std::string, nlohmann::json>>{
           {"epochs", 0}, {"batch_size", 1}, {"n_critic", 0}, {"max_steps", 0}, {"heldout", -1}}) {
    auto bad = to_json(cfg);
    bad[key] = value;
    EXPECT_THROW(train_config_from_json(bad), ConfigError) << key;
  }
  j = to_json(cfg);
  j["optimizer"] = {{"lr", 0.0}};
  EXPECT_THROW(train_config_from_json(j), ConfigError);
  j["optimizer"] = {{"beta1", 1.0}};
  EXPECT_THROW(train_config_from_json(j), ConfigError);
  j = to_json(cfg);
  j["epochs"] = "many";
  EXPECT_THROW(train_config_from_json(j), ConfigError);
}

TEST(Trainer, RejectsUnusableData) {
  const auto cfg = tiny_train_config();
  EXPECT_THROW(Trainer(cfg, toy_topology(), toy_sequences(8, 9), {}), DataError);
  auto seqs = toy_sequences(8);
  seqs[2].mask().set(3, 1, false);
  EXPECT_THROW(Trainer(cfg, toy_topology(), seqs, {}), DataError);
  EXPECT_THROW(Trainer(cfg, toy_topology(), toy_sequences(1), {}), DataError);
}

TEST(Trainer, BatchAndEpochBookkeeping) {
  auto cfg = tiny_train_config();
  cfg.batch_size = 100;
  cfg.max_steps.reset();
  cfg.epochs = 3;
  auto t = make_trainer(cfg, 14);
  EXPECT_EQ(t.batch_size(), 10);
  EXPECT_EQ(t.steps_per_epoch(), 1);
  EXPECT_EQ(t.total_steps(), 3);
  cfg.batch_size = 4;
  auto u = make_trainer(cfg, 14);
  EXPECT_EQ(u.steps_per_epoch(), 2);
  EXPECT_EQ(u.total_steps(), 6);
}

TEST(Trainer, SameSeedSameTrajectory) {
  auto a = make_trainer(tiny_train_config(7)), b = make_trainer(tiny_train_config(7));
  for (int i = 0; i < 3; ++i) {
    const auto la = a.step(), lb = b.step();
    EXPECT_EQ(la.critic, lb.critic);
    EXPECT_EQ(la.reconstruction, lb.reconstruction);
    EXPECT_EQ(la.backward, lb.backward);
  }
  EXPECT_TRUE(same(snapshot(*a.model().generator), snapshot(*b.model().generator)));
  EXPECT_TRUE(same(snapshot(*a.model().discriminator), snapshot(*b.model().discriminator)));

  auto c = make_trainer(tiny_train_config(8));
  EXPECT_NE(c.step().critic, make_trainer(tiny_train_config(7)).step().critic);
}

TEST(Trainer, ZeroLearningRateLeavesParametersUnchanged) {
  auto cfg = tiny_train_config();
  cfg.adam_e.lr = cfg.adam_g.lr = cfg.adam_d.lr = 0.0;
  auto t = make_trainer(cfg);
  const auto e = snapshot(*t.model().encoder), g = snapshot(*t.model().generator),
             d = snapshot(*t.model().discriminator);
  for (int i = 0; i < 3; ++i) t.step();
  EXPECT_TRUE(same(e, snapshot(*t.model().encoder)));
  EXPECT_TRUE(same(g, snapshot(*t.model().generator)));
  EXPECT_TRUE(same(d, snapshot(*t.model().discriminator)));
}

TEST(Trainer, EachOptimizerMovesOnlyItsSubnetwork) {
  auto cfg = tiny_train_config();
  cfg.adam_e.lr = cfg.adam_g.lr = 0.0;
  auto t = make_trainer(cfg);
  const auto e = snapshot(*t.model().encoder), g = snapshot(*t.model().generator),
             d = snapshot(*t.model().discriminator);
  t.step();
  EXPECT_TRUE(same(e, snapshot(*t.model().encoder)));
  EXPECT_TRUE(same(g, snapshot(*t.model().generator)));
  EXPECT_FALSE(same(d, snapshot(*t.model().discriminator)));

  cfg = tiny_train_config();
  cfg.adam_d.lr = 0.0;
  auto u = make_trainer(cfg);
  const auto d2 = snapshot(*u.model().discriminator), e2 = snapshot(*u.model().encoder);
  u.step();
  EXPECT_TRUE(same(d2, snapshot(*u.model().discriminator)));
  EXPECT_FALSE(same(e2, snapshot(*u.model().encoder)));
}

TEST(Trainer, CriticTrainableAgainAfterStep) {
  auto t = make_trainer(tiny_train_config());
  t.step();
  for (const auto& p : t.model().discriminator->parameters()) {
    EXPECT_TRUE(p.requires_grad());
    EXPECT_TRUE(p.grad().defined());
  }
}

TEST(Trainer, ResumeIsBitwiseIdentical) {
  const auto cfg = tiny_train_config(11);
  auto full = make_trainer(cfg);
  for (int i = 0; i < 4; ++i) full.step();

  auto first = make_trainer(cfg);
  first.step();
  first.step();
  const auto dir = temp_dir("resume");
  first.save(dir);
  auto second = make_trainer(cfg);
  second.restore(dir);
  EXPECT_EQ(second.steps_done(), 2);
  second.step();
  second.step();
  EXPECT_TRUE(same(snapshot(*full.model().encoder), snapshot(*second.model().encoder)));
  EXPECT_TRUE(same(snapshot(*full.model().generator), snapshot(*second.model().generator)));
  EXPECT_TRUE(same(snapshot(*full.model().discriminator), snapshot(*second.model().discriminator)));
  const auto a = full.optimizer_state(), b = second.optimizer_state();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(torch::equal(a[i].second, b[i].second)) << a[i].first;
}

TEST(Trainer, RestoreRejectsOtherNetworks) {
  auto cfg = tiny_train_config();
  const auto dir = temp_dir("other");
  make_trainer(cfg).save(dir);
  cfg.network.latent_dim = 4;
  auto t = make_trainer(cfg);
  EXPECT_THROW(t.restore(dir), ConfigError);
}

TEST(Trainer, LatentAndReconstructionErrorsFall) {
  auto cfg = tiny_train_config(5);
  cfg.max_steps = 300;
  auto t = make_trainer(cfg, 24);
  const double latent0 = t.latent_error(64, 9), rec0 = t.train_mpjpe();
  for (int i = 0; i < 300; ++i) t.step();
  EXPECT_LT(t.latent_error(64, 9), 0.5 * latent0);
  EXPECT_LT(t.train_mpjpe(), 0.5 * rec0);
  EXPECT_TRUE(std::isfinite(t.heldout_mpjpe()));
}

// ---------------------------------------------------------------------------
// fit

TEST(Fit, WritesLogAndCheckpoint) {
  auto cfg = tiny_train_config();
  cfg.max_steps = 5;
  const auto out = temp_dir("fit");
  const auto res = fit(cfg, toy_topology(), toy_sequences(16), {.out = out});
  EXPECT_EQ(res.steps, 5);
  EXPECT_TRUE(std::isfinite(res.heldout_mpjpe));

  std::istringstream log(slurp(out / "metrics.csv"));
  std::string line;
  std::getline(log, line);
  EXPECT_EQ(line, "step,epoch,L_D,L_G,L_Rec,L_Rec_backward,L_Mix,heldout_mpjpe");
  int rows = 0;
  while (std::getline(log, line)) {
    ++rows;
    const bool eval_row = rows % 2 == 0 || rows == 5;
    EXPECT_EQ(line.back() != ',', eval_row) << line;
    EXPECT_EQ(line.substr(0, line.find(',')), std::to_string(rows));
  }
  EXPECT_EQ(rows, 5);

  const auto ck = load_checkpoint(out / "checkpoint");
  EXPECT_EQ(ck.manifest.at("train_state").at("step"), 5);
  EXPECT_EQ(train_config_from_json(ck.manifest.at("train")), cfg);
  EXPECT_TRUE(ck.manifest.at("metrics").contains("wasserstein"));
  EXPECT_EQ(ck.manifest.at("metrics").at("heldout_mpjpe").get<double>(), res.heldout_mpjpe);
}

TEST(Fit, ResumeReproducesUninterruptedRun) {
  auto cfg = tiny_train_config(13);
  cfg.max_steps = 4;
  const auto whole = temp_dir("whole"), parts = temp_dir("parts");
  const auto seqs = toy_sequences(16);
  fit(cfg, toy_topology(), seqs, {.out = whole});
  cfg.max_steps = 2;
  fit(cfg, toy_topology(), seqs, {.out = parts});
  cfg.max_steps = 4;
  fit(cfg, toy_topology(), seqs, {.out = parts, .resume = parts / "checkpoint"});
  EXPECT_EQ(slurp(whole / "metrics.csv"), slurp(parts / "metrics.csv"));
  for (const char* f : {"encoder.params", "generator.params", "discriminator.params", "optimizer.state"}) {
    EXPECT_EQ(slurp(whole / "checkpoint" / f), slurp(parts / "checkpoint" / f)) << f;
  }
}

TEST(Fit, ZeroEpochsRejectedBeforeWriting) {
  auto cfg = tiny_train_config();
  cfg.epochs = 0;
  const auto out = temp_dir("zero");
  EXPECT_THROW(fit(cfg, toy_topology(), toy_sequences(16), {.out = out}), ConfigError);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Fit, NonFiniteLossAbortsAndKeepsLastCheckpoint) {
  auto cfg = tiny_train_config();
  cfg.max_steps = 2;
  const auto out = temp_dir("nan");
  const auto seqs = toy_sequences(16);
  fit(cfg, toy_topology(), seqs, {.out = out});
  const auto before = slurp(out / "checkpoint" / "generator.params");

  cfg.max_steps = 4;
  cfg.weights.lambda_p = 1e308;  // overflows the reconstruction term
  EXPECT_THROW(fit(cfg, toy_topology(), seqs, {.out = out, .resume = out / "checkpoint"}), NumericalError);
  const auto diag = nlohmann::json::parse(slurp(out / "diagnostic.json"));
  EXPECT_EQ(diag.at("step"), 2);
  EXPECT_EQ(slurp(out / "checkpoint" / "generator.params"), before);
  EXPECT_EQ(load_checkpoint(out / "checkpoint").manifest.at("train_state").at("step"), 2);
}

}  // namespace
}  // namespace jumps
