#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "jumps/cli/plot.hpp"
#include "jumps/core/downsample.hpp"
#include "jumps/core/pose_io.hpp"
#include "jumps/data/dataset.hpp"
#include "jumps/error.hpp"
#include "jumps/eval/experiments.hpp"

namespace jumps {
namespace {

namespace fs = std::filesystem;

std::vector<PoseSequence> ground_truth(std::size_t n = 4) {
  DatasetSpec spec;
  spec.chunk_length = 24;
  spec.stride = 24;
  spec.cameras_per_sequence = 1;
  spec.random_seed = 31;
  spec.synthetic_sequences = n;
  spec.motion.frames = 24;
  return build_dataset(spec).sequences;
}

std::vector<bool> missing_joints() {
  std::vector<bool> missing(28, true);
  const auto reduced = reduced_topology();
  for (JointId id : reduced.downsample_map->to_target) missing[id] = false;
  return missing;
}

// Returns gt shifted per joint by a fixed offset.
Upsampler shifted(const std::vector<PoseSequence>& gt, const std::vector<Vec2>& offsets) {
  return [&gt, offsets](const PoseSequence&, std::size_t i) {
    PoseSequence out = gt[i];
    for (std::size_t f = 0; f < out.frames(); ++f) {
      for (std::size_t j = 0; j < out.joints(); ++j) out.at(f, j) += offsets[j];
    }
    return out;
  };
}

const ScoreRow& row(const EvalReport& r, const std::string& method, const std::string& joints) {
  for (const auto& x : r.rows) {
    if (x.method == method && x.joints == joints) return x;
  }
  throw std::runtime_error("no row " + method + "/" + joints);
}

Model tiny_full_model() {
  auto cfg = desk_network_config();
  cfg.base_channels = 4;
  cfg.latent_dim = 8;
  auto m = make_model(cfg, full_topology(), 5);
  m.train(false);
  return m;
}

InferConfig quick_config() {
  InferConfig cfg;
  cfg.iterations = 4;
  cfg.starts = 2;
  cfg.adam.lr = 0.1;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("jumps_eval_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ---------------------------------------------------------------------------
// Scoring

TEST(EvalUpsampler, PerfectUpsamplerScoresOne) {
  const auto gt = ground_truth();
  EvalReport r;
  eval_upsampler(r, "oracle", gt, full_topology(), reduced_topology(), shifted(gt, std::vector<Vec2>(28)), {});
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& x : r.rows) {
    EXPECT_EQ(x.pckh_01, 1.0);
    EXPECT_EQ(x.pckh_05, 1.0);
    EXPECT_EQ(x.pckh_10, 1.0);
    EXPECT_EQ(x.auc, 1.0);
    EXPECT_EQ(x.frames_excluded, 0u);
  }
  EXPECT_EQ(row(r, "oracle", "missing").evaluated, 4u * 24u * 16u);
  EXPECT_EQ(row(r, "oracle", "all").evaluated, 4u * 24u * 28u);
  EXPECT_EQ(r.methods, std::vector<std::string>{"oracle"});
  ASSERT_EQ(r.outputs.size(), 1u);
  EXPECT_EQ(r.outputs[0].size(), 4u);
}

TEST(EvalUpsampler, RowsMatchLoopOracle) {
  const auto gt = ground_truth();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.06, 0.06);
  std::vector<Vec2> offsets(28);
  for (auto& o : offsets) o = {u(rng), u(rng)};
  EvalReport r;
  eval_upsampler(r, "shifted", gt, full_topology(), reduced_topology(), shifted(gt, offsets), {});

  const auto missing = missing_joints();
  const auto [ha, hb] = *full_topology().head_pair;
  for (bool only_missing : {true, false}) {
    const auto& x = row(r, "shifted", only_missing ? "missing" : "all");
    for (std::size_t t = 0; t <= 100; ++t) {
      const double alpha = static_cast<double>(t) / 100.0;
      std::size_t hits = 0, total = 0;
      for (const auto& s : gt) {
        for (std::size_t f = 0; f < s.frames(); ++f) {
          const double head = norm(s.at(f, ha) - s.at(f, hb));
          for (std::size_t j = 0; j < 28; ++j) {
            if (only_missing && !missing[j]) continue;
            ++total;
            if (norm(offsets[j]) <= alpha * head) ++hits;
          }
        }
      }
      // Errors are recomputed from shifted positions, so allow rounding at
      // the threshold.
      EXPECT_NEAR(x.curve[t], static_cast<double>(hits) / static_cast<double>(total), 1.0 / total + 1e-15);
      if (t == 50) EXPECT_EQ(x.pckh_05, x.curve[t]);
    }
    double mean = 0;
    for (double v : x.curve) mean += v;
    EXPECT_DOUBLE_EQ(x.auc, mean / 101.0);
  }
}

TEST(EvalUpsampler, HeadFactorScalesThresholds) {
  const auto gt = ground_truth(2);
  std::vector<Vec2> offsets(28, Vec2{0.02, -0.01});
  EvalReport a, b;
  eval_upsampler(a, "m", gt, full_topology(), reduced_topology(), shifted(gt, offsets), {});
  EvalOptions doubled;
  doubled.head_factor = 2.0;
  eval_upsampler(b, "m", gt, full_topology(), reduced_topology(), shifted(gt, offsets), doubled);
  for (std::size_t t = 0; t <= 50; ++t) EXPECT_EQ(row(b, "m", "all").curve[t], row(a, "m", "all").curve[2 * t]);
}

TEST(EvalUpsampler, RejectsBadInputs) {
  const auto gt = ground_truth(2);
  EvalReport r;
  EXPECT_THROW(eval_upsampler(r, "m", {}, full_topology(), reduced_topology(), shifted(gt, {}), {}), DataError);
  const Upsampler short_output = [&](const PoseSequence&, std::size_t i) {
    return PoseSequence(gt[i].frames() - 1, 28);
  };
  EXPECT_THROW(eval_upsampler(r, "m", gt, full_topology(), reduced_topology(), short_output, {}), DataError);
  EXPECT_THROW(eval_upsampler(r, "m", gt, reduced_topology(), full_topology(), shifted(gt, {}), {}), DataError);
}

TEST(EvalUpsampler, SeesOnlyTheReducedInput) {
  const auto gt = ground_truth(2);
  EvalReport r;
  const Upsampler check = [&](const PoseSequence& x, std::size_t i) {
    EXPECT_EQ(x.joints(), 12u);
    const auto expected = restrict_to(gt[i], full_topology(), reduced_topology());
    EXPECT_TRUE(std::equal(x.positions().begin(), x.positions().end(), expected.positions().begin()));
    EXPECT_EQ(x.mask(), expected.mask());
    return gt[i];
  };
  eval_upsampler(r, "m", gt, full_topology(), reduced_topology(), check, {});
}

// ---------------------------------------------------------------------------
// Upsampling and HPE experiments

TEST(EvalUpsampling, RunsEveryVariantDeterministically) {
  const auto gt = ground_truth(3);
  const auto model = tiny_full_model();
  EvalOptions opts;
  const auto a = eval_upsampling(gt, reduced_topology(), model, quick_config(), opts);
  ASSERT_EQ(a.rows.size(), 8u);
  EXPECT_EQ(a.methods, (std::vector<std::string>{"full", "w/o overlap", "w/o encoder-init", "w/o P.A."}));
  EXPECT_EQ(a.kind, "upsampling");
  for (const auto& x : a.rows) {
    EXPECT_GE(x.auc, 0.0);
    EXPECT_LE(x.auc, 1.0);
  }
  opts.workers = 3;
  const auto b = eval_upsampling(gt, reduced_topology(), model, quick_config(), opts);
  EXPECT_EQ(rows_csv(a), rows_csv(b));
  EXPECT_EQ(errors_csv(a, full_topology()), errors_csv(b, full_topology()));

  opts.variants = {Variant::NoProcrustes};
  const auto c = eval_upsampling(gt, reduced_topology(), model, quick_config(), opts);
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(rows_csv(c).substr(rows_csv(c).find('\n') + 1),
            rows_csv(a).substr(rows_csv(a).find("w/o P.A.")));
  EXPECT_THROW(eval_upsampling(gt, reduced_topology(), Model{}, quick_config(), opts), DataError);
}

TEST(EvalUpsampling, VariantConfigs) {
  const InferConfig base;
  EXPECT_EQ(variant_config(base, Variant::Full), base);
  EXPECT_FALSE(variant_config(base, Variant::NoOverlap).overlap);
  EXPECT_FALSE(variant_config(base, Variant::NoEncoderInit).encoder_init);
  EXPECT_FALSE(variant_config(base, Variant::NoProcrustes).procrustes);
  EXPECT_TRUE(variant_config(base, Variant::NoProcrustes).overlap);
}

TEST(EvalHpe, BaselineScoresTheTwelveInputJoints) {
  const auto gt = ground_truth(2);
  std::vector<PoseSequence> preds;
  for (const auto& s : gt) preds.push_back(restrict_to(s, full_topology(), reduced_topology()));
  const auto r = eval_hpe(preds, gt, reduced_topology(), tiny_full_model(), quick_config(), {});
  EXPECT_EQ(r.kind, "hpe");
  const auto& base = row(r, "baseline", "input");
  EXPECT_EQ(base.evaluated, 2u * 24u * 12u);
  EXPECT_EQ(base.auc, 1.0);
  EXPECT_EQ(row(r, "jumps", "all").evaluated, 2u * 24u * 28u);
  EXPECT_EQ(row(r, "jumps", "missing").evaluated, 2u * 24u * 16u);
  EXPECT_EQ(r.methods, (std::vector<std::string>{"baseline", "jumps"}));
}

TEST(EvalHpe, RejectsUnpairedInputs) {
  const auto gt = ground_truth(2);
  const auto model = tiny_full_model();
  std::vector<PoseSequence> preds{restrict_to(gt[0], full_topology(), reduced_topology())};
  EXPECT_THROW(eval_hpe(preds, gt, reduced_topology(), model, quick_config(), {}), DataError);
  preds.push_back(gt[1]);  // wrong joint count
  EXPECT_THROW(eval_hpe(preds, gt, reduced_topology(), model, quick_config(), {}), DataError);
  EXPECT_THROW(eval_hpe({}, {}, reduced_topology(), model, quick_config(), {}), DataError);
}

// ---------------------------------------------------------------------------
// Boundary velocity error

TEST(BoundaryMpjve, MatchesHandComputedValue) {
  PoseSequence gt(8, 2), pred(8, 2);
  for (std::size_t f = 0; f < 8; ++f) {
    for (std::size_t j = 0; j < 2; ++j) gt.at(f, j) = pred.at(f, j) = {0.1 * f, 0.2 * j};
  }
  // Jump of 0.3 at frame 4 on joint 1: velocity errors 0.3 into frame 4 only
  // (frame 3 unchanged).
  pred.at(4, 1).x += 0.3;
  // chunk 4: frames 3 and 4, two joints each.
  EXPECT_NEAR(boundary_mpjve(pred, gt, 4), 0.3 / 4.0, 1e-15);
  // chunk 3: boundaries 3 and 6 -> frames 2, 3, 5, 6; frame 5 sees -0.3.
  EXPECT_NEAR(boundary_mpjve(pred, gt, 3), 0.3 / 8.0, 1e-15);
  EXPECT_EQ(boundary_mpjve(gt, gt, 2), 0.0);
}

TEST(BoundaryMpjve, SkipsUnavailableAndRejectsDegenerate) {
  PoseSequence gt(6, 1), pred(6, 1);
  for (std::size_t f = 0; f < 6; ++f) gt.at(f, 0) = {static_cast<double>(f), 0};
  pred = gt;
  pred.at(3, 0).y = 1.0;
  gt.mask().set(2, 0, false);
  // chunk 3 -> frames 2 (skipped, unavailable) and 3 (needs 2, skipped).
  EXPECT_THROW(boundary_mpjve(pred, gt, 3), DataError);
  EXPECT_THROW(boundary_mpjve(pred, gt, 0), ConfigError);
  EXPECT_THROW(boundary_mpjve(pred, gt, 6), DataError);
  gt.mask().set(2, 0, true);
  EXPECT_NEAR(boundary_mpjve(pred, gt, 3), 0.5, 1e-15);
}

// ---------------------------------------------------------------------------
// Report files

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Report, CsvRoundTripsAndRecomputes) {
  const auto gt = ground_truth(2);
  std::vector<Vec2> offsets(28);
  for (std::size_t j = 0; j < 28; ++j) offsets[j] = {0.004 * static_cast<double>(j), 0.0};
  EvalReport r;
  r.kind = "upsampling";
  eval_upsampler(r, "shifted", gt, full_topology(), reduced_topology(), shifted(gt, offsets), {});

  const auto rows = parse_csv(rows_csv(r));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"method", "joints", "pckh@0.1", "pckh@0.5", "pckh@1.0", "auc"}));
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    EXPECT_EQ(std::strtod(rows[i + 1][3].c_str(), nullptr), r.rows[i].pckh_05);
    EXPECT_EQ(std::strtod(rows[i + 1][5].c_str(), nullptr), r.rows[i].auc);
  }

  // PCKh recomputed from errors.csv alone.
  const auto errs = parse_csv(errors_csv(r, full_topology()));
  ASSERT_EQ(errs[0].size(), 8u);
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double e = std::strtod(errs[i][6].c_str(), nullptr), h = std::strtod(errs[i][7].c_str(), nullptr);
    auto& [hits, total] = counts[errs[i][1]];
    ++total;
    if (e <= 0.5 * h) ++hits;
    EXPECT_EQ(errs[i][5], full_topology().joint_names.at(std::stoul(errs[i][4])));
  }
  for (const auto& x : r.rows) {
    const auto [hits, total] = counts.at(x.joints);
    EXPECT_EQ(total, x.evaluated);
    EXPECT_EQ(static_cast<double>(hits) / static_cast<double>(total), x.pckh_05);
  }
}

TEST(Report, WritesFilesThatPlot) {
  const auto gt = ground_truth(2);
  EvalReport r;
  r.kind = "upsampling";
  eval_upsampler(r, "oracle", gt, full_topology(), reduced_topology(), shifted(gt, std::vector<Vec2>(28)), {});
  const auto dir = scratch("report");
  write_report(dir, r, full_topology());
  for (const char* f : {"report.json", "report.csv", "errors.csv"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto j = nlohmann::json::parse(read_text_file(dir / "report.json"));
  EXPECT_EQ(j.at("format"), "jumps-report");
  EXPECT_EQ(j.at("rows").size(), 2u);
  EXPECT_EQ(j.at("rows")[0].at("curve").size(), 101u);
  EXPECT_EQ(read_text_file(dir / "report.csv"), rows_csv(r));
  const auto svg = pckh_svg(j);
  EXPECT_NE(svg.find("oracle (missing)"), std::string::npos);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace jumps
