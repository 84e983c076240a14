#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "jumps/core/alignment.hpp"
#include "jumps/core/downsample.hpp"
#include "jumps/core/grid.hpp"
#include "jumps/core/pose_io.hpp"

namespace jumps {
namespace {

PoseSequence random_sequence(std::mt19937_64& rng, std::size_t frames, std::size_t joints,
                             double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  PoseSequence s(frames, joints);
  for (auto& p : s.positions()) p = {n(rng), n(rng)};
  return s;
}

// Two pairs and one axial joint: joints 0/1 hands, 2 head, 3/4 feet.
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

// ---------------------------------------------------------------------------
// Topology

TEST(Topology, FullPresetInvariants) {
  const auto t = full_topology();
  EXPECT_EQ(t.joint_count(), 28u);
  EXPECT_EQ(2 * t.pairs.size() + t.axial.size(), t.joint_count());
  EXPECT_EQ(t.grid_height(), 18u);
  EXPECT_EQ(t.grid_order.front(), (GridEntry{t.index_of("left_hand"), t.index_of("right_hand")}));
  EXPECT_EQ(t.grid_order.back(), (GridEntry{t.index_of("left_toe"), t.index_of("right_toe")}));
  ASSERT_TRUE(t.head_pair);
  EXPECT_EQ(t.joint_names[t.head_pair->first], "head_top");
}

TEST(Topology, ReducedPresetMapsTwelveJoints) {
  const auto r = reduced_topology();
  const auto full = full_topology();
  EXPECT_EQ(r.joint_count(), 12u);
  ASSERT_TRUE(r.downsample_map);
  for (std::size_t i = 0; i < r.joint_count(); ++i) {
    EXPECT_EQ(full.joint_names[r.downsample_map->to_target[i]], r.joint_names[i]);
  }
}

TEST(Topology, RejectsJointInTwoPlaces) {
  auto t = toy_topology();
  t.axial.push_back(0);
  EXPECT_THROW(validate(t), DataError);
}

TEST(Topology, RejectsIncompleteGridOrder) {
  auto t = toy_topology();
  t.grid_order.pop_back();
  EXPECT_THROW(validate(t), DataError);
}

TEST(Topology, RejectsDegenerateHeadPair) {
  auto t = toy_topology();
  t.head_pair = JointPair{2, 2};
  EXPECT_THROW(validate(t), DataError);
}

TEST(Topology, JsonRoundTrip) {
  for (const auto& t : {full_topology(), reduced_topology(), toy_topology()}) {
    EXPECT_EQ(topology_from_json(topology_to_json(t)), t);
  }
}

TEST(Topology, ShippedFilesMatchPresets) {
  const std::filesystem::path dir = std::filesystem::path(JUMPS_SOURCE_DIR) / "data" / "topology";
  EXPECT_EQ(read_topology_file(dir / "mpi_inf_3dhp_28.json"), full_topology());
  EXPECT_EQ(read_topology_file(dir / "reduced_12.json"), reduced_topology());
}

// ---------------------------------------------------------------------------
// Grid codec

TEST(Grid, ToyLayoutMatchesHandBuiltArray) {
  const auto topo = toy_topology();
  PoseSequence s(2, 5);
  for (std::size_t f = 0; f < 2; ++f) {
    for (std::size_t j = 0; j < 5; ++j) s.at(f, j) = {10.0 * j + f, -10.0 * j - f};
  }
  const GridTensor g = encode_grid(s, topo);
  GridTensor expected(4, 3, 2);
  // Row 0: hands (0, 1); row 1: head duplicated; row 2: feet (3, 4).
  const std::size_t rows[3][2] = {{0, 1}, {2, 2}, {3, 4}};
  for (std::size_t h = 0; h < 3; ++h) {
    for (std::size_t f = 0; f < 2; ++f) {
      const double a = static_cast<double>(rows[h][0]), b = static_cast<double>(rows[h][1]);
      const double fd = static_cast<double>(f);
      expected(0, h, f) = 10 * a + fd;
      expected(1, h, f) = -10 * a - fd;
      expected(2, h, f) = 10 * b + fd;
      expected(3, h, f) = -10 * b - fd;
    }
  }
  EXPECT_EQ(g, expected);
}

TEST(Grid, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  const auto topo = full_topology();
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sequence(rng, 24, 28, 3.0);
    const auto back = decode_grid(encode_grid(s, topo), topo);
    for (std::size_t i = 0; i < s.positions().size(); ++i) {
      EXPECT_EQ(back.positions()[i], s.positions()[i]);
    }
  }
}

TEST(Grid, ConstantSequenceHasZeroVelocities) {
  const auto topo = full_topology();
  std::mt19937_64 rng(2);
  auto pose = random_sequence(rng, 1, 28);
  PoseSequence s(10, 28);
  for (std::size_t f = 0; f < 10; ++f) {
    for (std::size_t j = 0; j < 28; ++j) s.at(f, j) = pose.at(0, j);
  }
  const auto g = encode_grid(s, topo, true);
  ASSERT_EQ(g.channels(), 8u);
  for (std::size_t c = 4; c < 8; ++c) {
    for (std::size_t h = 0; h < g.height(); ++h) {
      for (std::size_t f = 0; f < g.frames(); ++f) EXPECT_EQ(g(c, h, f), 0.0);
    }
  }
}

TEST(Grid, VelocityChannelsAreFrameDifferences) {
  const auto topo = full_topology();
  std::mt19937_64 rng(3);
  const auto s = random_sequence(rng, 12, 28);
  const auto g = encode_grid(s, topo, true);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t h = 0; h < g.height(); ++h) {
      EXPECT_EQ(g(c + 4, h, 0), 0.0);
      for (std::size_t f = 1; f < g.frames(); ++f) {
        EXPECT_EQ(g(c + 4, h, f), g(c, h, f) - g(c, h, f - 1));
      }
    }
  }
}

TEST(Grid, AxialJointIsMeanOfHalves) {
  const auto topo = toy_topology();
  GridTensor g(4, 3, 1);
  g(0, 1, 0) = 1;
  g(1, 1, 0) = 1;
  g(2, 1, 0) = 3;
  g(3, 1, 0) = 3;
  const auto s = decode_grid(g, topo);
  EXPECT_EQ(s.at(0, 2), (Vec2{2, 2}));
  EXPECT_TRUE(s.mask().all());
}

TEST(Grid, DecodeEncodeSymmetrizesOnlyAxialRows) {
  const auto topo = full_topology();
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  GridTensor g(4, topo.grid_height(), 6);
  for (auto& v : g.data()) v = n(rng);
  const auto again = encode_grid(decode_grid(g, topo), topo);
  for (std::size_t h = 0; h < g.height(); ++h) {
    for (std::size_t f = 0; f < g.frames(); ++f) {
      if (topo.grid_order[h].axial()) {
        const double mx = (g(0, h, f) + g(2, h, f)) / 2.0, my = (g(1, h, f) + g(3, h, f)) / 2.0;
        EXPECT_EQ(again(0, h, f), mx);
        EXPECT_EQ(again(2, h, f), mx);
        EXPECT_EQ(again(1, h, f), my);
        EXPECT_EQ(again(3, h, f), my);
      } else {
        for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(again(c, h, f), g(c, h, f));
      }
    }
  }
}

TEST(Grid, SizeMismatchesThrow) {
  EXPECT_THROW(encode_grid(PoseSequence(3, 27), full_topology()), DataError);
  EXPECT_THROW(decode_grid(GridTensor(8, 18, 3), full_topology()), DataError);
}

// ---------------------------------------------------------------------------
// Normalization

TEST(Normalize, CenteredUnitSequenceIsUnchanged) {
  PoseSequence s(1, 3);
  s.at(0, 0) = {-1, -0.5};
  s.at(0, 1) = {1, 0.5};
  s.at(0, 2) = {0.25, 0};
  const auto n = normalize(s);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(n.at(0, j), s.at(0, j));
  EXPECT_EQ(n.norm.linear, Mat2::identity());
  EXPECT_EQ(n.norm.offset, (Vec2{0, 0}));
}

TEST(Normalize, TranslationAndScaleInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = random_sequence(rng, 8, 28, 50.0);
    std::uniform_real_distribution<double> u(0.1, 10.0), t(-500, 500);
    const double a = u(rng);
    const auto moved = s.transformed({Mat2::scaling(a), {t(rng), t(rng)}});
    const auto n1 = normalize(s), n2 = normalize(moved);
    for (std::size_t i = 0; i < s.positions().size(); ++i) {
      EXPECT_NEAR(n1.positions()[i].x, n2.positions()[i].x, 1e-9);
      EXPECT_NEAR(n1.positions()[i].y, n2.positions()[i].y, 1e-9);
    }
  }
}

TEST(Normalize, NormMapsBackToSource) {
  std::mt19937_64 rng(6);
  const auto s = random_sequence(rng, 8, 28, 200.0).transformed({Mat2::identity(), {640, 360}});
  const auto back = normalize(s).denormalized();
  for (std::size_t i = 0; i < s.positions().size(); ++i) {
    EXPECT_NEAR(back.positions()[i].x, s.positions()[i].x, 1e-6);
    EXPECT_NEAR(back.positions()[i].y, s.positions()[i].y, 1e-6);
  }
}

TEST(Normalize, IdempotentAndBounded) {
  std::mt19937_64 rng(7);
  const auto n1 = normalize(random_sequence(rng, 8, 28, 30.0));
  const auto n2 = normalize(n1);
  for (std::size_t i = 0; i < n1.positions().size(); ++i) {
    EXPECT_NEAR(n1.positions()[i].x, n2.positions()[i].x, 1e-9);
    EXPECT_LE(std::abs(n1.positions()[i].x), 1.0 + 1e-12);
    EXPECT_LE(std::abs(n1.positions()[i].y), 1.0 + 1e-12);
  }
  // Composed norm still returns to the original frame.
  const auto a = n1.denormalized(), b = n2.denormalized();
  for (std::size_t i = 0; i < a.positions().size(); ++i) EXPECT_NEAR(a.positions()[i].x, b.positions()[i].x, 1e-9);
}

TEST(Normalize, IgnoresUnavailableJoints) {
  PoseSequence s(1, 3);
  s.at(0, 0) = {0, 0};
  s.at(0, 1) = {2, 2};
  s.at(0, 2) = {1e6, 1e6};
  s.mask().set(0, 2, false);
  const auto n = normalize(s);
  EXPECT_EQ(n.at(0, 0), (Vec2{-1, -1}));
  EXPECT_EQ(n.at(0, 1), (Vec2{1, 1}));
}

TEST(Normalize, RejectsEmptyMaskAndDegenerateBox) {
  PoseSequence s(2, 3);
  s.mask() = JointMask(2, 3, false);
  EXPECT_THROW(normalize(s), DataError);
  PoseSequence same(2, 3);
  EXPECT_THROW(normalize(same), DataError);
}

// ---------------------------------------------------------------------------
// Procrustes

TEST(Procrustes, IdentityOnEqualInputs) {
  std::mt19937_64 rng(8);
  const auto s = random_sequence(rng, 4, 28);
  const auto t = procrustes_align(s, s, s.mask());
  EXPECT_NEAR(t.scale, 1.0, 1e-9);
  EXPECT_NEAR(t.rotation.a, 1.0, 1e-9);
  EXPECT_NEAR(t.rotation.c, 0.0, 1e-9);
  EXPECT_NEAR(t.translation.x, 0.0, 1e-9);
  EXPECT_NEAR(t.translation.y, 0.0, 1e-9);
}

TEST(Procrustes, RecoversKnownSimilarity) {
  std::mt19937_64 rng(9);
  const auto s = random_sequence(rng, 4, 28);
  const SimilarityTransform2D truth{2.5, Mat2::rotation(std::numbers::pi / 6), {3, -1}};
  const auto target = s.transformed(truth.to_affine());
  const auto t = procrustes_align(s, target, s.mask());
  EXPECT_NEAR(t.scale, 2.5, 1e-6);
  EXPECT_NEAR(t.angle(), std::numbers::pi / 6, 1e-6);
  EXPECT_NEAR(t.translation.x, 3.0, 1e-6);
  EXPECT_NEAR(t.translation.y, -1.0, 1e-6);
  EXPECT_NEAR(t.rotation.det(), 1.0, 1e-12);
}

TEST(Procrustes, NeverWorseThanIdentity) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::bernoulli_distribution keep(0.6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_sequence(rng, 6, 28);
    auto target = s;
    for (auto& p : target.positions()) p = p + Vec2{noise(rng), noise(rng)};
    JointMask mask(6, 28, false);
    for (std::size_t f = 0; f < 6; ++f) {
      for (std::size_t j = 0; j < 28; ++j) mask.set(f, j, keep(rng));
    }
    const auto t = procrustes_align(s, target, mask);
    EXPECT_LE(masked_squared_error(s, target, mask, t),
              masked_squared_error(s, target, mask, SimilarityTransform2D{}) + 1e-12);
    EXPECT_GT(t.scale, 0.0);
    const Mat2 rtr = t.rotation.transposed() * t.rotation;
    EXPECT_NEAR(rtr.a, 1.0, 1e-9);
    EXPECT_NEAR(rtr.b, 0.0, 1e-9);
    EXPECT_NEAR(rtr.d, 1.0, 1e-9);
  }
}

TEST(Procrustes, ExcludesReflections) {
  std::mt19937_64 rng(11);
  const auto s = random_sequence(rng, 3, 28);
  const auto mirrored = s.transformed({Mat2{-1, 0, 0, 1}, {0, 0}});
  const auto t = procrustes_align(s, mirrored, s.mask());
  EXPECT_NEAR(t.rotation.det(), 1.0, 1e-12);
}

TEST(Procrustes, OnlyMaskedJointsMatter) {
  std::mt19937_64 rng(12);
  const auto s = random_sequence(rng, 3, 28);
  const SimilarityTransform2D truth{0.7, Mat2::rotation(2.0), {-4, 9}};
  auto target = s.transformed(truth.to_affine());
  JointMask mask(3, 28, true);
  for (std::size_t f = 0; f < 3; ++f) {
    target.at(f, 5) = {1e3, -1e3};
    mask.set(f, 5, false);
  }
  const auto t = procrustes_align(s, target, mask);
  EXPECT_NEAR(t.scale, 0.7, 1e-9);
  EXPECT_NEAR(t.translation.y, 9.0, 1e-9);
}

TEST(Procrustes, RejectsTooFewOrCoincidentPoints) {
  PoseSequence s(1, 3), t(1, 3);
  s.at(0, 1) = {1, 0};
  JointMask one(1, 3, false);
  one.set(0, 1, true);
  EXPECT_THROW(procrustes_align(s, t, one), DataError);
  JointMask two = one;
  two.set(0, 2, true);
  s.at(0, 2) = {1, 0};
  t.at(0, 2) = {5, 5};
  EXPECT_THROW(procrustes_align(s, t, two), DataError);
}

// ---------------------------------------------------------------------------
// Downsampling

TEST(Downsample, KeepsExactlyMappedJoints) {
  const auto full = full_topology(), reduced = reduced_topology();
  std::mt19937_64 rng(13);
  const auto s = random_sequence(rng, 5, 28);
  const auto d = downsample(s, full, reduced);
  EXPECT_EQ(d.mask().count(), 5u * 12u);
  for (std::size_t f = 0; f < 5; ++f) {
    std::size_t per_frame = 0;
    for (std::size_t j = 0; j < 28; ++j) per_frame += d.available(f, j);
    EXPECT_EQ(per_frame, 12u);
  }
  EXPECT_TRUE(d.available(0, full.index_of("left_knee")));
  EXPECT_FALSE(d.available(0, full.index_of("head_top")));
}

TEST(Downsample, UnavailableStaysUnavailable) {
  const auto full = full_topology(), reduced = reduced_topology();
  PoseSequence s(2, 28);
  s.mask().set(1, full.index_of("left_knee"), false);
  const auto d = downsample(s, full, reduced);
  EXPECT_FALSE(d.available(1, full.index_of("left_knee")));
  EXPECT_EQ(d.mask().count(), 23u);
}

TEST(Downsample, EmbedAndRestrictAreConsistent) {
  const auto full = full_topology(), reduced = reduced_topology();
  std::mt19937_64 rng(14);
  const auto s = random_sequence(rng, 4, 28);
  const auto small = restrict_to(s, full, reduced);
  EXPECT_EQ(small.joints(), 12u);
  const auto back = embed(small, reduced, full);
  EXPECT_EQ(back.mask(), downsample(s, full, reduced).mask());
  for (std::size_t f = 0; f < 4; ++f) {
    for (std::size_t j = 0; j < 28; ++j) {
      if (back.available(f, j)) {
        EXPECT_EQ(back.at(f, j), s.at(f, j));
      }
    }
  }
}

TEST(Downsample, RejectsUnknownTargets) {
  auto reduced = reduced_topology();
  reduced.downsample_map->to_target[0] = 99;
  EXPECT_THROW(downsample(PoseSequence(1, 28), full_topology(), reduced), DataError);
  auto other = reduced_topology();
  other.downsample_map->target = "something_else";
  EXPECT_THROW(downsample(PoseSequence(1, 28), full_topology(), other), DataError);
}

// ---------------------------------------------------------------------------
// Pose file format

TEST(PoseIo, RoundTripKeepsFullPrecisionAndMissingJoints) {
  std::mt19937_64 rng(15);
  auto s = random_sequence(rng, 3, 28, 123.456);
  s.mask().set(1, 4, false);
  s.fps = 25.0;
  const auto back = pose_from_json(nlohmann::json::parse(pose_to_json(s, full_topology()).dump()));
  EXPECT_EQ(back.topology, full_topology());
  EXPECT_EQ(back.sequence.mask(), s.mask());
  EXPECT_EQ(back.sequence.fps, 25.0);
  for (std::size_t f = 0; f < 3; ++f) {
    for (std::size_t j = 0; j < 28; ++j) {
      if (s.available(f, j)) {
        EXPECT_EQ(back.sequence.at(f, j), s.at(f, j));
      }
    }
  }
}

TEST(PoseIo, InlineTopologyIsAccepted) {
  const auto topo = toy_topology();
  PoseSequence s(1, 5);
  const auto j = pose_to_json(s, topo);
  EXPECT_TRUE(j.at("topology").is_object());
  EXPECT_EQ(pose_from_json(j).topology, topo);
}

TEST(PoseIo, MalformedRecordsThrowDataError) {
  EXPECT_THROW(pose_from_json(nlohmann::json::parse(R"({"version":2,"topology":"reduced_12","frames":[]})")),
               DataError);
  EXPECT_THROW(pose_from_json(nlohmann::json::parse(
                   R"({"version":1,"topology":"reduced_12","fps":null,"frames":[[[0,0]]]})")),
               DataError);
  EXPECT_THROW(read_pose_file("/nonexistent/file.json"), DataError);
}

}  // namespace
}  // namespace jumps
