#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "jumps/data/camera.hpp"

namespace jumps {

// Parameters of the synthetic motion generator. Every degree of freedom is a
// constant plus at most `sinusoids` sinusoids no faster than `max_frequency`.
struct MotionSpec {
  std::size_t frames = 96;
  double fps = 30.0;
  int sinusoids = 4;
  double max_frequency = 0.0;  // Hz; 0 selects fps / 8
  Range gait_frequency{0.6, 1.6};
  Range amplitude_scale{0.6, 1.2};
  double detail_amplitude = 0.06;  // radians
  double root_amplitude = 0.25;    // meters
  Range bone_scale{0.92, 1.08};
  // Rest bone length overrides in meters, keyed by the child joint name.
  std::map<std::string, double> bone_lengths;

  double frequency_limit() const { return max_frequency > 0.0 ? max_frequency : fps / 8.0; }
};

inline void validate(const MotionSpec& spec) {
  if (spec.frames < 1) throw ConfigError("motion needs at least one frame");
  if (!(spec.fps > 0.0)) throw ConfigError("fps must be positive");
  if (spec.sinusoids < 1 || spec.sinusoids > 4) throw ConfigError("sinusoids must be in [1, 4]");
  if (spec.max_frequency < 0.0 || spec.max_frequency > spec.fps / 8.0) {
    throw ConfigError("max_frequency must lie in [0, fps/8]");
  }
  for (const Range* r : {&spec.gait_frequency, &spec.amplitude_scale, &spec.bone_scale}) {
    if (!(r->min <= r->max) || r->min < 0.0) throw ConfigError("invalid motion range");
  }
  if (!(spec.bone_scale.min > 0.0)) throw ConfigError("bone scale must be positive");
  if (spec.detail_amplitude < 0.0 || spec.root_amplitude < 0.0) {
    throw ConfigError("amplitudes must be non-negative");
  }
  for (const auto& [joint, length] : spec.bone_lengths) {
    if (!(length > 0.0)) throw ConfigError("bone length for '" + joint + "' must be positive");
  }
}

namespace detail {

struct RestBone {
  const char* joint;
  const char* parent;  // nullptr for the root
  Vec3 offset;         // T-pose, body facing +x, left +y, up +z
};

// Listed parents first.
inline const std::vector<RestBone>& rest_skeleton() {
  static const std::vector<RestBone> bones = {
      {"pelvis", nullptr, {0, 0, 0}},
      {"spine", "pelvis", {0, 0, 0.10}},
      {"spine2", "spine", {0, 0, 0.12}},
      {"spine3", "spine2", {0, 0, 0.12}},
      {"spine4", "spine3", {0, 0, 0.12}},
      {"neck", "spine4", {0, 0, 0.10}},
      {"head", "neck", {0.02, 0, 0.10}},
      {"head_top", "head", {0, 0, 0.12}},
      {"left_clavicle", "spine4", {0, 0.04, 0.04}},
      {"left_shoulder", "left_clavicle", {0, 0.15, 0}},
      {"left_elbow", "left_shoulder", {0, 0.28, 0}},
      {"left_wrist", "left_elbow", {0, 0.25, 0}},
      {"left_hand", "left_wrist", {0, 0.08, 0}},
      {"right_clavicle", "spine4", {0, -0.04, 0.04}},
      {"right_shoulder", "right_clavicle", {0, -0.15, 0}},
      {"right_elbow", "right_shoulder", {0, -0.28, 0}},
      {"right_wrist", "right_elbow", {0, -0.25, 0}},
      {"right_hand", "right_wrist", {0, -0.08, 0}},
      {"left_hip", "pelvis", {0, 0.10, -0.05}},
      {"left_knee", "left_hip", {0, 0, -0.42}},
      {"left_ankle", "left_knee", {0, 0, -0.40}},
      {"left_foot", "left_ankle", {0.10, 0, -0.06}},
      {"left_toe", "left_foot", {0.07, 0, 0}},
      {"right_hip", "pelvis", {0, -0.10, -0.05}},
      {"right_knee", "right_hip", {0, 0, -0.42}},
      {"right_ankle", "right_knee", {0, 0, -0.40}},
      {"right_foot", "right_ankle", {0.10, 0, -0.06}},
      {"right_toe", "right_foot", {0.07, 0, 0}},
  };
  return bones;
}

// Gait template for one rotational degree of freedom. The angle is
// scale * (base + amplitude * sin(w t + phase)); one-sided DOFs use
// amplitude/2 * (1 + sin) so they never change sign.
struct DofTemplate {
  const char* joint;
  int axis;  // 0 = x, 1 = y, 2 = z
  double base;
  double amplitude;
  double phase;
  bool one_sided = false;
};

inline const std::vector<DofTemplate>& gait_template() {
  constexpr double pi = std::numbers::pi;
  static const std::vector<DofTemplate> dofs = {
      {"pelvis", 0, 0.0, 0.05, 0.0},
      {"pelvis", 1, 0.05, 0.03, pi / 2},
      {"spine", 2, 0.0, 0.12, pi},
      {"spine2", 1, 0.03, 0.02, 0.0},
      {"spine3", 0, 0.0, 0.03, 0.0},
      {"neck", 1, 0.05, 0.04, pi / 3},
      {"head", 2, 0.0, 0.08, pi / 4},
      {"left_shoulder", 0, -1.25, 0.08, 0.0},
      {"left_shoulder", 2, 0.0, 0.40, pi},
      {"left_elbow", 2, 0.0, 0.70, pi, true},
      {"left_wrist", 0, 0.0, 0.15, pi / 2},
      {"right_shoulder", 0, 1.25, 0.08, pi},
      {"right_shoulder", 2, 0.0, 0.40, pi},
      {"right_elbow", 2, 0.0, -0.70, 0.0, true},
      {"right_wrist", 0, 0.0, 0.15, -pi / 2},
      {"left_hip", 1, -0.05, 0.45, 0.0},
      {"left_hip", 0, 0.0, 0.05, pi / 2},
      {"left_knee", 1, 0.0, 0.90, pi / 2, true},
      {"left_ankle", 1, 0.0, 0.20, pi},
      {"right_hip", 1, -0.05, 0.45, pi},
      {"right_hip", 0, 0.0, 0.05, -pi / 2},
      {"right_knee", 1, 0.0, 0.90, 3 * pi / 2, true},
      {"right_ankle", 1, 0.0, 0.20, 0.0},
  };
  return dofs;
}

}  // namespace detail

// a sin(2 pi f t + phase)
struct Sinusoid {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

struct DofTrajectory {
  JointId joint = 0;
  int axis = 0;
  double offset = 0.0;
  std::vector<Sinusoid> terms;

  double at(double t) const {
    double v = offset;
    for (const auto& s : terms) {
      v += s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
    }
    return v;
  }
};

// Everything random about one generated sequence, drawn up front.
struct MotionSample {
  std::vector<DofTrajectory> dofs;
  double heading = 0.0;
  std::vector<Sinusoid> root_x, root_y;
  double bone_scale = 1.0;
};

inline MotionSample sample_motion(const MotionSpec& spec, std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  const auto topo = full_topology();
  const double fmax = spec.frequency_limit();
  constexpr double two_pi = 2.0 * std::numbers::pi;

  MotionSample m;
  m.heading = uniform(0.0, two_pi);
  m.bone_scale = uniform(spec.bone_scale.min, spec.bone_scale.max);
  const double gait =
      std::min(fmax, uniform(spec.gait_frequency.min, spec.gait_frequency.max));
  const double scale = uniform(spec.amplitude_scale.min, spec.amplitude_scale.max);
  const double gait_phase = uniform(0.0, two_pi);

  for (const auto& tpl : detail::gait_template()) {
    DofTrajectory d;
    d.joint = topo.index_of(tpl.joint);
    d.axis = tpl.axis;
    const double amp = scale * tpl.amplitude;
    d.offset = scale * tpl.base + (tpl.one_sided ? amp / 2.0 : 0.0);
    d.terms.push_back({tpl.one_sided ? amp / 2.0 : amp, gait, gait_phase + tpl.phase});
    for (int k = 1; k < spec.sinusoids; ++k) {
      d.terms.push_back({scale * uniform(0.0, spec.detail_amplitude), uniform(0.0, fmax),
                         uniform(0.0, two_pi)});
    }
    m.dofs.push_back(std::move(d));
  }
  for (auto* root : {&m.root_x, &m.root_y}) {
    root->push_back({spec.root_amplitude * uniform(0.0, 1.0), uniform(0.0, std::min(0.5, fmax)),
                     uniform(0.0, two_pi)});
  }
  return m;
}

// Forward kinematics of the 28-joint skeleton driven by `sample`.
inline Pose3DSequence animate(const MotionSpec& spec, const MotionSample& sample) {
  const auto topo = full_topology();
  const auto& bones = detail::rest_skeleton();
  const std::size_t J = topo.joint_count();

  std::vector<JointId> ids, parents;
  std::vector<Vec3> offsets;
  for (const auto& b : bones) {
    ids.push_back(topo.index_of(b.joint));
    parents.push_back(b.parent ? topo.index_of(b.parent) : ids.back());
    Vec3 off = b.offset;
    if (auto it = spec.bone_lengths.find(b.joint); it != spec.bone_lengths.end() && b.parent) {
      off = it->second * normalized(off);
    }
    offsets.push_back(sample.bone_scale * off);
  }
  // Pelvis height that puts the left foot on the ground in the rest pose.
  const double leg = -(offsets[18].z + offsets[19].z + offsets[20].z + offsets[21].z);

  Pose3DSequence seq(spec.frames, J);
  seq.fps = spec.fps;
  std::vector<std::array<double, 3>> angles(J);
  std::vector<Mat3> global(J);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    const double t = static_cast<double>(f) / spec.fps;
    for (auto& a : angles) a = {0.0, 0.0, 0.0};
    for (const auto& d : sample.dofs) angles[d.joint][static_cast<std::size_t>(d.axis)] += d.at(t);
    auto root_value = [t](const std::vector<Sinusoid>& terms) {
      double v = 0.0;
      for (const auto& s : terms) v += s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency * t + s.phase);
      return v;
    };
    for (std::size_t k = 0; k < bones.size(); ++k) {
      const JointId j = ids[k];
      const auto& a = angles[j];
      Mat3 local = Mat3::rot_z(a[2]) * Mat3::rot_y(a[1]) * Mat3::rot_x(a[0]);
      if (k == 0) {
        local = Mat3::rot_z(sample.heading) * local;
        global[j] = local;
        seq.at(f, j) = {root_value(sample.root_x), root_value(sample.root_y), leg};
      } else {
        const JointId p = parents[k];
        global[j] = global[p] * local;
        seq.at(f, j) = seq.at(f, p) + global[p] * offsets[k];
      }
    }
  }
  return seq;
}

inline Pose3DSequence synth_motion(const MotionSpec& spec, std::uint64_t seed) {
  return animate(spec, sample_motion(spec, seed));
}

}  // namespace jumps
