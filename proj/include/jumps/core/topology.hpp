#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "jumps/error.hpp"

namespace jumps {

using JointId = std::size_t;
using JointPair = std::pair<JointId, JointId>;

// One row of the grid: a symmetric pair (first = left, second = right) or an
// axial joint duplicated into both halves (first == second).
struct GridEntry {
  JointId first = 0;
  JointId second = 0;

  bool axial() const { return first == second; }
  friend bool operator==(const GridEntry&, const GridEntry&) = default;
};

// Maps each joint of a reduced topology onto a joint of `target`.
struct DownsampleMap {
  std::string target;
  std::vector<JointId> to_target;  // indexed by reduced joint id

  friend bool operator==(const DownsampleMap&, const DownsampleMap&) = default;
};

struct SkeletonTopology {
  std::string name;
  std::vector<std::string> joint_names;
  std::vector<JointPair> pairs;
  std::vector<JointId> axial;
  std::vector<GridEntry> grid_order;
  std::optional<JointPair> head_pair;
  std::optional<DownsampleMap> downsample_map;
  // Drawing only; not part of the grid layout.
  std::vector<JointPair> bones;

  std::size_t joint_count() const { return joint_names.size(); }
  std::size_t grid_height() const { return grid_order.size(); }

  std::optional<JointId> find(const std::string& joint) const {
    const auto it = std::find(joint_names.begin(), joint_names.end(), joint);
    if (it == joint_names.end()) return std::nullopt;
    return static_cast<JointId>(it - joint_names.begin());
  }

  JointId index_of(const std::string& joint) const {
    if (auto id = find(joint)) return *id;
    throw DataError("topology '" + name + "' has no joint '" + joint + "'");
  }

  friend bool operator==(const SkeletonTopology&,
                         const SkeletonTopology&) = default;
};

// Throws DataError unless the structural invariants hold: every joint is in
// exactly one pair or in the axial list, and the grid order lists every pair
// and axial joint exactly once.
inline void validate(const SkeletonTopology& topo) {
  const std::size_t joints = topo.joint_count();
  if (joints == 0) throw DataError("topology '" + topo.name + "' has no joints");
  auto fail = [&](const std::string& what) {
    throw DataError("topology '" + topo.name + "': " + what);
  };
  std::vector<int> seen(joints, 0);
  auto touch = [&](JointId id) {
    if (id >= joints) fail("joint id out of range");
    ++seen[id];
  };
  for (const auto& [l, r] : topo.pairs) {
    if (l == r) fail("pair with identical joints");
    touch(l);
    touch(r);
  }
  for (JointId a : topo.axial) touch(a);
  for (std::size_t j = 0; j < joints; ++j) {
    if (seen[j] != 1) {
      fail("joint '" + topo.joint_names[j] +
           "' must appear in exactly one pair or in axial");
    }
  }
  if (topo.grid_order.size() != topo.pairs.size() + topo.axial.size()) {
    fail("grid_order must have one entry per pair and per axial joint");
  }
  std::vector<int> entry_seen(joints, 0);
  for (const auto& e : topo.grid_order) {
    if (e.first >= joints || e.second >= joints) fail("grid entry out of range");
    if (e.axial()) {
      if (std::find(topo.axial.begin(), topo.axial.end(), e.first) ==
          topo.axial.end()) {
        fail("grid entry duplicates a non-axial joint");
      }
    } else if (std::find(topo.pairs.begin(), topo.pairs.end(),
                         JointPair{e.first, e.second}) == topo.pairs.end()) {
      fail("grid entry is not a declared pair");
    }
    ++entry_seen[e.first];
    if (!e.axial()) ++entry_seen[e.second];
  }
  for (std::size_t j = 0; j < joints; ++j) {
    if (entry_seen[j] != 1) fail("grid_order must cover every joint once");
  }
  if (topo.head_pair) {
    const auto [a, b] = *topo.head_pair;
    if (a >= joints || b >= joints || a == b) fail("invalid head_pair");
  }
  for (const auto& [a, b] : topo.bones) {
    if (a >= joints || b >= joints) fail("bone out of range");
  }
}

// ---------------------------------------------------------------------------
// Presets

namespace detail {

inline SkeletonTopology build_topology(
    std::string name, std::vector<std::string> joints,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<std::string>& axial,
    const std::vector<std::string>& grid_order,
    std::optional<std::pair<std::string, std::string>> head,
    const std::vector<std::pair<std::string, std::string>>& bones) {
  SkeletonTopology t;
  t.name = std::move(name);
  t.joint_names = std::move(joints);
  for (const auto& [l, r] : pairs) {
    t.pairs.emplace_back(t.index_of(l), t.index_of(r));
  }
  for (const auto& a : axial) t.axial.push_back(t.index_of(a));
  for (const auto& entry : grid_order) {
    const JointId id = t.index_of(entry);
    GridEntry e{id, id};
    for (const auto& [l, r] : t.pairs) {
      if (l == id || r == id) e = {l, r};
    }
    t.grid_order.push_back(e);
  }
  if (head) t.head_pair = JointPair{t.index_of(head->first), t.index_of(head->second)};
  for (const auto& [a, b] : bones) t.bones.emplace_back(t.index_of(a), t.index_of(b));
  return t;
}

}  // namespace detail

inline constexpr const char* kFullTopologyName = "mpi_inf_3dhp_28";
inline constexpr const char* kReducedTopologyName = "reduced_12";

// 28-joint skeleton. Grid rows run hands -> arms -> shoulders -> axial
// (head top down to pelvis) -> hips -> legs -> feet.
inline SkeletonTopology full_topology() {
  static const SkeletonTopology topo = [] {
    auto t = detail::build_topology(
        kFullTopologyName,
        {"spine3",         "spine4",         "spine2",        "spine",
         "pelvis",         "neck",           "head",          "head_top",
         "left_clavicle",  "left_shoulder",  "left_elbow",    "left_wrist",
         "left_hand",      "right_clavicle", "right_shoulder", "right_elbow",
         "right_wrist",    "right_hand",     "left_hip",      "left_knee",
         "left_ankle",     "left_foot",      "left_toe",      "right_hip",
         "right_knee",     "right_ankle",    "right_foot",    "right_toe"},
        {{"left_hand", "right_hand"},
         {"left_wrist", "right_wrist"},
         {"left_elbow", "right_elbow"},
         {"left_shoulder", "right_shoulder"},
         {"left_clavicle", "right_clavicle"},
         {"left_hip", "right_hip"},
         {"left_knee", "right_knee"},
         {"left_ankle", "right_ankle"},
         {"left_foot", "right_foot"},
         {"left_toe", "right_toe"}},
        {"head_top", "head", "neck", "spine4", "spine3", "spine2", "spine",
         "pelvis"},
        {"left_hand", "left_wrist", "left_elbow", "left_shoulder",
         "left_clavicle", "head_top", "head", "neck", "spine4", "spine3",
         "spine2", "spine", "pelvis", "left_hip", "left_knee", "left_ankle",
         "left_foot", "left_toe"},
        std::pair<std::string, std::string>{"head_top", "neck"},
        {{"pelvis", "spine"},
         {"spine", "spine2"},
         {"spine2", "spine3"},
         {"spine3", "spine4"},
         {"spine4", "neck"},
         {"neck", "head"},
         {"head", "head_top"},
         {"spine4", "left_clavicle"},
         {"left_clavicle", "left_shoulder"},
         {"left_shoulder", "left_elbow"},
         {"left_elbow", "left_wrist"},
         {"left_wrist", "left_hand"},
         {"spine4", "right_clavicle"},
         {"right_clavicle", "right_shoulder"},
         {"right_shoulder", "right_elbow"},
         {"right_elbow", "right_wrist"},
         {"right_wrist", "right_hand"},
         {"pelvis", "left_hip"},
         {"left_hip", "left_knee"},
         {"left_knee", "left_ankle"},
         {"left_ankle", "left_foot"},
         {"left_foot", "left_toe"},
         {"pelvis", "right_hip"},
         {"right_hip", "right_knee"},
         {"right_knee", "right_ankle"},
         {"right_ankle", "right_foot"},
         {"right_foot", "right_toe"}});
    validate(t);
    return t;
  }();
  return topo;
}

// Shoulders, elbows, wrists, hips, knees and ankles: the joints a coarse
// 2D pose estimator typically shares with the full skeleton.
inline SkeletonTopology reduced_topology() {
  static const SkeletonTopology topo = [] {
    auto t = detail::build_topology(
        kReducedTopologyName,
        {"left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
         "left_wrist", "right_wrist", "left_hip", "right_hip", "left_knee",
         "right_knee", "left_ankle", "right_ankle"},
        {{"left_wrist", "right_wrist"},
         {"left_elbow", "right_elbow"},
         {"left_shoulder", "right_shoulder"},
         {"left_hip", "right_hip"},
         {"left_knee", "right_knee"},
         {"left_ankle", "right_ankle"}},
        {},
        {"left_wrist", "left_elbow", "left_shoulder", "left_hip", "left_knee",
         "left_ankle"},
        std::nullopt,
        {{"left_shoulder", "right_shoulder"},
         {"left_shoulder", "left_elbow"},
         {"left_elbow", "left_wrist"},
         {"right_shoulder", "right_elbow"},
         {"right_elbow", "right_wrist"},
         {"left_hip", "right_hip"},
         {"left_shoulder", "left_hip"},
         {"right_shoulder", "right_hip"},
         {"left_hip", "left_knee"},
         {"left_knee", "left_ankle"},
         {"right_hip", "right_knee"},
         {"right_knee", "right_ankle"}});
    const auto full = full_topology();
    DownsampleMap map{kFullTopologyName, {}};
    for (const auto& joint : t.joint_names) map.to_target.push_back(full.index_of(joint));
    t.downsample_map = map;
    validate(t);
    return t;
  }();
  return topo;
}

inline SkeletonTopology topology_by_name(const std::string& name) {
  if (name == kFullTopologyName) return full_topology();
  if (name == kReducedTopologyName) return reduced_topology();
  throw DataError("unknown topology name '" + name + "'");
}

// ---------------------------------------------------------------------------
// Topology file format

inline nlohmann::json topology_to_json(const SkeletonTopology& t) {
  using nlohmann::json;
  auto name_of = [&](JointId id) { return t.joint_names.at(id); };
  auto pair_json = [&](const JointPair& p) {
    return json::array({name_of(p.first), name_of(p.second)});
  };
  json j;
  j["name"] = t.name;
  j["joints"] = t.joint_names;
  j["pairs"] = json::array();
  for (const auto& p : t.pairs) j["pairs"].push_back(pair_json(p));
  j["axial"] = json::array();
  for (JointId a : t.axial) j["axial"].push_back(name_of(a));
  j["grid_order"] = json::array();
  for (const auto& e : t.grid_order) j["grid_order"].push_back(name_of(e.first));
  if (t.head_pair) j["head_pair"] = pair_json(*t.head_pair);
  if (t.downsample_map) {
    const auto target = topology_by_name(t.downsample_map->target);
    json joints = json::object();
    for (std::size_t i = 0; i < t.downsample_map->to_target.size(); ++i) {
      joints[name_of(i)] = target.joint_names.at(t.downsample_map->to_target[i]);
    }
    j["downsample_map"] = {{"target", t.downsample_map->target}, {"joints", joints}};
  }
  if (!t.bones.empty()) {
    j["bones"] = json::array();
    for (const auto& b : t.bones) j["bones"].push_back(pair_json(b));
  }
  return j;
}

// Grid entries name either the axial joint or any member of a pair.
inline SkeletonTopology topology_from_json(const nlohmann::json& j) {
  try {
    std::vector<std::pair<std::string, std::string>> pairs, bones;
    for (const auto& p : j.at("pairs")) pairs.emplace_back(p.at(0), p.at(1));
    if (j.contains("bones")) {
      for (const auto& b : j.at("bones")) bones.emplace_back(b.at(0), b.at(1));
    }
    std::optional<std::pair<std::string, std::string>> head;
    if (j.contains("head_pair") && !j.at("head_pair").is_null()) {
      head.emplace(j.at("head_pair").at(0), j.at("head_pair").at(1));
    }
    auto t = detail::build_topology(
        j.value("name", std::string("inline")),
        j.at("joints").get<std::vector<std::string>>(), pairs,
        j.at("axial").get<std::vector<std::string>>(),
        j.at("grid_order").get<std::vector<std::string>>(), head, bones);
    if (j.contains("downsample_map") && !j.at("downsample_map").is_null()) {
      const auto& dm = j.at("downsample_map");
      const auto target = topology_by_name(dm.at("target").get<std::string>());
      DownsampleMap map{target.name, std::vector<JointId>(t.joint_count())};
      std::vector<bool> mapped(t.joint_count(), false);
      for (const auto& [reduced, full] : dm.at("joints").items()) {
        const JointId r = t.index_of(reduced);
        map.to_target[r] = target.index_of(full.get<std::string>());
        mapped[r] = true;
      }
      if (std::find(mapped.begin(), mapped.end(), false) != mapped.end()) {
        throw DataError("downsample_map must map every joint of '" + t.name + "'");
      }
      t.downsample_map = std::move(map);
    }
    validate(t);
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed topology: ") + e.what());
  }
}

}  // namespace jumps
