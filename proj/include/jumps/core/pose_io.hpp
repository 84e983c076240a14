#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "jumps/core/pose_sequence.hpp"
#include "jumps/core/topology.hpp"

namespace jumps {

inline constexpr int kPoseFormatVersion = 1;

struct PoseFile {
  SkeletonTopology topology;
  PoseSequence sequence;
};

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes to a sibling temporary file and renames it into place.
inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

inline nlohmann::json topology_reference(const SkeletonTopology& topo) {
  for (const char* name : {kFullTopologyName, kReducedTopologyName}) {
    if (topo.name == name && topo == topology_by_name(name)) return topo.name;
  }
  return topology_to_json(topo);
}

inline SkeletonTopology resolve_topology(const nlohmann::json& ref) {
  if (ref.is_string()) return topology_by_name(ref.get<std::string>());
  if (ref.is_object()) return topology_from_json(ref);
  throw DataError("topology must be a name or an object");
}

inline nlohmann::json pose_to_json(const PoseSequence& seq, const SkeletonTopology& topo) {
  using nlohmann::json;
  if (seq.joints() != topo.joint_count()) throw DataError("sequence does not match topology");
  json frames = json::array();
  for (std::size_t f = 0; f < seq.frames(); ++f) {
    json row = json::array();
    for (std::size_t j = 0; j < seq.joints(); ++j) {
      if (seq.available(f, j)) {
        row.push_back(json::array({seq.at(f, j).x, seq.at(f, j).y}));
      } else {
        row.push_back(nullptr);
      }
    }
    frames.push_back(std::move(row));
  }
  json j;
  j["version"] = kPoseFormatVersion;
  j["topology"] = topology_reference(topo);
  j["fps"] = seq.fps ? json(*seq.fps) : json(nullptr);
  j["frames"] = std::move(frames);
  return j;
}

inline PoseFile pose_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kPoseFormatVersion) {
      throw DataError("unsupported pose file version");
    }
    PoseFile file{resolve_topology(j.at("topology")), {}};
    const auto& frames = j.at("frames");
    if (!frames.is_array() || frames.empty()) throw DataError("pose file has no frames");
    const std::size_t J = file.topology.joint_count();
    PoseSequence seq(frames.size(), J);
    for (std::size_t f = 0; f < frames.size(); ++f) {
      const auto& row = frames[f];
      if (!row.is_array() || row.size() != J) {
        throw DataError("frame " + std::to_string(f) + " does not have " + std::to_string(J) +
                        " joints");
      }
      for (std::size_t k = 0; k < J; ++k) {
        if (row[k].is_null()) {
          seq.mask().set(f, k, false);
          continue;
        }
        const Vec2 p{row[k].at(0).get<double>(), row[k].at(1).get<double>()};
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DataError("non-finite coordinate");
        seq.at(f, k) = p;
      }
    }
    if (j.contains("fps") && !j.at("fps").is_null()) seq.fps = j.at("fps").get<double>();
    file.sequence = std::move(seq);
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed pose record: ") + e.what());
  }
}

inline void write_pose_file(const std::filesystem::path& path, const PoseSequence& seq,
                            const SkeletonTopology& topo) {
  write_text_file(path, pose_to_json(seq, topo).dump() + "\n");
}

inline PoseFile read_pose_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return pose_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline SkeletonTopology read_topology_file(const std::filesystem::path& path) {
  try {
    return topology_from_json(nlohmann::json::parse(read_text_file(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

}  // namespace jumps
