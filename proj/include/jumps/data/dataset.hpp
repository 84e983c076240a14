#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "jumps/core/alignment.hpp"
#include "jumps/core/pose_io.hpp"
#include "jumps/data/chunk.hpp"
#include "jumps/data/synth.hpp"
#include "jumps/util/parallel.hpp"

namespace jumps {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr std::size_t kRecordsPerShard = 1024;

struct DatasetSpec {
  std::size_t chunk_length = 24;
  std::size_t stride = 24;
  std::size_t cameras_per_sequence = 4;
  std::uint64_t random_seed = 0;
  std::size_t count = 4096;  // upper bound on emitted chunks
  CameraRanges camera;
  std::size_t synthetic_sequences = 0;
  MotionSpec motion;
  std::vector<std::string> sources;  // 3D pose files
};

inline void validate(const DatasetSpec& spec) {
  if (spec.chunk_length < 2) throw ConfigError("chunk_length must be >= 2");
  if (spec.stride < 1 || spec.stride > spec.chunk_length) {
    throw ConfigError("stride must lie in [1, chunk_length]");
  }
  if (spec.cameras_per_sequence < 1) throw ConfigError("cameras_per_sequence must be >= 1");
  if (spec.synthetic_sequences == 0 && spec.sources.empty()) {
    throw ConfigError("dataset spec has neither synthetic sequences nor sources");
  }
  if (spec.synthetic_sequences > 0) {
    validate(spec.motion);
    if (spec.motion.frames < spec.chunk_length) {
      throw ConfigError("synthetic motion is shorter than chunk_length");
    }
  }
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.min, r.max}); }

inline Range range_from(const nlohmann::json& j, const char* key, Range fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  return {v.at(0).get<double>(), v.at(1).get<double>()};
}

}  // namespace detail

inline nlohmann::json to_json(const CameraRanges& c) {
  return {{"azimuth_deg", detail::range_json(c.azimuth_deg)},
          {"elevation_deg", detail::range_json(c.elevation_deg)},
          {"distance", detail::range_json(c.distance)},
          {"roll_deg", detail::range_json(c.roll_deg)},
          {"focal_length", c.focal_length}};
}

inline CameraRanges camera_ranges_from_json(const nlohmann::json& j) {
  CameraRanges c;
  c.azimuth_deg = detail::range_from(j, "azimuth_deg", c.azimuth_deg);
  c.elevation_deg = detail::range_from(j, "elevation_deg", c.elevation_deg);
  c.distance = detail::range_from(j, "distance", c.distance);
  c.roll_deg = detail::range_from(j, "roll_deg", c.roll_deg);
  c.focal_length = j.value("focal_length", c.focal_length);
  return c;
}

inline nlohmann::json to_json(const MotionSpec& m) {
  return {{"frames", m.frames},
          {"fps", m.fps},
          {"sinusoids", m.sinusoids},
          {"max_frequency", m.max_frequency},
          {"gait_frequency", detail::range_json(m.gait_frequency)},
          {"amplitude_scale", detail::range_json(m.amplitude_scale)},
          {"detail_amplitude", m.detail_amplitude},
          {"root_amplitude", m.root_amplitude},
          {"bone_scale", detail::range_json(m.bone_scale)},
          {"bone_lengths", m.bone_lengths}};
}

inline MotionSpec motion_spec_from_json(const nlohmann::json& j) {
  MotionSpec m;
  m.frames = j.value("frames", m.frames);
  m.fps = j.value("fps", m.fps);
  m.sinusoids = j.value("sinusoids", m.sinusoids);
  m.max_frequency = j.value("max_frequency", m.max_frequency);
  m.gait_frequency = detail::range_from(j, "gait_frequency", m.gait_frequency);
  m.amplitude_scale = detail::range_from(j, "amplitude_scale", m.amplitude_scale);
  m.detail_amplitude = j.value("detail_amplitude", m.detail_amplitude);
  m.root_amplitude = j.value("root_amplitude", m.root_amplitude);
  m.bone_scale = detail::range_from(j, "bone_scale", m.bone_scale);
  if (j.contains("bone_lengths")) m.bone_lengths = j.at("bone_lengths").get<std::map<std::string, double>>();
  return m;
}

inline nlohmann::json to_json(const DatasetSpec& s) {
  nlohmann::json j{{"chunk_length", s.chunk_length},
                   {"stride", s.stride},
                   {"cameras_per_sequence", s.cameras_per_sequence},
                   {"random_seed", s.random_seed},
                   {"count", s.count},
                   {"camera", to_json(s.camera)},
                   {"sources", s.sources}};
  if (s.synthetic_sequences > 0) {
    j["synthetic"] = {{"sequences", s.synthetic_sequences}, {"motion", to_json(s.motion)}};
  }
  return j;
}

inline DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
  try {
    DatasetSpec s;
    s.chunk_length = j.value("chunk_length", s.chunk_length);
    s.stride = j.value("stride", s.chunk_length);
    s.cameras_per_sequence = j.value("cameras_per_sequence", s.cameras_per_sequence);
    s.random_seed = j.value("random_seed", s.random_seed);
    s.count = j.value("count", s.count);
    if (j.contains("camera")) s.camera = camera_ranges_from_json(j.at("camera"));
    if (j.contains("synthetic")) {
      s.synthetic_sequences = j.at("synthetic").value("sequences", std::size_t{0});
      if (j.at("synthetic").contains("motion")) {
        s.motion = motion_spec_from_json(j.at("synthetic").at("motion"));
      }
    }
    if (j.contains("sources")) s.sources = j.at("sources").get<std::vector<std::string>>();
    validate(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed dataset spec: ") + e.what());
  }
}

// 3D pose file: {"version": 1, "topology": name, "fps": n|null,
// "frames": [[[x, y, z], ...], ...]}.
inline Pose3DSequence read_pose3d_file(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(read_text_file(path));
    const auto topo = resolve_topology(j.at("topology"));
    const auto& frames = j.at("frames");
    if (frames.empty()) throw DataError("'" + path.string() + "' has no frames");
    Pose3DSequence seq(frames.size(), topo.joint_count());
    seq.topology = topo.name;
    for (std::size_t f = 0; f < frames.size(); ++f) {
      if (frames[f].size() != topo.joint_count()) throw DataError("3D frame has wrong joint count");
      for (std::size_t k = 0; k < topo.joint_count(); ++k) {
        const auto& p = frames[f][k];
        seq.at(f, k) = {p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
        if (!std::isfinite(seq.at(f, k).x) || !std::isfinite(seq.at(f, k).y) ||
            !std::isfinite(seq.at(f, k).z)) {
          throw DataError("non-finite 3D coordinate in '" + path.string() + "'");
        }
      }
    }
    if (j.contains("fps") && !j.at("fps").is_null()) seq.fps = j.at("fps").get<double>();
    return seq;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed 3D pose file '" + path.string() + "': " + e.what());
  }
}

inline void write_pose3d_file(const std::filesystem::path& path, const Pose3DSequence& seq) {
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t f = 0; f < seq.frames; ++f) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < seq.joints; ++k) {
      row.push_back({seq.at(f, k).x, seq.at(f, k).y, seq.at(f, k).z});
    }
    frames.push_back(std::move(row));
  }
  nlohmann::json j{{"version", 1}, {"topology", seq.topology}, {"frames", frames}};
  j["fps"] = seq.fps ? nlohmann::json(*seq.fps) : nlohmann::json(nullptr);
  write_text_file(path, j.dump() + "\n");
}

// ---------------------------------------------------------------------------
// Building

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Projects one 3D sequence through `cameras` random viewpoints, chunks every
// projection and normalizes each chunk. Cameras are resampled while any
// joint falls behind them.
inline std::vector<PoseSequence> project_and_chunk(const Pose3DSequence& seq3d,
                                                   const DatasetSpec& spec,
                                                   std::uint64_t stream_seed) {
  std::vector<PoseSequence> out;
  const Vec3 target = seq3d.centroid();
  for (std::size_t c = 0; c < spec.cameras_per_sequence; ++c) {
    std::optional<PoseSequence> projected;
    for (int attempt = 0; attempt < 32 && !projected; ++attempt) {
      const auto cam = sample_camera(derive_seed(stream_seed, c, attempt), spec.camera, target);
      try {
        projected = project(seq3d, cam);
      } catch (const DataError&) {
      }
    }
    if (!projected) throw DataError("could not place a camera in front of the subject");
    for (auto& piece : chunk(*projected, spec.chunk_length, spec.stride)) {
      out.push_back(normalize(piece));
    }
  }
  return out;
}

struct Dataset {
  SkeletonTopology topology;
  std::vector<PoseSequence> sequences;
  nlohmann::json manifest;
};

inline Dataset build_dataset(const DatasetSpec& spec, std::size_t workers = 1) {
  validate(spec);
  const std::size_t total_sources = spec.synthetic_sequences + spec.sources.size();
  auto per_source = parallel_map(total_sources, workers, [&](std::size_t i) {
    const std::uint64_t stream = derive_seed(spec.random_seed, i);
    Pose3DSequence seq3d = i < spec.synthetic_sequences
                               ? synth_motion(spec.motion, derive_seed(stream, 0xA11CE))
                               : read_pose3d_file(spec.sources[i - spec.synthetic_sequences]);
    if (seq3d.topology != kFullTopologyName) {
      throw DataError("3D sources must use the '" + std::string(kFullTopologyName) + "' topology");
    }
    if (seq3d.frames < spec.chunk_length) throw DataError("3D source shorter than chunk_length");
    return project_and_chunk(seq3d, spec, stream);
  });
  Dataset ds{full_topology(), {}, {}};
  for (auto& chunks : per_source) {
    for (auto& c : chunks) {
      if (ds.sequences.size() == spec.count) break;
      c.norm = AffineTransform2D::identity();
      ds.sequences.push_back(std::move(c));
    }
  }
  return ds;
}

// Writes `manifest` plus shard-NNNNN.jsonl files (one pose record per line).
inline void write_dataset(const std::filesystem::path& dir, const Dataset& ds,
                          const nlohmann::json& spec_echo, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  std::size_t shards = 0;
  for (std::size_t begin = 0; begin < ds.sequences.size(); begin += kRecordsPerShard, ++shards) {
    std::string text;
    const std::size_t end = std::min(ds.sequences.size(), begin + kRecordsPerShard);
    for (std::size_t i = begin; i < end; ++i) text += pose_to_json(ds.sequences[i], ds.topology).dump() + "\n";
    hash = fnv1a64(text, hash);
    char name[48];
    std::snprintf(name, sizeof name, "shard-%05zu.jsonl", shards);
    write_text_file(dir / name, text);
  }
  nlohmann::json manifest{
      {"format", "jumps-dataset"},
      {"version", kDatasetFormatVersion},
      {"spec", spec_echo},
      {"seed", seed},
      {"topology", ds.topology.name},
      {"counts",
       {{"sequences", ds.sequences.size()},
        {"shards", shards},
        {"frames", ds.sequences.empty() ? 0 : ds.sequences.front().frames()},
        {"joints", ds.topology.joint_count()}}},
      {"content_hash", "fnv1a64:" + hex64(hash)}};
  write_text_file(dir / "manifest", manifest.dump(2) + "\n");
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("dataset directory '" + dir.string() + "' not found");
  Dataset ds;
  try {
    ds.manifest = nlohmann::json::parse(read_text_file(dir / "manifest"));
    if (ds.manifest.at("format") != "jumps-dataset" || ds.manifest.at("version") != kDatasetFormatVersion) {
      throw DataError("'" + dir.string() + "' is not a supported dataset");
    }
    ds.topology = resolve_topology(ds.manifest.at("topology"));
    const std::size_t shards = ds.manifest.at("counts").at("shards");
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t s = 0; s < shards; ++s) {
      char name[48];
      std::snprintf(name, sizeof name, "shard-%05zu.jsonl", s);
      const std::string text = read_text_file(dir / name);
      hash = fnv1a64(text, hash);
      std::size_t pos = 0;
      while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        if (eol > pos) {
          auto rec = pose_from_json(nlohmann::json::parse(text.substr(pos, eol - pos)));
          if (rec.topology.name != ds.topology.name) throw DataError("record topology mismatch");
          ds.sequences.push_back(std::move(rec.sequence));
        }
        pos = eol + 1;
      }
    }
    if ("fnv1a64:" + hex64(hash) != ds.manifest.at("content_hash").get<std::string>()) {
      throw DataError("dataset '" + dir.string() + "' content hash mismatch");
    }
    if (ds.sequences.size() != ds.manifest.at("counts").at("sequences").get<std::size_t>()) {
      throw DataError("dataset '" + dir.string() + "' record count mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed dataset '" + dir.string() + "': " + e.what());
  }
  return ds;
}

}  // namespace jumps
