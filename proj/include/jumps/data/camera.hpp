#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "jumps/core/pose_sequence.hpp"
#include "jumps/core/topology.hpp"

namespace jumps {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(Vec3, Vec3) = default;
};

inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }

// Row-major 3x3.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Mat3 identity() { return {}; }
  static Mat3 from_rows(Vec3 r0, Vec3 r1, Vec3 r2) {
    return {{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
  }
  static Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{1, 0, 0, 0, c, -s, 0, s, c}};
  }
  static Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, 0, s, 0, 1, 0, -s, 0, c}};
  }
  static Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, -s, 0, s, c, 0, 0, 0, 1}};
  }

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }
  Vec3 row(int r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }

  friend Vec3 operator*(const Mat3& a, Vec3 v) {
    return {dot(a.row(0), v), dot(a.row(1), v), dot(a.row(2), v)};
  }
  friend Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 out;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += a(r, k) * b(k, c);
        out.m[static_cast<std::size_t>(r * 3 + c)] = s;
      }
    }
    return out;
  }
};

// F x J world-space joint positions (meters, z up).
struct Pose3DSequence {
  std::string topology = kFullTopologyName;
  std::size_t frames = 0;
  std::size_t joints = 0;
  std::vector<Vec3> positions;
  std::optional<double> fps;

  Pose3DSequence() = default;
  Pose3DSequence(std::size_t f, std::size_t j) : frames(f), joints(j), positions(f * j) {}

  Vec3& at(std::size_t f, std::size_t j) { return positions[f * joints + j]; }
  const Vec3& at(std::size_t f, std::size_t j) const { return positions[f * joints + j]; }

  Vec3 centroid() const {
    Vec3 c;
    for (const auto& p : positions) c = c + p;
    return (1.0 / static_cast<double>(positions.size())) * c;
  }
};

// Pinhole camera. Rows of `rotation` are the camera's right, down and
// forward axes expressed in world coordinates.
struct CameraModel {
  double focal_length = 1.0;
  Vec2 center;
  Mat3 rotation;
  Vec3 position;

  Vec3 to_camera(Vec3 world) const { return rotation * (world - position); }
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct CameraRanges {
  Range azimuth_deg{0.0, 360.0};
  Range elevation_deg{-15.0, 30.0};
  Range distance{4.0, 7.0};
  Range roll_deg{0.0, 0.0};
  double focal_length = 1.0;
};

// Perspective projection of every joint. Throws DataError when a joint is not
// strictly in front of the camera.
inline PoseSequence project(const Pose3DSequence& seq, const CameraModel& cam) {
  PoseSequence out(seq.frames, seq.joints);
  for (std::size_t f = 0; f < seq.frames; ++f) {
    for (std::size_t j = 0; j < seq.joints; ++j) {
      const Vec3 p = cam.to_camera(seq.at(f, j));
      if (!(p.z > 0.0)) throw DataError("joint behind the camera");
      out.at(f, j) = {cam.focal_length * p.x / p.z + cam.center.x,
                      cam.focal_length * p.y / p.z + cam.center.y};
    }
  }
  out.fps = seq.fps;
  return out;
}

// Camera looking at `target` from the given spherical placement.
inline CameraModel look_at_camera(Vec3 target, double azimuth_rad, double elevation_rad,
                                  double distance, double roll_rad, double focal_length) {
  const Vec3 offset{std::cos(elevation_rad) * std::cos(azimuth_rad),
                    std::cos(elevation_rad) * std::sin(azimuth_rad), std::sin(elevation_rad)};
  CameraModel cam;
  cam.focal_length = focal_length;
  cam.position = target + distance * offset;
  const Vec3 forward = normalized(target - cam.position);
  const Vec3 right0 = normalized(cross(forward, Vec3{0, 0, 1}));
  const Vec3 down0 = cross(forward, right0);
  const double c = std::cos(roll_rad), s = std::sin(roll_rad);
  const Vec3 right = c * right0 + s * down0;
  const Vec3 down = c * down0 - s * right0;
  cam.rotation = Mat3::from_rows(right, down, forward);
  return cam;
}

// Deterministic given `seed`. Azimuth is drawn from [min, max), the other
// parameters from their closed bands; the camera aims at `target`.
inline CameraModel sample_camera(std::uint64_t seed, const CameraRanges& ranges, Vec3 target) {
  for (const Range* r : {&ranges.azimuth_deg, &ranges.elevation_deg, &ranges.distance, &ranges.roll_deg}) {
    if (!(r->min <= r->max)) throw ConfigError("camera range is empty (min > max)");
  }
  if (!(ranges.distance.min > 0.0)) throw ConfigError("camera distance must be positive");
  if (!(ranges.focal_length > 0.0)) throw ConfigError("focal length must be positive");
  if (std::abs(ranges.elevation_deg.min) >= 90.0 || std::abs(ranges.elevation_deg.max) >= 90.0) {
    throw ConfigError("camera elevation must lie strictly inside (-90, 90) degrees");
  }
  std::mt19937_64 rng(seed);
  auto draw = [&](const Range& r) {
    return r.min == r.max ? r.min : std::uniform_real_distribution<double>(r.min, r.max)(rng);
  };
  constexpr double deg = std::numbers::pi / 180.0;
  const double az = draw(ranges.azimuth_deg);
  const double el = draw(ranges.elevation_deg);
  const double dist = draw(ranges.distance);
  const double roll = draw(ranges.roll_deg);
  return look_at_camera(target, az * deg, el * deg, dist, roll * deg, ranges.focal_length);
}

}  // namespace jumps
