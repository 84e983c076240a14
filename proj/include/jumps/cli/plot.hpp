#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "jumps/core/pose_sequence.hpp"
#include "jumps/core/topology.hpp"

namespace jumps {

struct PlotLayer {
  std::string label;
  PoseSequence sequence;
  SkeletonTopology topology;
};

// Side-by-side panels, one per frame, every layer drawn as bone segments.
// Layers must share a frame count; the first layer fixes the viewport.
std::string skeleton_svg(const std::vector<PlotLayer>& layers, const std::vector<std::size_t>& frames);

// PCKh-vs-threshold curves of every row in a report written by write_report.
std::string pckh_svg(const nlohmann::json& report);

}  // namespace jumps
