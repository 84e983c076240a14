#pragma once

#include <cstddef>
#include <vector>

#include "jumps/core/pose_sequence.hpp"

namespace jumps {

struct Window {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  friend bool operator==(const Window&, const Window&) = default;
};

// Windows starting at 0, stride, 2 stride, ... plus a tail-aligned window
// ending at `length` when the strided ones miss the last frames.
inline std::vector<Window> chunk_windows(std::size_t length, std::size_t window, std::size_t stride) {
  if (window == 0 || stride == 0 || stride > window) {
    throw ConfigError("chunking requires 1 <= stride <= window");
  }
  if (length < window) throw DataError("sequence shorter than the chunk length");
  std::vector<Window> out;
  std::size_t begin = 0;
  for (; begin + window <= length; begin += stride) out.push_back({begin, begin + window});
  if (out.back().end != length) out.push_back({length - window, length});
  return out;
}

inline std::vector<PoseSequence> chunk(const PoseSequence& seq, std::size_t window, std::size_t stride) {
  std::vector<PoseSequence> out;
  for (const auto& w : chunk_windows(seq.frames(), window, stride)) {
    out.push_back(seq.slice(w.begin, window));
  }
  return out;
}

}  // namespace jumps
