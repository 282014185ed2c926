#pragma once

#include <filesystem>
#include <string>

#include "choreokit/pose.hpp"

namespace choreokit {

// Keypoint files are one JSON document per source video:
//   { "fps": 24, "width": 1920, "height": 1080,
//     "frames": [ [ [x, y, c] x 18 ], ... ] }
// Frame indices are implicit (position in "frames"), except that files we
// write after filtering may carry an optional "frame_indices" array.
PoseSequence parse_keypoint_json(const std::string& text);
PoseSequence load_keypoint_sequence(const std::filesystem::path& path);

std::string to_keypoint_json(const PoseSequence& seq);
void save_keypoint_sequence(const PoseSequence& seq, const std::filesystem::path& path);

}  // namespace choreokit
