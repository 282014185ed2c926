#include "choreokit/pose_io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "choreokit/error.hpp"
#include "file_util.hpp"

namespace choreokit {

using nlohmann::json;

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

int required_int(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw SchemaError(std::string("missing \"") + key + "\"");
  if (!it->is_number_integer())
    throw SchemaError(std::string("\"") + key + "\" must be an integer");
  return it->get<int>();
}

}  // namespace

double distance(const Keypoint& a, const Keypoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

PoseSequence parse_keypoint_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("keypoint file: line " + std::to_string(line_of(text, e.byte)) + ": " +
                     e.what());
  }
  if (!doc.is_object()) throw SchemaError("keypoint file: top level must be an object");

  PoseSequence seq;
  seq.fps = required_int(doc, "fps");
  seq.resolution.width = required_int(doc, "width");
  seq.resolution.height = required_int(doc, "height");
  if (seq.fps <= 0) throw SchemaError("fps must be positive");

  auto frames = doc.find("frames");
  if (frames == doc.end() || !frames->is_array())
    throw SchemaError("missing \"frames\" array");

  std::vector<std::int64_t> indices;
  if (auto it = doc.find("frame_indices"); it != doc.end()) {
    if (!it->is_array() || it->size() != frames->size())
      throw SchemaError("\"frame_indices\" must match \"frames\" in length");
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw SchemaError("frame index must be an integer");
      indices.push_back(v.get<std::int64_t>());
    }
  }

  seq.frames.reserve(frames->size());
  for (std::size_t f = 0; f < frames->size(); ++f) {
    const json& jf = (*frames)[f];
    if (!jf.is_array() || jf.size() != kNumJoints)
      throw SchemaError("frame " + std::to_string(f) + ": expected " +
                        std::to_string(kNumJoints) + " keypoints, got " +
                        std::to_string(jf.is_array() ? jf.size() : 0));
    PoseFrame frame;
    frame.frame_index = indices.empty() ? static_cast<std::int64_t>(f) : indices[f];
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const json& kp = jf[j];
      if (!kp.is_array() || kp.size() != 3 || !kp[0].is_number() || !kp[1].is_number() ||
          !kp[2].is_number())
        throw SchemaError("frame " + std::to_string(f) + ", keypoint " + std::to_string(j) +
                          ": expected [x, y, confidence]");
      Keypoint& k = frame.keypoints[j];
      k.x = kp[0].get<double>();
      k.y = kp[1].get<double>();
      k.confidence = kp[2].get<double>();
      if (!(k.confidence >= 0.0 && k.confidence <= 1.0))
        throw SchemaError("frame " + std::to_string(f) + ", keypoint " + std::to_string(j) +
                          ": confidence outside [0, 1]");
    }
    if (!seq.frames.empty() && frame.frame_index <= seq.frames.back().frame_index)
      throw SchemaError("frame " + std::to_string(f) + ": frame indices must increase");
    seq.frames.push_back(frame);
  }
  return seq;
}

PoseSequence load_keypoint_sequence(const std::filesystem::path& path) {
  try {
    return parse_keypoint_json(detail::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

std::string to_keypoint_json(const PoseSequence& seq) {
  json doc;
  doc["fps"] = seq.fps;
  doc["width"] = seq.resolution.width;
  doc["height"] = seq.resolution.height;
  json frames = json::array();
  bool contiguous_from_zero = true;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    if (seq.frames[f].frame_index != static_cast<std::int64_t>(f)) contiguous_from_zero = false;
    json jf = json::array();
    for (const Keypoint& k : seq.frames[f].keypoints) jf.push_back({k.x, k.y, k.confidence});
    frames.push_back(std::move(jf));
  }
  doc["frames"] = std::move(frames);
  if (!contiguous_from_zero) {
    json idx = json::array();
    for (const auto& f : seq.frames) idx.push_back(f.frame_index);
    doc["frame_indices"] = std::move(idx);
  }
  return doc.dump();
}

void save_keypoint_sequence(const PoseSequence& seq, const std::filesystem::path& path) {
  detail::write_file(path, to_keypoint_json(seq));
}

}  // namespace choreokit
