#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "choreokit/skeleton.hpp"

namespace choreokit {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct PoseFrame {
  std::array<Keypoint, kNumJoints> keypoints{};
  std::int64_t frame_index = 0;

  const Keypoint& operator[](Joint j) const { return keypoints[index(j)]; }
  Keypoint& operator[](Joint j) { return keypoints[index(j)]; }

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

struct Resolution {
  int width = 1920;
  int height = 1080;

  friend bool operator==(const Resolution&, const Resolution&) = default;
};

inline constexpr int kDefaultFps = 24;

struct PoseSequence {
  std::vector<PoseFrame> frames;
  int fps = kDefaultFps;
  Resolution resolution{};

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
  double duration_s() const { return static_cast<double>(frames.size()) / fps; }

  friend bool operator==(const PoseSequence&, const PoseSequence&) = default;
};

// Unified-space feature for either modality.
using EmbeddingVec = Eigen::VectorXd;

struct PoseFragment {
  PoseSequence frames;
  int duration_s = 4;
  std::string source_id;
  // Frame index (in the source video) of the first frame.
  std::int64_t start_frame = 0;
  std::optional<EmbeddingVec> embedding;

  std::string id() const { return source_id + ":" + std::to_string(start_frame); }
  std::size_t length() const { return frames.size(); }

  friend bool operator==(const PoseFragment& a, const PoseFragment& b) {
    if (!(a.frames == b.frames && a.duration_s == b.duration_s &&
          a.source_id == b.source_id && a.start_frame == b.start_frame))
      return false;
    if (a.embedding.has_value() != b.embedding.has_value()) return false;
    return !a.embedding || (a.embedding->size() == b.embedding->size() &&
                               *a.embedding == *b.embedding);
  }
};

// Euclidean distance between the 2D positions of two keypoints.
double distance(const Keypoint& a, const Keypoint& b);

}  // namespace choreokit
