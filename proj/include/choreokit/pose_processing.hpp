#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "choreokit/pose.hpp"

namespace choreokit {

inline constexpr double kDefaultJitterThreshold = 10.0;
inline constexpr double kDefaultTeleportThreshold = 100.0;
inline constexpr double kDefaultTargetHeight = 600.0;

// Fills keypoints with zero confidence (other than wrists and ankles, whose
// absence invalidates the frame) by linear interpolation between the nearest
// frames where the joint was detected. Interpolated keypoints take the lower
// confidence of the two anchors.
PoseSequence interpolate_missing(const PoseSequence& seq);

// Replaces isolated single-frame spikes by the midpoint of their temporal
// neighbours. A keypoint is a spike when it is farther than
// `jitter_threshold` from both neighbours while the neighbours themselves
// are within 2 * `jitter_threshold` of each other. Idempotent.
PoseSequence smooth_sequence(const PoseSequence& seq,
                             double jitter_threshold = kDefaultJitterThreshold);

struct FilterResult {
  PoseSequence sequence;
  std::vector<std::int64_t> removed;  // frame indices, ascending
};

// Mean per-keypoint displacement between two frames.
double mean_displacement(const PoseFrame& a, const PoseFrame& b);

// Drops frames where a wrist or ankle is undetected, and frames that are
// farther than `distance_threshold` (mean keypoint displacement) from the
// last retained frame. Throws InvariantError if nothing survives.
FilterResult filter_invalid_frames(const PoseSequence& seq,
                                   double distance_threshold = kDefaultTeleportThreshold);

// Splits a sequence at gaps in frame_index.
std::vector<PoseSequence> split_contiguous(const PoseSequence& seq);

// Non-overlapping windows of duration_s * fps frames; the tail is dropped.
std::vector<PoseFragment> segment_fragments(const PoseSequence& seq, int duration_s,
                                            const std::string& source_id = {});

// Scales the fragment about its centroid so that the largest vertical
// nose-to-ankle distance equals target_height.
PoseFragment normalize_fragment(const PoseFragment& frag, double target_height);

// The largest vertical nose-to-ankle distance over all frames (0 when no
// frame has both a nose and an ankle).
double body_height(const PoseSequence& seq);

// Mean position of all detected keypoints.
Eigen::Vector2d centroid(const PoseSequence& seq);

PoseSequence translate(const PoseSequence& seq, const Eigen::Vector2d& offset);
PoseSequence scale_about(const PoseSequence& seq, const Eigen::Vector2d& center,
                         double factor);

}  // namespace choreokit
