#include "choreokit/pose_processing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "choreokit/error.hpp"

namespace choreokit {

PoseSequence interpolate_missing(const PoseSequence& seq) {
  PoseSequence out = seq;
  const std::size_t n = seq.size();
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (is_extremity(j)) continue;
    std::vector<std::size_t> valid;
    for (std::size_t f = 0; f < n; ++f)
      if (seq.frames[f].keypoints[j].confidence > 0.0) valid.push_back(f);
    if (valid.empty() || valid.size() == n) continue;

    std::size_t next = 0;  // first entry of `valid` that is >= f
    for (std::size_t f = 0; f < n; ++f) {
      while (next < valid.size() && valid[next] < f) ++next;
      if (next < valid.size() && valid[next] == f) continue;
      Keypoint& k = out.frames[f].keypoints[j];
      if (next == 0) {
        k = seq.frames[valid.front()].keypoints[j];
      } else if (next == valid.size()) {
        k = seq.frames[valid.back()].keypoints[j];
      } else {
        const std::size_t lo = valid[next - 1], hi = valid[next];
        const Keypoint& a = seq.frames[lo].keypoints[j];
        const Keypoint& b = seq.frames[hi].keypoints[j];
        const double t = static_cast<double>(f - lo) / static_cast<double>(hi - lo);
        k.x = a.x + t * (b.x - a.x);
        k.y = a.y + t * (b.y - a.y);
        k.confidence = std::min(a.confidence, b.confidence);
      }
    }
  }
  return out;
}

PoseSequence smooth_sequence(const PoseSequence& seq, double jitter_threshold) {
  PoseSequence out = seq;
  if (seq.size() < 3) return out;
  // Left neighbours are read from `out` (already final), right neighbours
  // from the input. Neighbours must lie within 2x the threshold of each
  // other, so the midpoint is never itself a spike; together these make a
  // second pass a no-op.
  for (std::size_t f = 1; f + 1 < seq.size(); ++f) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      const Keypoint& prev = out.frames[f - 1].keypoints[j];
      const Keypoint& next = seq.frames[f + 1].keypoints[j];
      Keypoint& cur = out.frames[f].keypoints[j];
      if (distance(cur, prev) > jitter_threshold && distance(cur, next) > jitter_threshold &&
          distance(prev, next) <= 2.0 * jitter_threshold) {
        cur.x = 0.5 * (prev.x + next.x);
        cur.y = 0.5 * (prev.y + next.y);
      }
    }
  }
  return out;
}

double mean_displacement(const PoseFrame& a, const PoseFrame& b) {
  double sum = 0.0;
  for (std::size_t j = 0; j < kNumJoints; ++j) sum += distance(a.keypoints[j], b.keypoints[j]);
  return sum / static_cast<double>(kNumJoints);
}

FilterResult filter_invalid_frames(const PoseSequence& seq, double distance_threshold) {
  FilterResult result;
  result.sequence.fps = seq.fps;
  result.sequence.resolution = seq.resolution;
  const PoseFrame* last_retained = nullptr;
  for (const PoseFrame& frame : seq.frames) {
    bool missing_extremity = false;
    for (Joint j : kExtremityJoints)
      if (frame[j].confidence <= 0.0) missing_extremity = true;
    const bool too_far = last_retained != nullptr &&
                         mean_displacement(frame, *last_retained) > distance_threshold;
    if (missing_extremity || too_far) {
      result.removed.push_back(frame.frame_index);
    } else {
      result.sequence.frames.push_back(frame);
      last_retained = &frame;
    }
  }
  if (result.sequence.empty())
    throw InvariantError("filter_invalid_frames: every frame was removed");
  return result;
}

std::vector<PoseSequence> split_contiguous(const PoseSequence& seq) {
  std::vector<PoseSequence> runs;
  for (std::size_t f = 0; f < seq.size(); ++f) {
    if (f == 0 || seq.frames[f].frame_index != seq.frames[f - 1].frame_index + 1) {
      runs.emplace_back();
      runs.back().fps = seq.fps;
      runs.back().resolution = seq.resolution;
    }
    runs.back().frames.push_back(seq.frames[f]);
  }
  return runs;
}

std::vector<PoseFragment> segment_fragments(const PoseSequence& seq, int duration_s,
                                            const std::string& source_id) {
  if (duration_s < 1 || duration_s > 4)
    throw InvariantError("fragment duration must be 1..4 s, got " + std::to_string(duration_s));
  const std::size_t window = static_cast<std::size_t>(duration_s) * static_cast<std::size_t>(seq.fps);
  std::vector<PoseFragment> out;
  for (std::size_t start = 0; start + window <= seq.size(); start += window) {
    PoseFragment frag;
    frag.duration_s = duration_s;
    frag.source_id = source_id;
    frag.frames.fps = seq.fps;
    frag.frames.resolution = seq.resolution;
    frag.frames.frames.assign(seq.frames.begin() + static_cast<std::ptrdiff_t>(start),
                              seq.frames.begin() + static_cast<std::ptrdiff_t>(start + window));
    frag.start_frame = frag.frames.frames.front().frame_index;
    out.push_back(std::move(frag));
  }
  return out;
}

double body_height(const PoseSequence& seq) {
  double best = 0.0;
  for (const PoseFrame& f : seq.frames) {
    const Keypoint& nose = f[Joint::kNose];
    if (nose.confidence <= 0.0) continue;
    for (Joint ankle : {Joint::kLeftAnkle, Joint::kRightAnkle}) {
      if (f[ankle].confidence <= 0.0) continue;
      best = std::max(best, std::abs(f[ankle].y - nose.y));
    }
  }
  return best;
}

Eigen::Vector2d centroid(const PoseSequence& seq) {
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  std::size_t count = 0;
  for (const PoseFrame& f : seq.frames)
    for (const Keypoint& k : f.keypoints)
      if (k.confidence > 0.0) {
        sum += Eigen::Vector2d(k.x, k.y);
        ++count;
      }
  return count == 0 ? sum : Eigen::Vector2d(sum / static_cast<double>(count));
}

PoseSequence translate(const PoseSequence& seq, const Eigen::Vector2d& offset) {
  PoseSequence out = seq;
  for (PoseFrame& f : out.frames)
    for (Keypoint& k : f.keypoints) {
      k.x += offset.x();
      k.y += offset.y();
    }
  return out;
}

PoseSequence scale_about(const PoseSequence& seq, const Eigen::Vector2d& center, double factor) {
  PoseSequence out = seq;
  for (PoseFrame& f : out.frames)
    for (Keypoint& k : f.keypoints) {
      k.x = center.x() + factor * (k.x - center.x());
      k.y = center.y() + factor * (k.y - center.y());
    }
  return out;
}

PoseFragment normalize_fragment(const PoseFragment& frag, double target_height) {
  const double height = body_height(frag.frames);
  if (!(height > 0.0))
    throw InvariantError("normalize_fragment: no frame has a nose-to-ankle extent in " +
                         frag.id());
  PoseFragment out = frag;
  out.frames = scale_about(frag.frames, centroid(frag.frames), target_height / height);
  return out;
}

}  // namespace choreokit
