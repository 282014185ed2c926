#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "choreokit/beats.hpp"
#include "choreokit/pose.hpp"
#include "choreokit/tsd.hpp"

namespace choreokit {

inline constexpr double kDefaultDiscontinuityThreshold = 10.0;

struct AlignmentWindows {
  int repair = 8;       // omega_a
  int reference = 24;   // omega_b
  int beat_search = 12; // omega_c, used when the beat track gives no spacing

  void validate() const;  // reference > repair >= 2, beat_search >= 2
};

// Frames k >= 1 where any keypoint moved farther than `threshold` from
// frame k-1.
std::vector<std::size_t> detect_discontinuities(const PoseSequence& seq,
                                                double threshold = kDefaultDiscontinuityThreshold);

// The line through the first and last sample.
struct EndpointLine {
  double start = 0.0;
  double slope = 0.0;
  double operator()(double i) const { return start + slope * i; }
};
EndpointLine linear_fit_endpoints(std::span<const double> values);

struct SpatialAlignOptions {
  AlignmentWindows windows{};
  double volatility_threshold = kDefaultVolatilityThreshold;
  double discontinuity_threshold = kDefaultDiscontinuityThreshold;
};

// Repairs one coordinate series in the window [start, end] (inclusive) from
// the preceding reference frames. Exposed for tests.
void repair_window(std::vector<double>& series, std::size_t start, std::size_t end,
                   const SpatialAlignOptions& options);

// Scans for discontinuities and rebuilds the window of repair+1 frames
// centred on each one from TSD models of the reference frames before it.
// Window endpoints and frames outside repaired windows are untouched.
PoseSequence spatial_align(const PoseSequence& seq, const SpatialAlignOptions& options = {});

// Windows [begin, end) each holding one musical beat.
struct BeatWindow {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::int64_t beat = -1;  // -1: no musical beat
};

// Fixed grid of width omega_c starting at frame 0 (the tail is dropped).
std::vector<BeatWindow> grid_windows(std::size_t frames, std::size_t width);

// One window per musical beat, split at the midpoints between consecutive
// beats; the first and last extend half a beat spacing outward.
std::vector<BeatWindow> beat_windows(const BeatTrack& beats, std::size_t frames,
                                     std::size_t fallback_width);

// Sum over joints of the keypoint displacement from frame j-1 to j (0 for
// j = 0).
double frame_movement(const PoseSequence& seq, std::size_t j);

// Frame of maximal movement in each window; ties go to the earliest frame.
std::vector<std::size_t> find_pose_beats(const PoseSequence& seq, std::span<const BeatWindow> windows);
std::vector<std::size_t> find_pose_beats(const PoseSequence& seq, std::size_t omega_c);

// Moves the pose beat of each window onto its musical beat by remapping
// [begin, mu] onto [begin, beat] and (mu, end) onto (beat, end), refitting
// each coordinate with an endpoint-constrained least-squares cubic.
PoseSequence temporal_align(const PoseSequence& seq, const BeatTrack& beats,
                            std::size_t fallback_width = 12);
PoseSequence temporal_align(const PoseSequence& seq, std::span<const BeatWindow> windows);

}  // namespace choreokit
