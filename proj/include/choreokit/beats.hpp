#pragma once

#include <cstdint>
#include <vector>

#include "choreokit/audio.hpp"

namespace choreokit {

struct BeatTrack {
  std::vector<std::int64_t> beat_frames;  // strictly increasing, video frames
  double tempo_bpm = 0.0;

  bool empty() const { return beat_frames.empty(); }
  std::size_t size() const { return beat_frames.size(); }
};

struct BeatTrackerOptions {
  double min_bpm = 40.0;
  double max_bpm = 220.0;
  std::size_t mel_bands = 40;
  // Local onset peaks weaker than this fraction of the strongest onset are
  // not reported as beats.
  double min_relative_onset = 0.1;
};

// Spectral-flux onset envelope at one value per video frame.
std::vector<double> onset_envelope(const AudioClip& clip, int video_fps,
                                   std::size_t mel_bands = 40);

// Onset envelope -> autocorrelation tempo -> phase search -> peak snapping.
// A silent clip yields an empty track with tempo 0.
BeatTrack detect_beats(const AudioClip& clip, int video_fps,
                       const BeatTrackerOptions& options = {});

}  // namespace choreokit
