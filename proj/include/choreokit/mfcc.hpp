#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "choreokit/audio.hpp"

namespace choreokit {

inline constexpr std::size_t kMfccDim = 13;
inline constexpr std::size_t kMelFilters = 26;
inline constexpr double kPreEmphasis = 0.97;

using MfccVector = std::array<double, kMfccDim>;

// One 13-d vector per video frame.
struct MfccSequence {
  std::vector<MfccVector> frames;
  int frame_rate = 24;

  std::size_t size() const { return frames.size(); }
};

struct MfccFragment {
  std::vector<MfccVector> frames;
  int duration_s = 4;
  std::string source_id;
  std::int64_t start_frame = 0;

  std::size_t length() const { return frames.size(); }
  std::string id() const { return source_id + ":" + std::to_string(start_frame); }
};

// Non-overlapping windows of 1000/video_fps ms, so MFCC frame i covers
// video frame i. Pre-emphasis, Hamming window, power spectrum, 26 mel
// filters, log, orthonormal DCT-II; coefficients 0..12 are kept.
MfccSequence compute_mfcc(const AudioClip& clip, int video_fps);

// Same windowing contract as segment_fragments for poses.
std::vector<MfccFragment> segment_audio(const MfccSequence& mfcc, int duration_s,
                                        const std::string& source_id = {});

// Frames [start, start + count). Throws InvariantError when out of range.
MfccFragment slice_mfcc(const MfccSequence& mfcc, std::int64_t start, std::size_t count,
                        int duration_s, const std::string& source_id = {});

// Triangular mel filterbank over nfft/2 + 1 power-spectrum bins.
std::vector<std::vector<double>> mel_filterbank(std::size_t num_filters, std::size_t nfft,
                                                int sample_rate, double low_hz,
                                                double high_hz);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace choreokit
