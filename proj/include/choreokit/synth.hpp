#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "choreokit/audio.hpp"
#include "choreokit/pose.hpp"

namespace choreokit {

struct SynthSpec {
  std::size_t n_sources = 4;
  std::vector<double> bpm_list{60, 90, 120, 150};
  double duration_s = 40.0;
  std::uint64_t seed = 7;
  int fps = kDefaultFps;
  int sample_rate = kInternalSampleRate;
  Resolution resolution{};
};

// One synthetic dance: a click track over a tone, and a dancer whose limbs
// swing so that total movement peaks on every click. The piece is cut into
// 4 s sections, each in one of four styles; a style fixes both the tone's
// pitch and which joints move along which axis.
struct SynthSource {
  std::string id;
  double bpm = 120.0;
  AudioClip audio;
  PoseSequence poses;
  std::vector<double> beat_times_s;
  std::vector<std::int64_t> beat_frames;  // ground-truth musical beats
  std::vector<std::int64_t> pose_beat_frames;  // ground-truth movement peaks
  std::vector<int> section_styles;  // style of each 4 s section, from t = 0
};

// Source i uses bpm_list[i % size]. Deterministic for a seed; the seed picks
// the section styles and jitters movement axes and amplitudes, not the beat
// schedule.
std::vector<SynthSource> synth_dataset(const SynthSpec& spec);

SynthSource synth_source(const std::string& id, double bpm, double duration_s,
                         std::uint64_t seed, const SynthSpec& spec);

// Writes <id>.json, <id>.wav and <id>.beats.json per source.
void write_synth_dataset(const std::vector<SynthSource>& sources,
                         const std::filesystem::path& dir);

}  // namespace choreokit
