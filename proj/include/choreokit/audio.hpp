#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace choreokit {

inline constexpr int kInternalSampleRate = 16000;

// Mono waveform with samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kInternalSampleRate;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Reads a 16-bit PCM or 32-bit float WAV file, averages channels and
// resamples to the internal 16 kHz rate.
AudioClip load_audio(const std::filesystem::path& path);

// Decodes without resampling (channels are still averaged).
AudioClip decode_wav(std::span<const unsigned char> bytes);

// Band-limited (windowed-sinc) resampling.
AudioClip resample(const AudioClip& clip, int target_rate);

// Writes 16-bit PCM mono.
void save_wav(const AudioClip& clip, const std::filesystem::path& path);
std::vector<unsigned char> encode_wav_pcm16(const AudioClip& clip, int channels = 1);
std::vector<unsigned char> encode_wav_float32(const AudioClip& clip);

}  // namespace choreokit
