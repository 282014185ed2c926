#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "choreokit/audio.hpp"
#include "choreokit/beats.hpp"
#include "choreokit/error.hpp"
#include "choreokit/mfcc.hpp"
#include "support.hpp"

using namespace choreokit;
using testing_support::data_path;
using testing_support::TempDir;

namespace {

AudioClip sine(double hz, double seconds, int rate, double amplitude = 0.5) {
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(static_cast<std::size_t>(seconds * rate));
  for (std::size_t n = 0; n < clip.samples.size(); ++n)
    clip.samples[n] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(n) / rate);
  return clip;
}

// Decaying 2 kHz bursts at `first + k * 60 / bpm` seconds.
AudioClip click_track(double bpm, double seconds, double first = 0.25, double gain = 0.4) {
  AudioClip clip;
  clip.samples.assign(static_cast<std::size_t>(seconds * clip.sample_rate), 0.0);
  for (double t = first; t < seconds; t += 60.0 / bpm) {
    const auto start = static_cast<std::size_t>(std::lround(t * clip.sample_rate));
    for (std::size_t k = 0; k < 400 && start + k < clip.samples.size(); ++k) {
      const double u = static_cast<double>(k) / clip.sample_rate;
      clip.samples[start + k] += gain * std::exp(-u / 0.004) * std::sin(2.0 * std::numbers::pi * 2000.0 * u);
    }
  }
  return clip;
}

// Periodogram peak between lo and hi Hz by direct summation.
double dominant_frequency(const AudioClip& clip, double lo, double hi, double step) {
  double best = 0.0, best_hz = lo;
  for (double hz = lo; hz <= hi; hz += step) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < clip.samples.size(); ++n) {
      const double w = 2.0 * std::numbers::pi * hz * static_cast<double>(n) / clip.sample_rate;
      re += clip.samples[n] * std::cos(w);
      im -= clip.samples[n] * std::sin(w);
    }
    if (re * re + im * im > best) {
      best = re * re + im * im;
      best_hz = hz;
    }
  }
  return best_hz;
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(LoadAudio, SilenceAt16k) {
  AudioClip silence;
  silence.samples.assign(16000, 0.0);
  TempDir dir;
  save_wav(silence, dir / "silence.wav");
  const AudioClip back = load_audio(dir / "silence.wav");
  ASSERT_EQ(back.samples.size(), 16000u);
  EXPECT_EQ(back.sample_rate, 16000);
  for (double s : back.samples) EXPECT_EQ(s, 0.0);
}

TEST(LoadAudio, StereoWithIdenticalChannelsEqualsMono) {
  const AudioClip clip = sine(330.0, 0.5, 16000);
  const AudioClip mono = decode_wav(encode_wav_pcm16(clip, 1));
  const AudioClip stereo = decode_wav(encode_wav_pcm16(clip, 2));
  EXPECT_EQ(stereo.samples, mono.samples);
}

TEST(LoadAudio, Resampled44kSineKeepsItsFrequency) {
  TempDir dir;
  write_bytes(dir / "a.wav", encode_wav_pcm16(sine(440.0, 1.0, 44100)));
  const AudioClip clip = load_audio(dir / "a.wav");
  EXPECT_EQ(clip.sample_rate, 16000);
  EXPECT_NEAR(static_cast<double>(clip.samples.size()), 16000.0, 1.0);
  EXPECT_NEAR(dominant_frequency(clip, 400.0, 480.0, 0.25), 440.0, 1.0);
}

TEST(LoadAudio, FloatWavDecodes) {
  const AudioClip clip = sine(200.0, 0.1, 16000, 0.25);
  const AudioClip back = decode_wav(encode_wav_float32(clip));
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) EXPECT_NEAR(back.samples[i], clip.samples[i], 1e-7);
}

TEST(LoadAudio, UnsupportedEncodingIsNamed) {
  std::vector<unsigned char> bytes = encode_wav_pcm16(sine(200.0, 0.1, 16000));
  bytes[20] = 0x55;  // format tag: MPEG layer 3
  bytes[21] = 0x00;
  try {
    decode_wav(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("MPEG layer 3"), std::string::npos) << e.what();
  }
}

TEST(Mfcc, OneSecondGivesTwentyFourFramesOf13) {
  const MfccSequence m = compute_mfcc(sine(440.0, 1.0, 16000), 24);
  EXPECT_EQ(m.size(), 24u);
  EXPECT_EQ(m.frame_rate, 24);
  EXPECT_EQ(m.frames[0].size(), 13u);
}

TEST(Mfcc, SilenceFramesAreIdentical) {
  AudioClip silence;
  silence.samples.assign(32000, 0.0);
  const MfccSequence m = compute_mfcc(silence, 24);
  for (const MfccVector& f : m.frames) EXPECT_EQ(f, m.frames.front());
}

TEST(Mfcc, MatchesReferenceImplementation) {
  const auto ref = nlohmann::json::parse(testing_support::read_text(data_path("mfcc_sine440.json")));
  const AudioClip clip = sine(ref["frequency"].get<double>(), 1.0, ref["sample_rate"].get<int>(),
                              ref["amplitude"].get<double>());
  const MfccSequence m = compute_mfcc(clip, ref["fps"].get<int>());
  const auto& expected = ref["mfcc"];
  ASSERT_EQ(m.size(), expected.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t k = 0; k < kMfccDim; ++k)
      EXPECT_NEAR(m.frames[i][k], expected[i][k].get<double>(), 1e-3) << "frame " << i << " coeff " << k;
}

TEST(Mfcc, FrameCountIsFloorOfSecondsTimesFps) {
  for (int fps : {24, 25, 30})
    for (std::size_t samples : {700u, 16000u, 16001u, 39999u, 50000u}) {
      AudioClip clip;
      clip.samples.assign(samples, 0.1);
      EXPECT_EQ(compute_mfcc(clip, fps).size(), samples * static_cast<std::size_t>(fps) / 16000u);
    }
}

TEST(Mfcc, ShorterThanOneWindowIsAnError) {
  AudioClip clip;
  clip.samples.assign(600, 0.0);
  EXPECT_THROW(compute_mfcc(clip, 24), InvariantError);
}

TEST(Mfcc, MelScaleRoundTrips) {
  for (double hz : {0.0, 100.0, 700.0, 4000.0, 8000.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(hz)), hz, 1e-9);
}

TEST(SegmentAudio, WindowingMatchesPoseContract) {
  MfccSequence m;
  m.frames.resize(96);
  EXPECT_EQ(segment_audio(m, 4).size(), 1u);
  m.frames.resize(100);
  const auto frags = segment_audio(m, 1);
  ASSERT_EQ(frags.size(), 4u);
  EXPECT_EQ(frags[3].start_frame, 72);
  EXPECT_THROW(segment_audio(m, 5), InvariantError);
}

TEST(Beats, ClickTrackAt120Bpm) {
  const BeatTrack b = detect_beats(click_track(120.0, 10.0), 24);
  ASSERT_GE(b.size(), 15u);
  EXPECT_NEAR(b.tempo_bpm, 120.0, 2.0);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_NEAR(b.beat_frames[i] - b.beat_frames[i - 1], 12, 1);
  EXPECT_NEAR(static_cast<double>(b.beat_frames[0]), 6.0, 1.0);
}

TEST(Beats, ClickTrackAt60Bpm) {
  const BeatTrack b = detect_beats(click_track(60.0, 12.0), 24);
  ASSERT_GE(b.size(), 9u);
  EXPECT_NEAR(b.tempo_bpm, 60.0, 2.0);
  for (std::size_t i = 1; i < b.size(); ++i) EXPECT_NEAR(b.beat_frames[i] - b.beat_frames[i - 1], 24, 1);
}

TEST(Beats, SilenceGivesEmptyTrack) {
  AudioClip silence;
  silence.samples.assign(16000 * 3, 0.0);
  const BeatTrack b = detect_beats(silence, 24);
  EXPECT_TRUE(b.empty());
  EXPECT_EQ(b.tempo_bpm, 0.0);
}

TEST(Beats, IndicesAreIncreasingAndInRange) {
  for (double bpm : {75.0, 100.0, 140.0}) {
    const AudioClip clip = click_track(bpm, 8.0, 0.4);
    const BeatTrack b = detect_beats(clip, 24);
    const auto frames = static_cast<std::int64_t>(compute_mfcc(clip, 24).size());
    for (std::size_t i = 0; i < b.size(); ++i) {
      EXPECT_GE(b.beat_frames[i], 0);
      EXPECT_LT(b.beat_frames[i], frames);
      if (i > 0) EXPECT_GT(b.beat_frames[i], b.beat_frames[i - 1]);
    }
  }
}

TEST(Beats, TimeShiftShiftsBeats) {
  const BeatTrack base = detect_beats(click_track(90.0, 10.0, 0.25), 24);
  const BeatTrack shifted = detect_beats(click_track(90.0, 10.0, 0.5), 24);  // +6 frames
  ASSERT_FALSE(base.empty());
  std::size_t matched = 0;
  for (std::int64_t s : shifted.beat_frames)
    for (std::int64_t b : base.beat_frames)
      if (std::abs(s - (b + 6)) <= 1) {
        ++matched;
        break;
      }
  EXPECT_GE(matched + 1, shifted.size());
}

TEST(Beats, InvariantToGain) {
  const BeatTrack base = detect_beats(click_track(120.0, 8.0), 24);
  for (double gain : {0.5, 2.0}) {
    AudioClip clip = click_track(120.0, 8.0);
    for (double& s : clip.samples) s *= gain;
    EXPECT_EQ(detect_beats(clip, 24).beat_frames, base.beat_frames) << gain;
  }
}
