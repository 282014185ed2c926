#include "choreokit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <nlohmann/json.hpp>

#include "choreokit/alignment.hpp"
#include "choreokit/error.hpp"
#include "choreokit/pose_io.hpp"
#include "choreokit/skeleton.hpp"
#include "file_util.hpp"
#include "rng.hpp"

namespace choreokit {

namespace {

constexpr std::array<std::array<double, 2>, kNumJoints> kRest{{
    {960, 290},   // nose
    {960, 330},   // neck
    {900, 340},   // right shoulder
    {880, 430},   // right elbow
    {870, 520},   // right wrist
    {1020, 340},  // left shoulder
    {1040, 430},  // left elbow
    {1050, 520},  // left wrist
    {925, 560},   // right hip
    {920, 730},   // right knee
    {915, 890},   // right ankle
    {995, 560},   // left hip
    {1000, 730},  // left knee
    {1005, 890},  // left ankle
    {950, 280},   // right eye
    {970, 280},   // left eye
    {938, 288},   // right ear
    {982, 288},   // left ear
}};

// A style moves a set of joints along one axis; each style has its own
// axis and its own tone, so music and movement agree section by section.
struct Style {
  double axis_deg;
  double tone_hz;
  std::array<double, kNumJoints> amplitude;  // px on a 1920x1080 canvas, signed
};

//                       nose neck rsh rel  rwr  lsh lel  lwr  rhp rkn  ran  lhp lkn  lan  rey ley rea lea
constexpr std::array<Style, 4> kStyles{{
    {0, 196, {0, 0, 0, -16, -28, 0, 16, 28, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}},        // arms sideways
    {90, 294, {0, 0, 0, 16, 28, 0, 16, 28, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}},         // arms up and down
    {45, 440, {0, 0, 0, 8, 14, 0, -8, -14, 0, 10, 12, 0, -10, -12, 0, 0, 0, 0}},  // steps
    {135, 659, {12, 10, 10, 14, 20, 10, 14, 20, 0, 0, 0, 0, 0, 0, 12, 12, 12, 12}},  // sway
}};

// Resting offsets of each style, (dx, dy) per joint.
using Posture = std::array<std::array<double, 2>, kNumJoints>;
constexpr std::array<Posture, 4> kPostures{{
    // arms held out
    {{{0, 0}, {0, 0}, {0, 0}, {-50, -50}, {-110, -120}, {0, 0}, {50, -50}, {110, -120}, {0, 0},
      {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}},
    // arms raised
    {{{0, 0}, {0, 0}, {0, 0}, {10, -100}, {20, -220}, {0, 0}, {-10, -100}, {-20, -220}, {0, 0},
      {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}},
    // wide stance, hands on hips
    {{{0, 0}, {0, 0}, {0, 0}, {-20, 0}, {50, 40}, {0, 0}, {20, 0}, {-50, 40}, {0, 0},
      {-30, 0}, {-45, 0}, {0, 0}, {30, 0}, {45, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}}},
    // upper body leaning
    {{{45, 10}, {35, 5}, {35, 5}, {30, 0}, {25, 0}, {35, 5}, {30, 0}, {25, 0}, {0, 0},
      {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {45, 10}, {45, 10}, {45, 10}, {45, 10}}},
}};

constexpr double kSection_s = 4.0;
constexpr double kPostureFade_s = 0.5;
constexpr double kCrossfade_s = 0.25;
constexpr double kAxisJitter_deg = 10.0;
constexpr double kAmplitudeJitter = 0.15;
constexpr double kClickHz = 1500.0;
constexpr double kClickDecay_s = 0.005;
constexpr double kClickLength_s = 0.025;
constexpr double kClickGain = 0.8;
constexpr double kToneGain = 0.15;

// Swing profile with velocity cos^3(theta): one movement peak per half
// period, i.e. one per beat.
double swing(double theta) {
  const double s = std::sin(theta);
  return s - s * s * s / 3.0;
}

// Per-style weights at time t. Section k starts at switches[k - 1]; with a
// crossfade the change is a smoothstep centred on the switch time.
std::array<double, kStyles.size()> style_weights(double t, const std::vector<std::size_t>& sections,
                                                 const std::vector<double>& switches, double crossfade) {
  std::array<double, kStyles.size()> w{};
  const auto k = static_cast<std::size_t>(std::upper_bound(switches.begin(), switches.end(), t) - switches.begin());
  w[sections[k]] = 1.0;
  for (std::size_t s = 0; crossfade > 0.0 && s < switches.size(); ++s) {
    const double u = (t - switches[s]) / crossfade + 0.5;
    if (u <= 0.0 || u >= 1.0) continue;
    const double alpha = u * u * (3.0 - 2.0 * u);
    w = {};
    w[sections[s]] = 1.0 - alpha;
    w[sections[s + 1]] += alpha;
  }
  return w;
}

}  // namespace

SynthSource synth_source(const std::string& id, double bpm, double duration_s, std::uint64_t seed,
                         const SynthSpec& spec) {
  if (!(bpm > 0.0) || !(duration_s > 0.0) || spec.fps <= 0 || spec.sample_rate <= 0)
    throw InvariantError("invalid synthetic source specification");
  const double beat = 60.0 / bpm;
  const double fps = spec.fps;
  const auto frames = static_cast<std::size_t>(std::floor(duration_s * fps));
  const auto samples = static_cast<std::size_t>(std::floor(duration_s * spec.sample_rate));

  SynthSource src;
  src.id = id;
  src.bpm = bpm;
  for (double t = beat / 2.0; t < duration_s - 0.1; t += beat) {
    src.beat_times_s.push_back(t);
    src.beat_frames.push_back(std::lround(t * fps));
  }

  // Section schedule: consecutive sections never share a style.
  std::mt19937_64 gen(seed);
  const auto n_sections = static_cast<std::size_t>(std::ceil(duration_s / kSection_s));
  std::vector<std::size_t> sections;
  for (std::size_t k = 0; k < n_sections; ++k) {
    const auto pick = static_cast<std::size_t>(detail::uniform01(gen) * (k == 0 ? 4.0 : 3.0));
    sections.push_back(k == 0 ? std::min<std::size_t>(pick, 3) : (sections.back() + 1 + std::min<std::size_t>(pick, 2)) % 4);
  }
  src.section_styles.assign(sections.begin(), sections.end());
  // Styles change on the beat nearest each section boundary, where every
  // style's swing passes through rest, so the pose stays continuous.
  std::vector<double> switches;
  for (std::size_t k = 1; k < n_sections; ++k) {
    const double boundary = static_cast<double>(k) * kSection_s;
    const double n = std::round((boundary - beat / 2.0) / beat);
    switches.push_back(std::round((beat / 2.0 + n * beat) * fps) / fps);
  }

  // Audio: the section's tone plus decaying clicks on the beats.
  src.audio.sample_rate = spec.sample_rate;
  src.audio.samples.assign(samples, 0.0);
  for (std::size_t n = 0; n < samples; ++n) {
    const double t = static_cast<double>(n) / spec.sample_rate;
    const auto w = style_weights(t, sections, switches, kCrossfade_s);
    double v = 0.0;
    for (std::size_t s = 0; s < kStyles.size(); ++s)
      if (w[s] > 0.0) v += w[s] * std::sin(2.0 * std::numbers::pi * kStyles[s].tone_hz * t);
    src.audio.samples[n] = kToneGain * v;
  }
  const auto click_len = static_cast<std::size_t>(kClickLength_s * spec.sample_rate);
  for (double t : src.beat_times_s) {
    const auto start = static_cast<std::size_t>(std::lround(std::round(t * fps) / fps * spec.sample_rate));
    for (std::size_t k = 0; k < click_len && start + k < samples; ++k) {
      const double u = static_cast<double>(k) / spec.sample_rate;
      src.audio.samples[start + k] +=
          kClickGain * std::exp(-u / kClickDecay_s) * std::sin(2.0 * std::numbers::pi * kClickHz * u);
    }
  }

  // Dancer: the style's posture, blended across switches, plus a beat-locked
  // swing of the style's joints along its axis. The seed jitters axes and
  // amplitudes per source.
  std::array<std::array<double, 2>, kStyles.size()> axis{};
  std::array<double, kStyles.size()> gain{};
  for (std::size_t s = 0; s < kStyles.size(); ++s) {
    const double deg = kStyles[s].axis_deg + detail::uniform(gen, -kAxisJitter_deg, kAxisJitter_deg);
    axis[s] = {std::cos(deg * std::numbers::pi / 180.0), -std::sin(deg * std::numbers::pi / 180.0)};
    gain[s] = 1.0 + detail::uniform(gen, -kAmplitudeJitter, kAmplitudeJitter);
  }
  src.poses.fps = spec.fps;
  src.poses.resolution = spec.resolution;
  src.poses.frames.resize(frames);
  const double sx = spec.resolution.width / 1920.0, sy = spec.resolution.height / 1080.0;
  for (std::size_t f = 0; f < frames; ++f) {
    // Shifted half a frame so the largest frame-to-frame step ends on the beat frame.
    const double t = (static_cast<double>(f) + 0.5) / fps;
    const double w = swing(std::numbers::pi * (t - beat / 2.0) / beat);
    const auto mix = style_weights(t, sections, switches, 0.0);
    const auto blend = style_weights(t, sections, switches, kPostureFade_s);
    PoseFrame& frame = src.poses.frames[f];
    frame.frame_index = static_cast<std::int64_t>(f);
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      double dx = 0.0, dy = 0.0;
      for (std::size_t s = 0; s < kStyles.size(); ++s) {
        const double a = mix[s] * gain[s] * kStyles[s].amplitude[j] * w;
        dx += a * axis[s][0] + blend[s] * gain[s] * kPostures[s][j][0];
        dy += a * axis[s][1] + blend[s] * gain[s] * kPostures[s][j][1];
      }
      frame.keypoints[j] = {(kRest[j][0] + dx) * sx, (kRest[j][1] + dy) * sy, 1.0};
    }
  }

  BeatTrack truth;
  truth.beat_frames = src.beat_frames;
  const auto windows = beat_windows(truth, frames, static_cast<std::size_t>(std::lround(beat * fps)));
  for (std::size_t f : find_pose_beats(src.poses, windows)) src.pose_beat_frames.push_back(static_cast<std::int64_t>(f));
  return src;
}

std::vector<SynthSource> synth_dataset(const SynthSpec& spec) {
  if (spec.bpm_list.empty()) throw InvariantError("synthetic dataset needs at least one tempo");
  std::vector<SynthSource> out;
  for (std::size_t i = 0; i < spec.n_sources; ++i) {
    const double bpm = spec.bpm_list[i % spec.bpm_list.size()];
    char id[48];
    std::snprintf(id, sizeof id, "synth%02zu_%03dbpm", i, static_cast<int>(std::lround(bpm)));
    out.push_back(synth_source(id, bpm, spec.duration_s, detail::mix_seed(spec.seed, i), spec));
  }
  return out;
}

void write_synth_dataset(const std::vector<SynthSource>& sources, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const SynthSource& s : sources) {
    save_keypoint_sequence(s.poses, dir / (s.id + ".json"));
    save_wav(s.audio, dir / (s.id + ".wav"));
    const nlohmann::json beats = {{"bpm", s.bpm},
                                  {"beat_times_s", s.beat_times_s},
                                  {"beat_frames", s.beat_frames},
                                  {"pose_beat_frames", s.pose_beat_frames},
                                  {"section_styles", s.section_styles}};
    detail::write_file(dir / (s.id + ".beats.json"), beats.dump(2) + "\n");
  }
}

}  // namespace choreokit
