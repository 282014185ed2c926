#include "choreokit/beats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "choreokit/error.hpp"
#include "choreokit/mfcc.hpp"
#include "fft.hpp"

namespace choreokit {

namespace {

constexpr std::size_t kBeatNfft = 1024;
constexpr double kLogGain = 1000.0;
constexpr double kPeriodStep = 0.01;
constexpr int kHarmonics = 4;

double sample_linear(const std::vector<double>& v, double x) {
  if (x < 0.0 || x > static_cast<double>(v.size() - 1)) return 0.0;
  const auto i = static_cast<std::size_t>(std::floor(x));
  if (i + 1 >= v.size()) return v[i];
  const double f = x - static_cast<double>(i);
  return v[i] * (1.0 - f) + v[i + 1] * f;
}

// Biased autocorrelation of the mean-removed envelope, normalized at lag 0.
std::vector<double> autocorrelation(const std::vector<double>& env, std::size_t max_lag) {
  const double mean = std::accumulate(env.begin(), env.end(), 0.0) / static_cast<double>(env.size());
  std::vector<double> x(env.size());
  for (std::size_t i = 0; i < env.size(); ++i) x[i] = env[i] - mean;
  std::vector<double> acf(std::min(max_lag + 1, x.size()), 0.0);
  for (std::size_t lag = 0; lag < acf.size(); ++lag)
    for (std::size_t i = lag; i < x.size(); ++i) acf[lag] += x[i] * x[i - lag];
  if (acf[0] > 0.0)
    for (double& a : acf) a /= acf[0];
  return acf;
}

}  // namespace

std::vector<double> onset_envelope(const AudioClip& clip, int video_fps, std::size_t mel_bands) {
  if (video_fps <= 0) throw InvariantError("fps must be positive");
  const int sr = clip.sample_rate;
  const auto n = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t frames = n * video_fps / sr;
  if (frames < 1) return {};
  const std::int64_t win = std::max<std::int64_t>(2, sr / video_fps);

  const auto bank = mel_filterbank(mel_bands, kBeatNfft, sr, 30.0, sr / 2.0);
  detail::RealFft fft(kBeatNfft);
  std::vector<double> buf(static_cast<std::size_t>(win)), power;
  std::vector<double> prev(mel_bands, 0.0), cur(mel_bands, 0.0);
  std::vector<double> env(static_cast<std::size_t>(frames), 0.0);

  for (std::int64_t i = 0; i < frames; ++i) {
    const std::int64_t centre = i * sr / video_fps;
    const std::int64_t begin = centre - win / 2;
    for (std::int64_t j = 0; j < win; ++j) {
      const std::int64_t s = begin + j;
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(win - 1));
      buf[static_cast<std::size_t>(j)] = (s >= 0 && s < n) ? clip.samples[static_cast<std::size_t>(s)] * w : 0.0;
    }
    fft.power(buf.data(), buf.size(), power);
    for (std::size_t m = 0; m < mel_bands; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += bank[m][k] * power[k];
      cur[m] = std::log1p(kLogGain * e);
    }
    if (i > 0) {
      double flux = 0.0;
      for (std::size_t m = 0; m < mel_bands; ++m) flux += std::max(0.0, cur[m] - prev[m]);
      env[static_cast<std::size_t>(i)] = flux;
    }
    std::swap(prev, cur);
  }
  return env;
}

BeatTrack detect_beats(const AudioClip& clip, int video_fps, const BeatTrackerOptions& options) {
  if (options.min_bpm <= 0.0 || options.max_bpm <= options.min_bpm)
    throw InvariantError("invalid tempo range");
  BeatTrack track;
  const std::vector<double> env = onset_envelope(clip, video_fps, options.mel_bands);
  if (env.size() < 4) return track;
  const double peak = *std::max_element(env.begin(), env.end());
  if (peak <= 1e-9) return track;

  const double fps = video_fps;
  const double min_period = 60.0 * fps / options.max_bpm;
  const double max_period = 60.0 * fps / options.min_bpm;
  const auto acf = autocorrelation(env, static_cast<std::size_t>(std::ceil(kHarmonics * max_period)) + 1);

  double best_period = 0.0, best_score = -1e300;
  for (double p = min_period; p <= max_period; p += kPeriodStep) {
    if (p >= static_cast<double>(acf.size() - 1)) break;
    double score = 0.0;
    for (int h = 1; h <= kHarmonics; ++h) score += sample_linear(acf, h * p);
    if (score > best_score) {
      best_score = score;
      best_period = p;
    }
  }
  if (best_period <= 0.0) return track;

  // Phase: offset whose beat comb collects the most onset energy.
  double best_phase = 0.0;
  best_score = -1.0;
  for (double phi = 0.0; phi < best_period; phi += 0.25) {
    double score = 0.0;
    for (double t = phi; t < static_cast<double>(env.size()); t += best_period) score += sample_linear(env, t);
    if (score > best_score) {
      best_score = score;
      best_phase = phi;
    }
  }

  // Track forward from the phase, snapping each prediction to the local onset peak.
  const auto last = static_cast<std::int64_t>(env.size()) - 1;
  const auto radius = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(best_period / 4.0)));
  std::vector<double> numbers, positions;
  double anchor = best_phase;
  for (int k = 0; anchor <= static_cast<double>(last) + 0.5; ++k) {
    const auto centre = static_cast<std::int64_t>(std::lround(anchor));
    std::int64_t arg = -1;
    double val = -1.0;
    for (std::int64_t j = std::max<std::int64_t>(0, centre - radius); j <= std::min(last, centre + radius); ++j)
      if (env[static_cast<std::size_t>(j)] > val) {
        val = env[static_cast<std::size_t>(j)];
        arg = j;
      }
    if (arg >= 0 && val >= options.min_relative_onset * peak &&
        (track.beat_frames.empty() || arg > track.beat_frames.back())) {
      track.beat_frames.push_back(arg);
      numbers.push_back(k);
      positions.push_back(static_cast<double>(arg));
      anchor = static_cast<double>(arg) + best_period;
    } else {
      anchor += best_period;
    }
  }

  double period = best_period;
  if (positions.size() >= 2) {
    const double mk = std::accumulate(numbers.begin(), numbers.end(), 0.0) / static_cast<double>(numbers.size());
    const double mp = std::accumulate(positions.begin(), positions.end(), 0.0) / static_cast<double>(positions.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < numbers.size(); ++i) {
      sxy += (numbers[i] - mk) * (positions[i] - mp);
      sxx += (numbers[i] - mk) * (numbers[i] - mk);
    }
    if (sxx > 0.0 && sxy > 0.0) period = sxy / sxx;
  }
  track.tempo_bpm = 60.0 * fps / period;
  return track;
}

}  // namespace choreokit
