#include "choreokit/mfcc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "choreokit/error.hpp"
#include "fft.hpp"

namespace choreokit {

namespace {

constexpr std::size_t kNfft = 1024;
constexpr double kLogFloor = 1e-10;

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(std::size_t num_filters, std::size_t nfft,
                                                int sample_rate, double low_hz,
                                                double high_hz) {
  const double low = hz_to_mel(low_hz);
  const double high = hz_to_mel(high_hz);
  std::vector<std::size_t> bin(num_filters + 2);
  for (std::size_t i = 0; i < bin.size(); ++i) {
    const double mel = low + (high - low) * static_cast<double>(i) / static_cast<double>(num_filters + 1);
    bin[i] = static_cast<std::size_t>(std::floor(static_cast<double>(nfft + 1) * mel_to_hz(mel) / sample_rate));
  }
  std::vector<std::vector<double>> bank(num_filters, std::vector<double>(nfft / 2 + 1, 0.0));
  for (std::size_t m = 0; m < num_filters; ++m) {
    const std::size_t a = bin[m], b = bin[m + 1], c = bin[m + 2];
    for (std::size_t k = a; k < b; ++k)
      bank[m][k] = static_cast<double>(k - a) / static_cast<double>(b - a);
    for (std::size_t k = b; k < c; ++k)
      bank[m][k] = static_cast<double>(c - k) / static_cast<double>(c - b);
  }
  return bank;
}

MfccSequence compute_mfcc(const AudioClip& clip, int video_fps) {
  if (video_fps <= 0) throw InvariantError("fps must be positive");
  const int sr = clip.sample_rate;
  const auto n = static_cast<std::int64_t>(clip.samples.size());
  const std::int64_t frames = n * video_fps / sr;
  if (frames < 1)
    throw InvariantError("audio shorter than one " + std::to_string(1000.0 / video_fps) + " ms window");

  std::vector<double> emph(clip.samples.size());
  emph[0] = clip.samples[0];
  for (std::size_t i = 1; i < emph.size(); ++i) emph[i] = clip.samples[i] - kPreEmphasis * clip.samples[i - 1];

  const auto bank = mel_filterbank(kMelFilters, kNfft, sr, 0.0, sr / 2.0);
  detail::RealFft fft(kNfft);
  std::vector<double> buf, power;
  std::array<double, kMelFilters> logmel{};

  MfccSequence out;
  out.frame_rate = video_fps;
  out.frames.resize(static_cast<std::size_t>(frames));
  for (std::int64_t i = 0; i < frames; ++i) {
    const std::int64_t begin = i * sr / video_fps;
    const std::int64_t end = std::min(n, (i + 1) * sr / video_fps);
    const auto len = static_cast<std::size_t>(end - begin);
    buf.resize(len);
    for (std::size_t j = 0; j < len; ++j) {
      const double w = len > 1 ? 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                                        static_cast<double>(len - 1))
                               : 1.0;
      buf[j] = emph[static_cast<std::size_t>(begin) + j] * w;
    }
    fft.power(buf.data(), len, power);
    for (double& p : power) p /= static_cast<double>(kNfft);
    for (std::size_t m = 0; m < kMelFilters; ++m) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += bank[m][k] * power[k];
      logmel[m] = std::log(std::max(e, kLogFloor));
    }
    MfccVector& c = out.frames[static_cast<std::size_t>(i)];
    const double M = static_cast<double>(kMelFilters);
    for (std::size_t k = 0; k < kMfccDim; ++k) {
      double s = 0.0;
      for (std::size_t m = 0; m < kMelFilters; ++m)
        s += logmel[m] * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * static_cast<double>(m) + 1.0) / (2.0 * M));
      c[k] = s * (k == 0 ? std::sqrt(1.0 / M) : std::sqrt(2.0 / M));
    }
  }
  return out;
}

MfccFragment slice_mfcc(const MfccSequence& mfcc, std::int64_t start, std::size_t count,
                        int duration_s, const std::string& source_id) {
  if (start < 0 || static_cast<std::size_t>(start) + count > mfcc.size())
    throw InvariantError("MFCC slice [" + std::to_string(start) + ", +" + std::to_string(count) +
                         ") outside " + std::to_string(mfcc.size()) + " frames");
  MfccFragment frag;
  frag.duration_s = duration_s;
  frag.source_id = source_id;
  frag.start_frame = start;
  frag.frames.assign(mfcc.frames.begin() + start, mfcc.frames.begin() + start + static_cast<std::ptrdiff_t>(count));
  return frag;
}

std::vector<MfccFragment> segment_audio(const MfccSequence& mfcc, int duration_s,
                                        const std::string& source_id) {
  if (duration_s < 1 || duration_s > 4)
    throw InvariantError("fragment duration must be 1..4 s, got " + std::to_string(duration_s));
  const std::size_t window = static_cast<std::size_t>(duration_s) * static_cast<std::size_t>(mfcc.frame_rate);
  std::vector<MfccFragment> out;
  for (std::size_t start = 0; start + window <= mfcc.size(); start += window)
    out.push_back(slice_mfcc(mfcc, static_cast<std::int64_t>(start), window, duration_s, source_id));
  return out;
}

}  // namespace choreokit
