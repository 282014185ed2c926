#include "choreokit/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <string>

#include "choreokit/error.hpp"
#include "file_util.hpp"

namespace choreokit {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}
void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

std::string describe_format(std::uint16_t tag, std::uint16_t bits) {
  std::string name;
  switch (tag) {
    case kFormatPcm: name = "integer PCM"; break;
    case kFormatFloat: name = "IEEE float"; break;
    case 2: name = "MS ADPCM"; break;
    case 6: name = "A-law"; break;
    case 7: name = "mu-law"; break;
    case 0x11: name = "IMA ADPCM"; break;
    case 0x55: name = "MPEG layer 3"; break;
    default: name = "format tag " + std::to_string(tag);
  }
  return name + ", " + std::to_string(bits) + " bits";
}

// Blackman-windowed sinc, `zero_crossings` lobes on each side.
double windowed_sinc(double x, double cutoff, double half_width) {
  if (std::abs(x) >= half_width) return 0.0;
  const double arg = std::numbers::pi * cutoff * x;
  const double sinc = x == 0.0 ? 1.0 : std::sin(arg) / arg;
  const double w = 0.42 + 0.5 * std::cos(std::numbers::pi * x / half_width) +
                   0.08 * std::cos(2.0 * std::numbers::pi * x / half_width);
  return cutoff * sinc * w;
}

}  // namespace

AudioClip decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw ParseError("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) throw ParseError("WAV fmt chunk too short");
      format = le16(chunk + 8);
      channels = le16(chunk + 10);
      rate = le32(chunk + 12);
      bits = le16(chunk + 22);
      if (format == kFormatExtensible && available >= 26) format = le16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = available;
    }
    pos = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) throw ParseError("WAV file has no fmt chunk");
  if (data == nullptr) throw ParseError("WAV file has no data chunk");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32)
    throw ParseError("unsupported WAV encoding: " + describe_format(format, bits) +
                     " (expected 16-bit PCM or 32-bit float)");

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frames = data_size / (bytes_per_sample * channels);
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + (i * channels + c) * bytes_per_sample;
      if (pcm16) {
        sum += static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        sum += static_cast<double>(std::bit_cast<float>(le32(p)));
      }
    }
    clip.samples[i] = std::clamp(sum / channels, -1.0, 1.0);
  }
  return clip;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.sample_rate <= 0 || target_rate <= 0) throw InvariantError("sample rate must be positive");
  if (clip.sample_rate == target_rate) return clip;
  const double ratio = static_cast<double>(target_rate) / clip.sample_rate;
  // Cutoff relative to the input Nyquist; a little below the lower Nyquist.
  const double cutoff = 0.95 * std::min(1.0, ratio);
  const double half_width = 16.0 / cutoff;
  const auto in_n = static_cast<std::int64_t>(clip.samples.size());
  const auto out_n = static_cast<std::int64_t>(
      static_cast<std::int64_t>(clip.samples.size()) * target_rate / clip.sample_rate);

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_n));
  for (std::int64_t n = 0; n < out_n; ++n) {
    const double t = static_cast<double>(n) * clip.sample_rate / target_rate;
    const auto lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(t - half_width)));
    const auto hi = std::min<std::int64_t>(in_n - 1, static_cast<std::int64_t>(std::floor(t + half_width)));
    double acc = 0.0;
    for (std::int64_t k = lo; k <= hi; ++k)
      acc += clip.samples[static_cast<std::size_t>(k)] * windowed_sinc(t - static_cast<double>(k), cutoff, half_width);
    out.samples[static_cast<std::size_t>(n)] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

AudioClip load_audio(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  AudioClip clip;
  try {
    clip = decode_wav(std::span(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (clip.samples.empty()) throw InvariantError(path.string() + ": audio has no samples");
  return resample(clip, kInternalSampleRate);
}

std::vector<unsigned char> encode_wav_pcm16(const AudioClip& clip, int channels) {
  std::vector<unsigned char> out;
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2 * channels);
  put_tag(out, "RIFF");
  put32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, kFormatPcm);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put32(out, static_cast<std::uint32_t>(clip.sample_rate * 2 * channels));
  put16(out, static_cast<std::uint16_t>(2 * channels));
  put16(out, 16);
  put_tag(out, "data");
  put32(out, data_bytes);
  for (double s : clip.samples) {
    const auto v = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0));
    for (int c = 0; c < channels; ++c) put16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

std::vector<unsigned char> encode_wav_float32(const AudioClip& clip) {
  std::vector<unsigned char> out;
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 4);
  put_tag(out, "RIFF");
  put32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put32(out, 16);
  put16(out, kFormatFloat);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put32(out, static_cast<std::uint32_t>(clip.sample_rate * 4));
  put16(out, 4);
  put16(out, 32);
  put_tag(out, "data");
  put32(out, data_bytes);
  for (double s : clip.samples) put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
  return out;
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path) {
  const auto bytes = encode_wav_pcm16(clip);
  detail::write_file(path, std::string(bytes.begin(), bytes.end()));
}

}  // namespace choreokit
