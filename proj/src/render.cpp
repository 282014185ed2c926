#include "choreokit/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "choreokit/alignment.hpp"
#include "choreokit/error.hpp"
#include "choreokit/skeleton.hpp"
#include "file_util.hpp"

namespace choreokit {

namespace {

enum class Side { kCentre, kLeft, kRight };

Side side_of(Joint j) {
  switch (j) {
    case Joint::kRightShoulder: case Joint::kRightElbow: case Joint::kRightWrist: case Joint::kRightHip:
    case Joint::kRightKnee: case Joint::kRightAnkle: case Joint::kRightEye: case Joint::kRightEar:
      return Side::kRight;
    case Joint::kLeftShoulder: case Joint::kLeftElbow: case Joint::kLeftWrist: case Joint::kLeftHip:
    case Joint::kLeftKnee: case Joint::kLeftAnkle: case Joint::kLeftEye: case Joint::kLeftEar:
      return Side::kLeft;
    default:
      return Side::kCentre;
  }
}

struct Point {
  double x, y;
};

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Coverage-based anti-aliasing: a pixel centre within `half` of the segment
// is fully covered, with a one-pixel linear falloff beyond.
void draw_segment(Image& img, Point a, Point b, double width, Rgb color) {
  const double half = width / 2.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half - 1)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half - 1)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half + 1)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double d = segment_distance({x + 0.5, y + 0.5}, a, b);
      const double cover = std::clamp(half + 0.5 - d, 0.0, 1.0);
      if (cover > 0.0) img.blend(x, y, color, cover);
    }
}

void draw_disc(Image& img, Point c, double radius, Rgb color) { draw_segment(img, c, c, 2.0 * radius, color); }

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

std::uint8_t palette_index(const std::uint8_t* rgb) {
  return static_cast<std::uint8_t>((rgb[0] & 0xE0) | ((rgb[1] >> 3) & 0x1C) | (rgb[2] >> 6));
}

class BitPacker {
 public:
  explicit BitPacker(std::vector<std::uint8_t>& out) : out_(out) {}
  void put(unsigned code, int bits) {
    acc_ |= static_cast<std::uint32_t>(code) << nbits_;
    nbits_ += bits;
    while (nbits_ >= 8) {
      byte(static_cast<std::uint8_t>(acc_ & 0xFF));
      acc_ >>= 8;
      nbits_ -= 8;
    }
  }
  void finish() {
    if (nbits_ > 0) byte(static_cast<std::uint8_t>(acc_ & 0xFF));
    flush_block();
    out_.push_back(0);
  }

 private:
  void byte(std::uint8_t b) {
    block_.push_back(b);
    if (block_.size() == 255) flush_block();
  }
  void flush_block() {
    if (block_.empty()) return;
    out_.push_back(static_cast<std::uint8_t>(block_.size()));
    out_.insert(out_.end(), block_.begin(), block_.end());
    block_.clear();
  }
  std::vector<std::uint8_t>& out_;
  std::vector<std::uint8_t> block_;
  std::uint32_t acc_ = 0;
  int nbits_ = 0;
};

// Variable-width LZW over 8-bit palette indices.
void lzw_encode(const std::vector<std::uint8_t>& indices, std::vector<std::uint8_t>& out) {
  constexpr unsigned kClear = 256, kEnd = 257, kMaxCode = 4096;
  out.push_back(8);
  BitPacker bits(out);
  std::vector<int> table(kMaxCode * 256, -1);
  unsigned next = kEnd + 1;
  int width = 9;
  bits.put(kClear, width);
  if (indices.empty()) {
    bits.put(kEnd, width);
    bits.finish();
    return;
  }
  unsigned prefix = indices[0];
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const std::uint8_t c = indices[i];
    const int found = table[prefix * 256 + c];
    if (found >= 0) {
      prefix = static_cast<unsigned>(found);
      continue;
    }
    bits.put(prefix, width);
    if (next < kMaxCode) {
      table[prefix * 256 + c] = static_cast<int>(next);
      if (next == (1u << width) && width < 12) ++width;
      ++next;
    } else {
      bits.put(kClear, width);
      std::fill(table.begin(), table.end(), -1);
      next = kEnd + 1;
      width = 9;
    }
    prefix = c;
  }
  bits.put(prefix, width);
  bits.put(kEnd, width);
  bits.finish();
}

void put16(std::vector<std::uint8_t>& out, int v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.png", i);
  return buf;
}

}  // namespace

Image::Image(int w, int h, Rgb fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw InvariantError("image dimensions must be positive");
  pixels.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) std::copy(fill.begin(), fill.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i));
}

Rgb Image::at(int x, int y) const {
  const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

void Image::blend(int x, int y, Rgb color, double alpha) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const std::size_t o = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
  for (int c = 0; c < 3; ++c) {
    const double v = pixels[o + c] * (1.0 - alpha) + color[static_cast<std::size_t>(c)] * alpha;
    pixels[o + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
  }
}

Image render_frame(const PoseFrame& pose, Resolution canvas, const RenderStyle& style) {
  if (canvas.width <= 0 || canvas.height <= 0) throw InvariantError("canvas must have positive size");
  Image img(canvas.width, canvas.height, style.background);
  double scale = 1.0, ox = 0.0, oy = 0.0;
  if (style.source && !(*style.source == canvas)) {
    if (style.source->width <= 0 || style.source->height <= 0) throw InvariantError("source resolution must be positive");
    scale = std::min(static_cast<double>(canvas.width) / style.source->width,
                     static_cast<double>(canvas.height) / style.source->height);
    ox = (canvas.width - style.source->width * scale) / 2.0;
    oy = (canvas.height - style.source->height * scale) / 2.0;
  }
  const auto at = [&](Joint j) { return Point{pose[j].x * scale + ox, pose[j].y * scale + oy}; };
  const auto color = [&](Side s) {
    return s == Side::kLeft ? style.left_color : s == Side::kRight ? style.right_color : style.limb_color;
  };
  for (const auto& [a, b] : kSkeletonEdges) {
    if (pose[a].confidence <= 0.0 || pose[b].confidence <= 0.0) continue;
    draw_segment(img, at(a), at(b), style.line_width, color(side_of(b)));
  }
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const auto joint = static_cast<Joint>(j);
    if (pose[joint].confidence <= 0.0) continue;
    draw_disc(img, at(joint), style.joint_radius, color(side_of(joint)));
  }
  return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.width <= 0 || image.height <= 0) throw InvariantError("cannot encode an empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw IoError("PNG encoding failed");
  }
  png_set_write_fn(png, &out, png_write_callback, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  for (int y = 0; y < image.height; ++y)
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(image.pixels.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(image.width) * 3);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  detail::write_file(path, std::string(bytes.begin(), bytes.end()));
}

std::vector<std::uint8_t> encode_gif(const std::vector<Image>& frames, int delay_cs) {
  if (frames.empty()) throw InvariantError("GIF needs at least one frame");
  const int w = frames.front().width, h = frames.front().height;
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) throw InvariantError("GIF frame size out of range");
  std::vector<std::uint8_t> out;
  const std::string header = "GIF89a";
  out.insert(out.end(), header.begin(), header.end());
  put16(out, w);
  put16(out, h);
  out.push_back(0xF7);  // global 256-colour table
  out.push_back(0);
  out.push_back(0);
  for (int i = 0; i < 256; ++i) {
    out.push_back(static_cast<std::uint8_t>(((i >> 5) & 7) * 255 / 7));
    out.push_back(static_cast<std::uint8_t>(((i >> 2) & 7) * 255 / 7));
    out.push_back(static_cast<std::uint8_t>((i & 3) * 255 / 3));
  }
  const std::uint8_t loop[] = {0x21, 0xFF, 0x0B, 'N', 'E', 'T', 'S', 'C', 'A', 'P', 'E', '2', '.', '0', 0x03, 0x01, 0x00, 0x00, 0x00};
  out.insert(out.end(), std::begin(loop), std::end(loop));

  std::vector<std::uint8_t> indices;
  for (const Image& f : frames) {
    if (f.width != w || f.height != h) throw InvariantError("GIF frames must share one size");
    out.insert(out.end(), {0x21, 0xF9, 0x04, 0x04});
    put16(out, std::max(0, delay_cs));
    out.insert(out.end(), {0x00, 0x00, 0x2C});
    put16(out, 0);
    put16(out, 0);
    put16(out, w);
    put16(out, h);
    out.push_back(0x00);
    indices.resize(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = palette_index(f.pixels.data() + 3 * i);
    lzw_encode(indices, out);
  }
  out.push_back(0x3B);
  return out;
}

RenderManifest render_video(const PoseSequence& seq, const std::filesystem::path& out_dir, int fps,
                            Resolution canvas, const RenderStyle& style,
                            const std::optional<std::filesystem::path>& gif) {
  if (seq.empty()) throw InvariantError("nothing to render: the pose sequence is empty");
  if (fps <= 0) throw InvariantError("fps must be positive");
  if (canvas.width <= 0 || canvas.height <= 0) throw InvariantError("canvas must have positive size");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir))
    throw IoError("cannot create output directory " + out_dir.string());

  RenderStyle s = style;
  if (!s.source) s.source = seq.resolution;
  std::vector<Image> gif_frames;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    Image img = render_frame(seq.frames[i], canvas, s);
    write_png(img, out_dir / frame_name(i));
    if (gif) gif_frames.push_back(std::move(img));
  }
  RenderManifest manifest{fps, seq.size(), canvas};
  const nlohmann::json j = {{"fps", fps},
                            {"frame_count", seq.size()},
                            {"resolution", {{"width", canvas.width}, {"height", canvas.height}}}};
  detail::write_file(out_dir / "manifest.json", j.dump(2) + "\n");
  if (gif) {
    const auto bytes = encode_gif(gif_frames, static_cast<int>(std::lround(100.0 / fps)));
    detail::write_file(*gif, std::string(bytes.begin(), bytes.end()));
  }
  return manifest;
}

int BeatPlotLayout::x_of(double frame) const {
  if (frames < 2) return margin;
  return margin + static_cast<int>(std::lround(frame * (width - 2 * margin) / static_cast<double>(frames - 1)));
}

BeatPlotLayout layout_beat_plot(const BeatTrack& audio_beats, const PoseSequence& seq, int width, int height) {
  if (audio_beats.empty() || seq.empty()) throw InvariantError("beat plot needs audio beats and poses");
  if (width <= 40 || height <= 40) throw InvariantError("plot is too small");
  BeatPlotLayout layout;
  layout.width = width;
  layout.height = height;
  layout.frames = seq.size();
  for (std::int64_t b : audio_beats.beat_frames)
    if (b >= 0 && static_cast<std::size_t>(b) < seq.size()) layout.audio_beat_x.push_back(layout.x_of(static_cast<double>(b)));
  const auto windows = beat_windows(audio_beats, seq.size(), kDefaultFps / 2);
  layout.pose_beats = find_pose_beats(seq, windows);
  for (std::size_t f : layout.pose_beats) layout.pose_beat_x.push_back(layout.x_of(static_cast<double>(f)));
  return layout;
}

Image plot_beat_alignment(const BeatTrack& audio_beats, const PoseSequence& seq, int width, int height) {
  const BeatPlotLayout layout = layout_beat_plot(audio_beats, seq, width, height);
  Image img(width, height, {255, 255, 255});
  const Rgb beat_color{220, 120, 120}, curve_color{40, 40, 40}, marker_color{30, 80, 200};

  std::vector<double> movement(seq.size());
  double peak = 0.0;
  for (std::size_t j = 0; j < seq.size(); ++j) peak = std::max(peak, movement[j] = frame_movement(seq, j));
  const double top = layout.margin, bottom = height - layout.margin;
  const auto y_of = [&](double m) { return peak > 0.0 ? bottom - (bottom - top) * m / peak : bottom; };

  for (int x : layout.audio_beat_x) draw_segment(img, {x + 0.5, top}, {x + 0.5, bottom}, 1.0, beat_color);
  for (std::size_t j = 1; j < seq.size(); ++j)
    draw_segment(img, {layout.x_of(static_cast<double>(j - 1)) + 0.5, y_of(movement[j - 1])},
                 {layout.x_of(static_cast<double>(j)) + 0.5, y_of(movement[j])}, 1.5, curve_color);
  for (std::size_t k = 0; k < layout.pose_beats.size(); ++k)
    draw_disc(img, {layout.pose_beat_x[k] + 0.5, y_of(movement[layout.pose_beats[k]])}, 3.0, marker_color);
  return img;
}

}  // namespace choreokit
