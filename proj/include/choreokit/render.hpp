#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "choreokit/beats.hpp"
#include "choreokit/pose.hpp"

namespace choreokit {

using Rgb = std::array<std::uint8_t, 3>;

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major

  Image() = default;
  Image(int w, int h, Rgb fill);
  Rgb at(int x, int y) const;
  void blend(int x, int y, Rgb color, double alpha);

  friend bool operator==(const Image&, const Image&) = default;
};

struct RenderStyle {
  Rgb background{255, 255, 255};
  Rgb limb_color{40, 40, 40};
  Rgb left_color{200, 60, 40};
  Rgb right_color{40, 90, 200};
  double line_width = 4.0;
  double joint_radius = 4.0;
  // Coordinate frame of the keypoints. When set and different from the
  // canvas, poses are scaled uniformly (and centred) to fit.
  std::optional<Resolution> source;
};

// Anti-aliased stick figure. Throws InvariantError for a non-positive canvas.
Image render_frame(const PoseFrame& pose, Resolution canvas, const RenderStyle& style = {});

std::vector<std::uint8_t> encode_png(const Image& image);
void write_png(const Image& image, const std::filesystem::path& path);

// 332-palette animated GIF; delay in hundredths of a second.
std::vector<std::uint8_t> encode_gif(const std::vector<Image>& frames, int delay_cs);

struct RenderManifest {
  int fps = kDefaultFps;
  std::size_t frame_count = 0;
  Resolution resolution{};
};

// frame_%06d.png per pose frame plus manifest.json. Validates everything
// before writing anything.
RenderManifest render_video(const PoseSequence& seq, const std::filesystem::path& out_dir,
                            int fps, Resolution canvas, const RenderStyle& style = {},
                            const std::optional<std::filesystem::path>& gif = std::nullopt);

// Pixel geometry of a beat-alignment plot.
struct BeatPlotLayout {
  int width = 0;
  int height = 0;
  std::vector<int> audio_beat_x;
  std::vector<int> pose_beat_x;
  std::vector<std::size_t> pose_beats;  // frames
  int x_of(double frame) const;
  int margin = 20;
  std::size_t frames = 0;
};

BeatPlotLayout layout_beat_plot(const BeatTrack& audio_beats, const PoseSequence& seq,
                                int width = 800, int height = 240);

// Movement curve with vertical lines at musical beats and markers at pose
// beats.
Image plot_beat_alignment(const BeatTrack& audio_beats, const PoseSequence& seq,
                          int width = 800, int height = 240);

}  // namespace choreokit
