#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "choreokit/pose.hpp"

namespace testing_support {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(CHOREOKIT_TEST_DATA) / name;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("choreokit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// A sequence whose joint j sits at position(f, j) with full confidence.
inline choreokit::PoseSequence make_sequence(
    std::size_t frames, const std::function<std::pair<double, double>(std::size_t, std::size_t)>& position) {
  choreokit::PoseSequence seq;
  seq.frames.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    seq.frames[f].frame_index = static_cast<std::int64_t>(f);
    for (std::size_t j = 0; j < choreokit::kNumJoints; ++j) {
      const auto [x, y] = position(f, j);
      seq.frames[f].keypoints[j] = {x, y, 1.0};
    }
  }
  return seq;
}

// A standing figure: joint j at x = 900 + 10 j, nose on top and the ankles
// lowest.
inline std::pair<double, double> rest_position(std::size_t j) {
  static constexpr double kY[choreokit::kNumJoints] = {200, 240, 250, 330, 410, 250, 330, 410, 450,
                                                       560, 680, 450, 560, 680, 190, 190, 195, 195};
  return {900.0 + 10.0 * static_cast<double>(j), kY[j]};
}

// Random-walk fixtures with independently computed hand and foot
// movement histograms.
struct RandomWalk {
  choreokit::PoseSequence seq;
  std::vector<double> hand, foot;
};

inline std::vector<RandomWalk> load_random_walks() {
  const auto doc = nlohmann::json::parse(read_text(data_path("random_walks.json")));
  std::vector<RandomWalk> out;
  for (const auto& item : doc) {
    RandomWalk w;
    const auto& frames = item["frames"];
    w.seq = make_sequence(frames.size(), [&](std::size_t f, std::size_t j) {
      return std::pair{frames[f][j][0].get<double>(), frames[f][j][1].get<double>()};
    });
    w.hand = item["hand"].get<std::vector<double>>();
    w.foot = item["foot"].get<std::vector<double>>();
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace testing_support
