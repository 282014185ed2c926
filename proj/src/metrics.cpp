#include "choreokit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "choreokit/error.hpp"
#include "choreokit/skeleton.hpp"

namespace choreokit {

std::size_t movement_bin(double pixels) {
  for (std::size_t b = 1; b < kMovementBins; ++b)
    if (pixels < kMovementBinEdges[b]) return b - 1;
  return kMovementBins - 1;
}

MovementHistogram histogram_of(std::span<const double> values) {
  MovementHistogram h;
  if (values.empty()) throw InvariantError("histogram of an empty sample");
  for (double v : values) h.mass[movement_bin(v)] += 1.0;
  for (double& m : h.mass) m /= static_cast<double>(values.size());
  return h;
}

double beat_alignment_score(std::span<const std::int64_t> audio_beats,
                            std::span<const std::int64_t> pose_beats, int tolerance) {
  if (audio_beats.empty()) throw InvariantError("beat alignment score needs at least one audio beat");
  if (tolerance < 0) throw InvariantError("tolerance must be non-negative");
  std::vector<std::int64_t> audio(audio_beats.begin(), audio_beats.end());
  std::vector<std::int64_t> pose(pose_beats.begin(), pose_beats.end());
  std::sort(audio.begin(), audio.end());
  std::sort(pose.begin(), pose.end());

  std::size_t matched = 0, p = 0;
  for (std::int64_t a : audio) {
    while (p < pose.size() && pose[p] < a - tolerance) ++p;
    if (p < pose.size() && pose[p] <= a + tolerance) {
      ++matched;
      ++p;
    }
  }
  return static_cast<double>(matched) / static_cast<double>(audio.size());
}

MovementHistogram movement_histogram(const PoseSequence& seq, BodyPart part) {
  if (seq.size() < 2) throw InvariantError("movement histogram needs at least 2 frames");
  std::vector<double> values;
  values.reserve(2 * (seq.size() - 1));
  for (std::size_t f = 1; f < seq.size(); ++f)
    for (Joint j : part_joints(part)) values.push_back(distance(seq.frames[f][j], seq.frames[f - 1][j]));
  return histogram_of(values);
}

MovementHistogram spacing_histogram(const PoseSequence& seq, BodyPart part) {
  if (seq.empty()) throw InvariantError("spacing histogram needs at least 1 frame");
  const auto joints = part_joints(part);
  std::vector<double> values;
  values.reserve(seq.size());
  for (const PoseFrame& f : seq.frames) values.push_back(distance(f[joints[0]], f[joints[1]]));
  return histogram_of(values);
}

double symmetric_kl(std::span<const double> p, std::span<const double> q, double smoothing) {
  if (p.size() != q.size() || p.empty())
    throw InvariantError("symmetric_kl needs two distributions of equal, non-zero length");
  if (smoothing < 0.0) throw InvariantError("smoothing must be non-negative");
  const auto check = [](std::span<const double> v, const char* name) {
    double sum = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) throw InvariantError(std::string(name) + " has a negative or NaN entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw InvariantError(std::string(name) + " is not normalized (sums to " + std::to_string(sum) + ")");
  };
  check(p, "p");
  check(q, "q");
  const double norm = 1.0 + smoothing * static_cast<double>(p.size());
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = (p[i] + smoothing) / norm;
    const double b = (q[i] + smoothing) / norm;
    if (a > 0.0 && b > 0.0) {
      kl += (a - b) * std::log(a / b);
    } else if (a != b) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return 0.5 * kl;
}

double mdd(const PoseSequence& generated, const PoseSequence& reference, BodyPart part, double smoothing) {
  const auto g = movement_histogram(generated, part);
  const auto r = movement_histogram(reference, part);
  return symmetric_kl(g.mass, r.mass, smoothing);
}

double sdd(const PoseSequence& generated, const PoseSequence& reference, BodyPart part, double smoothing) {
  const auto g = spacing_histogram(generated, part);
  const auto r = spacing_histogram(reference, part);
  return symmetric_kl(g.mass, r.mass, smoothing);
}

}  // namespace choreokit
