#include "choreokit/alignment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "choreokit/error.hpp"
#include "choreokit/skeleton.hpp"

namespace choreokit {

namespace {

constexpr std::size_t kCoordinates = 2 * kNumJoints;

// Coordinate series c of the sequence: x of joint c/2 for even c, y for odd.
std::vector<std::vector<double>> to_series(const PoseSequence& seq) {
  std::vector<std::vector<double>> out(kCoordinates, std::vector<double>(seq.size()));
  for (std::size_t f = 0; f < seq.size(); ++f)
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      out[2 * j][f] = seq.frames[f].keypoints[j].x;
      out[2 * j + 1][f] = seq.frames[f].keypoints[j].y;
    }
  return out;
}

void write_range(PoseSequence& seq, const std::vector<std::vector<double>>& series,
                 std::size_t begin, std::size_t end) {
  for (std::size_t f = begin; f <= end && f < seq.size(); ++f)
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      seq.frames[f].keypoints[j].x = series[2 * j][f];
      seq.frames[f].keypoints[j].y = series[2 * j + 1][f];
    }
}

double max_step(const std::vector<std::vector<double>>& series, std::size_t k) {
  double best = 0.0;
  for (std::size_t j = 0; j < kNumJoints; ++j)
    best = std::max(best, std::hypot(series[2 * j][k] - series[2 * j][k - 1],
                                     series[2 * j + 1][k] - series[2 * j + 1][k - 1]));
  return best;
}

// Cubic Hermite between the window endpoints, slopes taken from the frames
// just outside the window.
void hermite_fill(std::vector<double>& s, std::size_t start, std::size_t end) {
  const double len = static_cast<double>(end - start);
  const double chord = (s[end] - s[start]) / len;
  const double m0 = start > 0 ? s[start] - s[start - 1] : chord;
  const double m1 = end + 1 < s.size() ? s[end + 1] - s[end] : chord;
  for (std::size_t f = start + 1; f < end; ++f) {
    const double t = static_cast<double>(f - start) / len;
    const double t2 = t * t, t3 = t2 * t;
    s[f] = (2 * t3 - 3 * t2 + 1) * s[start] + (t3 - 2 * t2 + t) * len * m0 +
           (-2 * t3 + 3 * t2) * s[end] + (t3 - t2) * len * m1;
  }
}

// Endpoint-constrained least-squares cubic through (t_k, y_k):
// c(t) = L(t) + (t - t0)(t - t1)(b0 + b1 t), L the line through the fixed ends.
struct ConstrainedCubic {
  double t0, t1, y0, y1, b0 = 0.0, b1 = 0.0;

  ConstrainedCubic(double t0_, double t1_, double y0_, double y1_,
                   const std::vector<double>& t, const std::vector<double>& y)
      : t0(t0_), t1(t1_), y0(y0_), y1(y1_) {
    if (t.size() < 3) return;
    Eigen::MatrixXd a(t.size(), 2);
    Eigen::VectorXd r(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double u = (t[k] - t0) / (t1 - t0);
      const auto i = static_cast<Eigen::Index>(k);
      a(i, 0) = u * (u - 1.0);
      a(i, 1) = u * u * (u - 1.0);
      r(i) = y[k] - line(u);
    }
    const Eigen::Vector2d beta = a.completeOrthogonalDecomposition().solve(r);
    b0 = beta(0);
    b1 = beta(1);
  }
  double line(double u) const { return y0 + (y1 - y0) * u; }
  double operator()(double t) const {
    const double u = (t - t0) / (t1 - t0);
    return line(u) + u * (u - 1.0) * (b0 + b1 * u);
  }
};

}  // namespace

void AlignmentWindows::validate() const {
  if (repair < 2) throw InvariantError("repair window must be at least 2 frames");
  if (reference <= repair) throw InvariantError("reference window must be longer than the repair window");
  if (beat_search < 2) throw InvariantError("beat search window must be at least 2 frames");
}

std::vector<std::size_t> detect_discontinuities(const PoseSequence& seq, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t k = 1; k < seq.size(); ++k)
    for (std::size_t j = 0; j < kNumJoints; ++j)
      if (distance(seq.frames[k].keypoints[j], seq.frames[k - 1].keypoints[j]) > threshold) {
        out.push_back(k);
        break;
      }
  return out;
}

EndpointLine linear_fit_endpoints(std::span<const double> values) {
  if (values.empty()) return {};
  if (values.size() == 1) return {values.front(), 0.0};
  return {values.front(), (values.back() - values.front()) / static_cast<double>(values.size() - 1)};
}

void repair_window(std::vector<double>& series, std::size_t start, std::size_t end,
                   const SpatialAlignOptions& options) {
  options.windows.validate();
  if (end >= series.size() || end < start + 2) return;
  const auto wa = static_cast<std::size_t>(options.windows.repair);
  const auto wb = static_cast<std::size_t>(options.windows.reference);
  const std::size_t span = wb + 1;

  std::vector<TsdModel> models;
  std::vector<std::size_t> model_start;
  for (std::size_t i = 0; i < wb; i += wa) {
    if (start < i + wb) break;
    const std::size_t last = start - i;
    const std::size_t first = last - wb;
    std::span<const double> ref(series.data() + first, span);
    const EndpointLine chord = linear_fit_endpoints(ref);
    std::vector<double> d(span);
    for (std::size_t u = 0; u < span; ++u) d[u] = ref[u] - chord(static_cast<double>(u));
    models.push_back(tsd_decompose(d, options.volatility_threshold));
    model_start.push_back(first);
  }
  if (models.empty()) {
    hermite_fill(series, start, end);
    return;
  }

  // Periodic term from the model with the widest period support; on ties the
  // one closest to the window (fitted first) wins.
  std::size_t chosen = 0;
  for (std::size_t m = 1; m < models.size(); ++m)
    if (models[m].period_support() > models[chosen].period_support()) chosen = m;

  const std::size_t len = end - start;
  std::vector<double> q(len + 1, 0.0);
  for (std::size_t u = 0; u <= len; ++u) {
    double trend = 0.0;
    for (const TsdModel& model : models)
      trend += model.trend_at(static_cast<double>(span - 1 - len + u));
    trend /= static_cast<double>(models.size());
    const auto phase = static_cast<std::ptrdiff_t>(start + u) - static_cast<std::ptrdiff_t>(model_start[chosen]);
    q[u] = trend + models[chosen].seasonal_at(phase);
  }
  const EndpointLine qline = linear_fit_endpoints(q);
  const EndpointLine anchor{series[start], (series[end] - series[start]) / static_cast<double>(len)};
  for (std::size_t u = 1; u < len; ++u) {
    const double x = static_cast<double>(u);
    series[start + u] = anchor(x) + q[u] - qline(x);
  }
}

PoseSequence spatial_align(const PoseSequence& seq, const SpatialAlignOptions& options) {
  options.windows.validate();
  PoseSequence out = seq;
  if (seq.size() < 3) return out;
  auto series = to_series(seq);
  const auto half = static_cast<std::size_t>(options.windows.repair / 2);
  const std::size_t n = seq.size();

  for (std::size_t k = 1; k < n; ++k) {
    if (max_step(series, k) <= options.discontinuity_threshold) continue;
    const std::size_t start = k > half ? k - half : 0;
    const std::size_t end = std::min(n - 1, k + half);
    if (end < start + 2) continue;
    for (auto& s : series) repair_window(s, start, end, options);
    write_range(out, series, start, end);
    k = end;
  }
  return out;
}

std::vector<BeatWindow> grid_windows(std::size_t frames, std::size_t width) {
  if (width == 0) throw InvariantError("window width must be positive");
  std::vector<BeatWindow> out;
  for (std::size_t b = 0; b + width <= frames; b += width) out.push_back({b, b + width, -1});
  return out;
}

std::vector<BeatWindow> beat_windows(const BeatTrack& beats, std::size_t frames,
                                     std::size_t fallback_width) {
  std::vector<std::int64_t> b;
  for (std::int64_t f : beats.beat_frames)
    if (f >= 0 && static_cast<std::size_t>(f) < frames && (b.empty() || f > b.back())) b.push_back(f);
  std::vector<BeatWindow> out;
  if (b.empty()) return out;

  const auto lead = [&](std::size_t i) {
    return b.size() > 1 ? b[i + 1] - b[i] : static_cast<std::int64_t>(fallback_width);
  };
  std::int64_t begin = std::max<std::int64_t>(0, b.front() - lead(0) / 2);
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::int64_t end;
    if (i + 1 < b.size()) {
      end = (b[i] + b[i + 1] + 1) / 2;
    } else {
      const std::int64_t gap = b.size() > 1 ? b[i] - b[i - 1] : static_cast<std::int64_t>(fallback_width);
      end = std::min<std::int64_t>(static_cast<std::int64_t>(frames), b[i] + (gap + 1) / 2);
    }
    out.push_back({static_cast<std::size_t>(begin), static_cast<std::size_t>(end), b[i]});
    begin = end;
  }
  return out;
}

double frame_movement(const PoseSequence& seq, std::size_t j) {
  if (j == 0 || j >= seq.size()) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < kNumJoints; ++k)
    sum += distance(seq.frames[j].keypoints[k], seq.frames[j - 1].keypoints[k]);
  return sum;
}

std::vector<std::size_t> find_pose_beats(const PoseSequence& seq, std::span<const BeatWindow> windows) {
  std::vector<std::size_t> out;
  out.reserve(windows.size());
  for (const BeatWindow& w : windows) {
    if (w.begin >= w.end || w.end > seq.size())
      throw InvariantError("beat window [" + std::to_string(w.begin) + ", " + std::to_string(w.end) +
                           ") outside sequence of " + std::to_string(seq.size()) + " frames");
    std::size_t best = w.begin;
    double best_value = -1.0;
    for (std::size_t j = w.begin; j < w.end; ++j) {
      if (j == 0) continue;
      const double m = frame_movement(seq, j);
      if (m > best_value) {
        best_value = m;
        best = j;
      }
    }
    out.push_back(best);
  }
  return out;
}

std::vector<std::size_t> find_pose_beats(const PoseSequence& seq, std::size_t omega_c) {
  const auto windows = grid_windows(seq.size(), omega_c);
  return find_pose_beats(seq, windows);
}

PoseSequence temporal_align(const PoseSequence& seq, std::span<const BeatWindow> windows) {
  PoseSequence out = seq;
  const auto series = to_series(seq);
  const auto mus = find_pose_beats(seq, windows);
  std::vector<double> t, y;

  for (std::size_t w = 0; w < windows.size(); ++w) {
    const BeatWindow& win = windows[w];
    if (win.beat < 0) continue;
    const std::size_t i = win.begin, e = win.end - 1, mu = mus[w];
    const auto b = static_cast<std::size_t>(win.beat);
    if (b < i || b > e || mu == b) continue;
    // The boundary poses are fixed, so the beat cannot be moved onto them,
    // and a pose beat on the first frame belongs to the previous window's step.
    if (b == i || b == e || mu == i) continue;

    for (std::size_t c = 0; c < kCoordinates; ++c) {
      const std::vector<double>& s = series[c];
      std::vector<double> fitted(e - i + 1);

      t.clear();
      y.clear();
      for (std::size_t j = i; j <= mu; ++j) {
        t.push_back(static_cast<double>(i) + static_cast<double>(j - i) * static_cast<double>(b - i) /
                                                 static_cast<double>(mu - i));
        y.push_back(s[j]);
      }
      const ConstrainedCubic left(static_cast<double>(i), static_cast<double>(b), s[i], s[mu], t, y);
      for (std::size_t f = i; f <= b; ++f) fitted[f - i] = left(static_cast<double>(f));

      t.clear();
      y.clear();
      for (std::size_t j = mu; j <= e; ++j) {
        const double span = static_cast<double>(e - mu);
        t.push_back(span > 0 ? static_cast<double>(b) + static_cast<double>(j - mu) *
                                                           static_cast<double>(e - b) / span
                             : static_cast<double>(e));
        y.push_back(s[j]);
      }
      if (mu == e) {
        for (std::size_t f = b + 1; f <= e; ++f) fitted[f - i] = s[e];
      } else {
        const ConstrainedCubic right(static_cast<double>(b), static_cast<double>(e), s[mu], s[e], t, y);
        for (std::size_t f = b + 1; f <= e; ++f) fitted[f - i] = right(static_cast<double>(f));
      }
      fitted.front() = s[i];
      fitted.back() = s[e];

      for (std::size_t f = i; f <= e; ++f) {
        Keypoint& kp = out.frames[f].keypoints[c / 2];
        (c % 2 == 0 ? kp.x : kp.y) = fitted[f - i];
      }
    }
  }
  return out;
}

PoseSequence temporal_align(const PoseSequence& seq, const BeatTrack& beats, std::size_t fallback_width) {
  if (beats.empty()) return seq;
  const auto windows = beat_windows(beats, seq.size(), fallback_width);
  return temporal_align(seq, windows);
}

}  // namespace choreokit
