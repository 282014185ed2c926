#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "choreokit/beats.hpp"
#include "choreokit/pose.hpp"

namespace choreokit {

inline constexpr std::array<double, 6> kMovementBinEdges{0, 20, 40, 60, 80, 400};
inline constexpr std::size_t kMovementBins = 5;
inline constexpr double kKlSmoothing = 1e-6;

struct MovementHistogram {
  std::array<double, kMovementBins> mass{};
};

// Bin of a pixel distance; values at or beyond 400 px land in the last bin.
std::size_t movement_bin(double pixels);
MovementHistogram histogram_of(std::span<const double> values);

// Fraction of audio beats matched by a distinct pose beat within
// +-tolerance frames. Beats are matched in time order, each audio beat
// taking the earliest unused pose beat in range (which maximizes the number
// of matches). Throws InvariantError for an empty audio track.
double beat_alignment_score(std::span<const std::int64_t> audio_beats,
                            std::span<const std::int64_t> pose_beats, int tolerance);

// Per-frame displacement of the part's two joints, binned.
MovementHistogram movement_histogram(const PoseSequence& seq, BodyPart part);
// Per-frame left-to-right distance of the part's joints, binned.
MovementHistogram spacing_histogram(const PoseSequence& seq, BodyPart part);

// (KL(p||q) + KL(q||p)) / 2 after adding `smoothing` to every bin and
// renormalizing. Inputs must each sum to 1 within 1e-6.
double symmetric_kl(std::span<const double> p, std::span<const double> q,
                    double smoothing = kKlSmoothing);

double mdd(const PoseSequence& generated, const PoseSequence& reference, BodyPart part,
           double smoothing = kKlSmoothing);
double sdd(const PoseSequence& generated, const PoseSequence& reference, BodyPart part,
           double smoothing = kKlSmoothing);

}  // namespace choreokit
