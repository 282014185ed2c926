#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "choreokit/error.hpp"
#include "choreokit/metrics.hpp"
#include "choreokit/skeleton.hpp"
#include "support.hpp"

using namespace choreokit;
using testing_support::load_random_walks;

namespace {

// Maximum one-to-one matching of audio beats to pose beats within the
// tolerance, by augmenting paths.
std::size_t maximum_matching(const std::vector<std::int64_t>& audio, const std::vector<std::int64_t>& pose,
                             int tolerance) {
  std::vector<int> owner(pose.size(), -1);
  std::function<bool(std::size_t, std::vector<bool>&)> augment = [&](std::size_t a, std::vector<bool>& seen) {
    for (std::size_t p = 0; p < pose.size(); ++p) {
      if (seen[p] || std::abs(audio[a] - pose[p]) > tolerance) continue;
      seen[p] = true;
      if (owner[p] < 0 || augment(static_cast<std::size_t>(owner[p]), seen)) {
        owner[p] = static_cast<int>(a);
        return true;
      }
    }
    return false;
  };
  std::size_t matched = 0;
  for (std::size_t a = 0; a < audio.size(); ++a) {
    std::vector<bool> seen(pose.size(), false);
    matched += augment(a, seen);
  }
  return matched;
}

std::vector<std::int64_t> random_beats(std::mt19937_64& gen, std::size_t n, std::int64_t span) {
  std::uniform_int_distribution<std::int64_t> u(0, span);
  std::vector<std::int64_t> b(n);
  for (auto& x : b) x = u(gen);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

std::vector<double> random_distribution(std::mt19937_64& gen, std::size_t n, bool sparse) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  double sum = 0.0;
  for (double& x : p) sum += x = sparse && u(gen) < 0.3 ? 0.0 : u(gen);
  if (sum == 0.0) {
    p[0] = sum = 1.0;
  }
  for (double& x : p) x /= sum;
  return p;
}

// 0.5 * sum_i (p_i ln(p_i / q_i) + q_i ln(q_i / p_i)) after smoothing.
double kl_oracle(std::vector<double> p, std::vector<double> q, double eps) {
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i] += eps;
    sq += q[i] += eps;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = p[i] / sp, b = q[i] / sq;
    total += a * std::log(a / b) + b * std::log(b / a);
  }
  return 0.5 * total;
}

std::vector<double> as_vector(const MovementHistogram& h) { return {h.mass.begin(), h.mass.end()}; }

// Brute-force binning of per-frame left-right distances.
std::vector<double> spacing_oracle(const PoseSequence& seq, BodyPart part) {
  const auto joints = part_joints(part);
  std::vector<double> mass(5, 0.0);
  for (const PoseFrame& f : seq.frames) {
    const Keypoint& a = f.keypoints[static_cast<std::size_t>(joints[0])];
    const Keypoint& b = f.keypoints[static_cast<std::size_t>(joints[1])];
    const double d = std::hypot(a.x - b.x, a.y - b.y);
    std::size_t bin = 4;
    for (std::size_t k = 0; k < 4; ++k)
      if (d < 20.0 * static_cast<double>(k + 1)) {
        bin = k;
        break;
      }
    mass[bin] += 1.0 / static_cast<double>(seq.size());
  }
  return mass;
}

}  // namespace

// ---------------------------------------------------------------- beat alignment score

TEST(BeatAlignmentScore, IdenticalListsScoreOne) {
  const std::vector<std::int64_t> b{3, 15, 27, 39};
  EXPECT_EQ(beat_alignment_score(b, b, 0), 1.0);
}

TEST(BeatAlignmentScore, OneMismatch) {
  const std::vector<std::int64_t> audio{10, 20, 30}, pose{10, 22, 30};
  EXPECT_DOUBLE_EQ(beat_alignment_score(audio, pose, 0), 2.0 / 3.0);
  EXPECT_EQ(beat_alignment_score(audio, pose, 2), 1.0);
}

TEST(BeatAlignmentScore, EachPoseBeatIsUsedOnce) {
  const std::vector<std::int64_t> audio{10, 11}, pose{10};
  EXPECT_EQ(beat_alignment_score(audio, pose, 2), 0.5);
}

TEST(BeatAlignmentScore, EmptyAudioIsAnError) {
  const std::vector<std::int64_t> none, pose{1};
  EXPECT_THROW(beat_alignment_score(none, pose, 2), InvariantError);
  EXPECT_EQ(beat_alignment_score(pose, none, 2), 0.0);
}

TEST(BeatAlignmentScore, EqualsMaximumMatching) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 500; ++trial) {
    const auto audio = random_beats(gen, 1 + trial % 12, 60);
    const auto pose = random_beats(gen, trial % 15, 60);
    const int tol = trial % 4;
    const double expected = static_cast<double>(maximum_matching(audio, pose, tol)) / static_cast<double>(audio.size());
    EXPECT_DOUBLE_EQ(beat_alignment_score(audio, pose, tol), expected) << trial;
  }
}

TEST(BeatAlignmentScore, BoundedAndMonotoneInTolerance) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 200; ++trial) {
    const auto audio = random_beats(gen, 1 + trial % 20, 200);
    const auto pose = random_beats(gen, 1 + trial % 17, 200);
    double last = 0.0;
    for (int tol = 0; tol <= 10; ++tol) {
      const double s = beat_alignment_score(audio, pose, tol);
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 1.0);
      EXPECT_GE(s, last);
      last = s;
    }
  }
}

// ---------------------------------------------------------------- histograms

TEST(MovementBins, EdgesAreHalfOpen) {
  EXPECT_EQ(movement_bin(0.0), 0u);
  EXPECT_EQ(movement_bin(19.999), 0u);
  EXPECT_EQ(movement_bin(20.0), 1u);
  EXPECT_EQ(movement_bin(79.9), 3u);
  EXPECT_EQ(movement_bin(80.0), 4u);
  EXPECT_EQ(movement_bin(400.0), 4u);
  EXPECT_EQ(movement_bin(1e9), 4u);
}

TEST(MovementHistogram, ConstantSequenceIsAllInFirstBin) {
  const PoseSequence seq = testing_support::make_sequence(
      10, [](std::size_t, std::size_t j) { return testing_support::rest_position(j); });
  for (BodyPart part : {BodyPart::kHand, BodyPart::kFoot})
    EXPECT_EQ(as_vector(movement_histogram(seq, part)), (std::vector<double>{1, 0, 0, 0, 0}));
}

TEST(MovementHistogram, MatchesBruteForceBinning) {
  for (const auto& walk : load_random_walks()) {
    const auto hand = as_vector(movement_histogram(walk.seq, BodyPart::kHand));
    const auto foot = as_vector(movement_histogram(walk.seq, BodyPart::kFoot));
    for (std::size_t k = 0; k < kMovementBins; ++k) {
      EXPECT_NEAR(hand[k], walk.hand[k], 1e-12);
      EXPECT_NEAR(foot[k], walk.foot[k], 1e-12);
    }
  }
}

TEST(MovementHistogram, SumsToOneAndIgnoresTranslation) {
  for (const auto& walk : load_random_walks()) {
    PoseSequence moved = walk.seq;
    for (PoseFrame& f : moved.frames)
      for (Keypoint& kp : f.keypoints) {
        kp.x += 137.25;
        kp.y -= 64.5;
      }
    for (BodyPart part : {BodyPart::kHand, BodyPart::kFoot}) {
      const auto h = as_vector(movement_histogram(walk.seq, part));
      double sum = 0.0;
      for (double m : h) {
        EXPECT_GE(m, 0.0);
        sum += m;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
      const auto g = as_vector(movement_histogram(moved, part));
      for (std::size_t k = 0; k < kMovementBins; ++k) EXPECT_NEAR(g[k], h[k], 1e-12);
    }
  }
}

TEST(SpacingHistogram, MatchesBruteForceBinning) {
  for (const auto& walk : load_random_walks())
    for (BodyPart part : {BodyPart::kHand, BodyPart::kFoot}) {
      const auto got = as_vector(spacing_histogram(walk.seq, part));
      const auto expected = spacing_oracle(walk.seq, part);
      for (std::size_t k = 0; k < kMovementBins; ++k) EXPECT_NEAR(got[k], expected[k], 1e-12);
    }
}

// ---------------------------------------------------------------- symmetric KL

TEST(SymmetricKl, IdenticalDistributionsGiveZero) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4, 0.0};
  EXPECT_NEAR(symmetric_kl(p, p), 0.0, 1e-15);
}

TEST(SymmetricKl, TwoBinExample) {
  const std::vector<double> p{0.7, 0.3}, q{0.5, 0.5};
  // 0.5 * (0.7 ln 1.4 + 0.3 ln 0.6 + 0.5 ln(5/7) + 0.5 ln(5/3))
  EXPECT_NEAR(symmetric_kl(p, q), 0.0847298, 1e-4);
  EXPECT_NEAR(symmetric_kl(p, q, 0.0), kl_oracle(p, q, 0.0), 1e-15);
}

TEST(SymmetricKl, MatchesDirectSummation) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = random_distribution(gen, 5, trial % 2 == 0);
    const auto q = random_distribution(gen, 5, trial % 3 == 0);
    EXPECT_NEAR(symmetric_kl(p, q), kl_oracle(p, q, kKlSmoothing), 1e-12) << trial;
  }
}

TEST(SymmetricKl, SymmetricAndNonNegative) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = random_distribution(gen, 2 + trial % 6, trial % 2 == 0);
    const auto q = random_distribution(gen, p.size(), trial % 5 == 0);
    const double a = symmetric_kl(p, q), b = symmetric_kl(q, p);
    EXPECT_GE(a, 0.0);
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(SymmetricKl, ZeroBinsStayFinite) {
  const std::vector<double> p{1, 0, 0, 0, 0}, q{0, 0, 0, 0, 1};
  EXPECT_TRUE(std::isfinite(symmetric_kl(p, q)));
}

TEST(SymmetricKl, InvalidInputRejected) {
  const std::vector<double> p{0.5, 0.5}, bad{0.5, 0.6}, three{0.2, 0.3, 0.5};
  EXPECT_THROW(symmetric_kl(p, bad), InvariantError);
  EXPECT_THROW(symmetric_kl(p, three), InvariantError);
}

// ---------------------------------------------------------------- MDD and SDD

TEST(DistributionDistances, ZeroOnIdenticalInput) {
  for (const auto& walk : load_random_walks())
    for (BodyPart part : {BodyPart::kHand, BodyPart::kFoot}) {
      EXPECT_EQ(mdd(walk.seq, walk.seq, part), 0.0);
      EXPECT_EQ(sdd(walk.seq, walk.seq, part), 0.0);
    }
}

TEST(DistributionDistances, SymmetricAndEqualToComposition) {
  const auto walks = load_random_walks();
  for (std::size_t w = 0; w + 1 < walks.size(); ++w)
    for (BodyPart part : {BodyPart::kHand, BodyPart::kFoot}) {
      const PoseSequence& a = walks[w].seq;
      const PoseSequence& b = walks[w + 1].seq;
      const double m = mdd(a, b, part), s = sdd(a, b, part);
      EXPECT_NEAR(m, mdd(b, a, part), 1e-12);
      EXPECT_NEAR(s, sdd(b, a, part), 1e-12);
      const std::vector<double> ha = part == BodyPart::kHand ? walks[w].hand : walks[w].foot;
      const std::vector<double> hb = part == BodyPart::kHand ? walks[w + 1].hand : walks[w + 1].foot;
      EXPECT_NEAR(m, kl_oracle(ha, hb, kKlSmoothing), 1e-12);
      EXPECT_NEAR(s, kl_oracle(spacing_oracle(a, part), spacing_oracle(b, part), kKlSmoothing), 1e-12);
    }
}

TEST(DistributionDistances, ShortSequencesRejected) {
  const PoseSequence one = testing_support::make_sequence(
      1, [](std::size_t, std::size_t j) { return testing_support::rest_position(j); });
  EXPECT_THROW(mdd(one, one, BodyPart::kHand), InvariantError);
  EXPECT_EQ(sdd(one, one, BodyPart::kFoot), 0.0);
}
