#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace choreokit {

inline constexpr double kDefaultVolatilityThreshold = 5.0;
inline constexpr std::size_t kMinTsdLength = 8;

// Decomposition d_i = M(i) + S[i mod T] + residual_i of one displacement
// series, with M a cubic in the local index i.
struct TsdModel {
  std::array<double, 4> trend{};  // alpha_0..alpha_3
  std::vector<double> seasonal;   // exactly `period` entries, zero mean
  std::size_t period = 1;
  bool periodic = false;
  double residual_variance = 0.0;
  std::size_t length = 0;  // samples the model was fitted on

  double trend_at(double i) const;
  double seasonal_at(std::ptrdiff_t i) const;  // i may be negative
  // Frames covered by complete periods; 0 for an aperiodic model.
  std::size_t period_support() const;
};

// Smallest lag t in [2, n/2] with mean |d_i - d_{i+t}| <= threshold that is
// also a local minimum of that score over lags; 0 when none qualifies.
std::size_t detect_period(std::span<const double> d, double threshold);

// Period via detect_period (aperiodic series get T = n and S = 0). The trend
// is fitted through the lag-T seasonal difference, which removes any exactly
// periodic component; alpha_0 absorbs the mean so S is zero-mean.
// Throws InvariantError for series shorter than 8.
TsdModel tsd_decompose(std::span<const double> d,
                       double threshold = kDefaultVolatilityThreshold);

// Least-squares cubic through (x_k, y_k).
std::array<double, 4> fit_cubic(std::span<const double> x, std::span<const double> y);
double eval_cubic(const std::array<double, 4>& c, double x);

}  // namespace choreokit
