#include "choreokit/tsd.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "choreokit/error.hpp"

namespace choreokit {

namespace {

double lag_score(std::span<const double> d, std::size_t t) {
  double sum = 0.0;
  const std::size_t count = d.size() - t;
  for (std::size_t i = 0; i < count; ++i) sum += std::abs(d[i] - d[i + t]);
  return sum / static_cast<double>(count);
}

Eigen::VectorXd least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& b) {
  return a.completeOrthogonalDecomposition().solve(b);
}

}  // namespace

double TsdModel::trend_at(double i) const { return eval_cubic(trend, i); }

double TsdModel::seasonal_at(std::ptrdiff_t i) const {
  if (seasonal.empty()) return 0.0;
  const auto t = static_cast<std::ptrdiff_t>(seasonal.size());
  return seasonal[static_cast<std::size_t>(((i % t) + t) % t)];
}

std::size_t TsdModel::period_support() const {
  if (!periodic || period == 0) return 0;
  return (length / period) * period;
}

std::array<double, 4> fit_cubic(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw InvariantError("fit_cubic: x and y differ in length");
  if (x.empty()) return {};
  Eigen::MatrixXd a(x.size(), 4);
  Eigen::VectorXd b(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    a(r, 0) = 1.0;
    a(r, 1) = x[k];
    a(r, 2) = x[k] * x[k];
    a(r, 3) = x[k] * x[k] * x[k];
    b(r) = y[k];
  }
  const Eigen::VectorXd c = least_squares(a, b);
  return {c(0), c(1), c(2), c(3)};
}

double eval_cubic(const std::array<double, 4>& c, double x) {
  return c[0] + x * (c[1] + x * (c[2] + x * c[3]));
}

std::size_t detect_period(std::span<const double> d, double threshold) {
  const std::size_t n = d.size();
  if (n < 4) return 0;
  std::vector<double> score(n, std::numeric_limits<double>::infinity());
  for (std::size_t t = 1; t < n; ++t) score[t] = lag_score(d, t);
  for (std::size_t t = 2; t <= n / 2; ++t) {
    if (score[t] > threshold) continue;
    const bool left = score[t] <= score[t - 1];
    const bool right = t + 1 >= n || score[t] <= score[t + 1];
    if (left && right) return t;
  }
  return 0;
}

TsdModel tsd_decompose(std::span<const double> d, double threshold) {
  const std::size_t n = d.size();
  if (n < kMinTsdLength)
    throw InvariantError("time-series decomposition needs at least " + std::to_string(kMinTsdLength) +
                         " samples, got " + std::to_string(n));
  TsdModel model;
  model.length = n;
  const std::size_t period = detect_period(d, threshold);

  if (period == 0) {
    std::vector<double> x(n);
    std::iota(x.begin(), x.end(), 0.0);
    model.trend = fit_cubic(x, d);
    model.period = n;
    model.periodic = false;
    model.seasonal.assign(n, 0.0);
  } else {
    model.period = period;
    model.periodic = true;
    // d_{i+T} - d_i cancels the seasonal term and alpha_0.
    const std::size_t rows = n - period;
    Eigen::MatrixXd a(rows, 3);
    Eigen::VectorXd b(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const double lo = static_cast<double>(i), hi = static_cast<double>(i + period);
      const auto r = static_cast<Eigen::Index>(i);
      a(r, 0) = hi - lo;
      a(r, 1) = hi * hi - lo * lo;
      a(r, 2) = hi * hi * hi - lo * lo * lo;
      b(r) = d[i + period] - d[i];
    }
    const Eigen::VectorXd alpha = least_squares(a, b);
    model.trend = {0.0, alpha(0), alpha(1), alpha(2)};

    std::vector<double> sum(period, 0.0);
    std::vector<std::size_t> count(period, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sum[i % period] += d[i] - model.trend_at(static_cast<double>(i));
      ++count[i % period];
    }
    model.seasonal.resize(period);
    for (std::size_t t = 0; t < period; ++t) model.seasonal[t] = sum[t] / static_cast<double>(count[t]);
    const double level = std::accumulate(model.seasonal.begin(), model.seasonal.end(), 0.0) /
                         static_cast<double>(period);
    for (double& s : model.seasonal) s -= level;
    model.trend[0] = level;
  }

  double mean = 0.0;
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    residual[i] = d[i] - model.trend_at(static_cast<double>(i)) -
                  model.seasonal_at(static_cast<std::ptrdiff_t>(i));
    mean += residual[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : residual) var += (r - mean) * (r - mean);
  model.residual_variance = var / static_cast<double>(n);
  return model;
}

}  // namespace choreokit
