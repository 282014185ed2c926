#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <vector>

namespace choreokit::detail {

// Real-to-complex FFT of fixed size; owns its FFTW plan and buffers.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    // Planner calls are not thread-safe.
    static std::mutex planner;
    std::lock_guard lock(planner);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    fftw_destroy_plan(plan_);
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t bins() const { return n_ / 2 + 1; }

  // Zero-padded input; writes |X_k|^2 for k in [0, n/2].
  void power(const double* data, std::size_t count, std::vector<double>& out) {
    std::size_t m = count < n_ ? count : n_;
    for (std::size_t i = 0; i < m; ++i) in_[i] = data[i];
    for (std::size_t i = m; i < n_; ++i) in_[i] = 0.0;
    fftw_execute(plan_);
    out.resize(bins());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

}  // namespace choreokit::detail
