/*
 * Copyright 2026 The embdiag Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include "embdiag/baseline_features.h"

#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>
#include <fmt/format.h>

#include "embdiag/error.h"

namespace embdiag {
namespace {

// FFTW's planner is not thread-safe; execution of a plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

class RealFft {
 public:
  explicit RealFft(std::size_t n)
      : n_(n),
        in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
        out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
    if (!in_ || !out_) throw Error("fftw_malloc failed");
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
    if (plan_ == nullptr) throw Error("fftw plan creation failed");
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* input() { return in_.get(); }
  const fftw_complex* output() const { return out_.get(); }
  void execute() { fftw_execute(plan_); }

 private:
  std::size_t n_;
  std::unique_ptr<double, FftwFree> in_;
  std::unique_ptr<fftw_complex, FftwFree> out_;
  fftw_plan plan_ = nullptr;
};

}  // namespace

double MelConfig::resolved_f_max(double sample_rate) const {
  return f_max > 0.0 ? f_max : sample_rate / 2.0;
}

void MelConfig::validate(double sample_rate) const {
  if (!(sample_rate > 0.0)) throw ValidationError("sample rate must be positive");
  if (n_mels == 0) throw ValidationError("n_mels must be at least 1");
  if (n_fft < 2) throw ValidationError("n_fft must be at least 2");
  if (hop == 0 || hop > n_fft) {
    throw ValidationError(fmt::format("hop must lie in (0, n_fft = {}], got {}", n_fft, hop));
  }
  const double top = resolved_f_max(sample_rate);
  if (!(f_min >= 0.0 && f_min < top && top <= sample_rate / 2.0)) {
    throw ValidationError(fmt::format(
        "frequency range must satisfy 0 <= f_min < f_max <= {} Hz, got [{}, {}]",
        sample_rate / 2.0, f_min, top));
  }
  if (!(log_floor > 0.0)) throw ValidationError("log_floor must be positive");
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

Matrix stft_power(std::span<const double> samples, std::size_t n_fft, std::size_t hop) {
  if (n_fft < 2) throw ValidationError("n_fft must be at least 2");
  if (hop == 0) throw ValidationError("hop must be positive");
  if (samples.size() < n_fft) {
    throw ValidationError(fmt::format("signal of {} samples is shorter than n_fft = {}",
                                      samples.size(), n_fft));
  }
  const std::size_t frames = (samples.size() - n_fft) / hop + 1;
  const std::size_t bins = n_fft / 2 + 1;
  const auto window = hann_window(n_fft);
  RealFft fft(n_fft);
  Matrix power(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(bins));
  for (std::size_t f = 0; f < frames; ++f) {
    const double* src = samples.data() + f * hop;
    double* in = fft.input();
    for (std::size_t i = 0; i < n_fft; ++i) in[i] = src[i] * window[i];
    fft.execute();
    const fftw_complex* out = fft.output();
    for (std::size_t k = 0; k < bins; ++k) {
      power(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(k)) =
          out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
  }
  return power;
}

Matrix mel_filterbank(const MelConfig& cfg, double sample_rate) {
  cfg.validate(sample_rate);
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(cfg.resolved_f_max(sample_rate));
  std::vector<double> edges(cfg.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(cfg.n_mels + 1));
  }
  Matrix fb = Matrix::Zero(static_cast<Eigen::Index>(cfg.n_mels), static_cast<Eigen::Index>(bins));
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
    double peak = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(cfg.n_fft);
      double w = 0.0;
      if (f > lo && f <= centre) {
        w = (f - lo) / (centre - lo);
      } else if (f > centre && f < hi) {
        w = (hi - f) / (hi - centre);
      }
      fb(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = w;
      peak = std::max(peak, w);
    }
    if (peak <= 0.0) {
      throw ValidationError(fmt::format(
          "mel filter {} ({:.2f}-{:.2f} Hz) covers no FFT bin; n_mels = {} is too large for "
          "n_fft = {} at {} Hz",
          m, lo, hi, cfg.n_mels, cfg.n_fft, sample_rate));
    }
    fb.row(static_cast<Eigen::Index>(m)) /= peak;
  }
  return fb;
}

std::vector<double> baseline_embedding(std::span<const double> samples, double sample_rate,
                                       const MelConfig& cfg) {
  const Matrix fb = mel_filterbank(cfg, sample_rate);
  const Matrix power = stft_power(samples, cfg.n_fft, cfg.hop);
  const Matrix mel = power * fb.transpose();  // frames x n_mels
  std::vector<double> out(cfg.n_mels, 0.0);
  for (Eigen::Index f = 0; f < mel.rows(); ++f) {
    for (Eigen::Index m = 0; m < mel.cols(); ++m) {
      out[static_cast<std::size_t>(m)] += std::log(mel(f, m) + cfg.log_floor);
    }
  }
  for (auto& v : out) v /= static_cast<double>(mel.rows());
  return out;
}

}  // namespace embdiag
