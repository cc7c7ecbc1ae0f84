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


#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "embdiag/numerics.h"

namespace embdiag {

// Log-mel front end with temporal mean pooling.
struct MelConfig {
  std::size_t n_mels = 128;
  std::size_t n_fft = 1024;
  std::size_t hop = 512;
  double f_min = 0.0;
  double f_max = 0.0;  // 0 selects sample_rate / 2
  double log_floor = 1e-10;

  double resolved_f_max(double sample_rate) const;
  // Throws ValidationError on hop outside (0, n_fft], n_mels == 0 or a bad
  // frequency range for the given sample rate.
  void validate(double sample_rate) const;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// Magnitude-squared one-sided spectrum of Hann-windowed frames that lie
// entirely inside the signal: floor((N - n_fft) / hop) + 1 rows of
// n_fft / 2 + 1 bins. Throws ValidationError when N < n_fft.
Matrix stft_power(std::span<const double> samples, std::size_t n_fft, std::size_t hop);

// Triangular filters centred on n_mels + 2 points spaced uniformly on the
// mel scale between f_min and f_max, sampled at the FFT bin frequencies and
// scaled so each row peaks at 1. Throws ValidationError when some filter
// covers no FFT bin.
Matrix mel_filterbank(const MelConfig& cfg, double sample_rate);

// mean over frames of ln(filterbank * power + log_floor).
std::vector<double> baseline_embedding(std::span<const double> samples, double sample_rate,
                                       const MelConfig& cfg);

}  // namespace embdiag
