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
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "embdiag/data_model.h"
#include "embdiag/numerics.h"

namespace embdiag {

// Additive Gaussian model of class, recording and clip structure. Every
// scale is a per-coordinate standard deviation:
//   class mean      ~ N(0, class_scale^2) on dims [0, class_dims), 0 elsewhere
//   recording mean  ~ N(0, recording_scale^2) on all dims
//   clip            = class mean + recording mean + N(0, noise_scale^2)
struct SynthConfig {
  std::size_t n_classes = 4;
  std::size_t recordings_per_class = 8;
  std::size_t clips_per_recording = 25;
  std::size_t dim = 256;
  std::size_t class_dims = 12;
  double class_scale = 1.0;
  double recording_scale = 4.0;
  double noise_scale = 1.0;
  double test_fraction = 0.2;
  double clip_duration_s = 5.0;
  std::uint64_t seed = 7;

  void validate() const;
};

// Latent means behind a generated dataset.
struct SynthTruth {
  std::vector<std::string> class_names;
  Matrix class_means;  // C x D
  std::vector<std::string> recording_ids;
  std::vector<int> recording_class;
  Matrix recording_means;  // R_total x D
};

struct SynthDataset {
  LabeledDataset dataset;
  SynthTruth truth;
};

// Deterministic in cfg.seed. Recordings are split 80/20 (by default) with
// the stratified recording-wise policy.
SynthDataset generate(const SynthConfig& cfg);

nlohmann::ordered_json synth_sidecar(const SynthConfig& cfg, const SynthTruth& truth);

}  // namespace embdiag
