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

#include <cstdint>

#include "embdiag/diagnostics.h"
#include "embdiag/synth.h"

namespace embdiag {

// Headline numbers of a full report on a generated dataset.
struct SynthMetrics {
  double class_nmi = 0.0;
  double recording_nmi = 0.0;
  double class_auc = 0.0;
  double recording_auc = 0.0;
  double probe_accuracy = 0.0;
  double shuffle_mean_accuracy = 0.0;
  double logit_nmi = 0.0;
  // Share of dims >= class_dims whose ablation drop is below one point.
  double small_drop_fraction_outside = 0.0;
};

// Generates the dataset for `cfg` and runs the full report with seed
// cfg.seed and the given diagnostics settings (their seed is overridden).
SynthMetrics measure_synth(const SynthConfig& cfg, DiagnosticsConfig diag = {},
                           ProbeConfig probe = {});

}  // namespace embdiag
