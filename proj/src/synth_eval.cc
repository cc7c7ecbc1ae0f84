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


#include "embdiag/synth_eval.h"

namespace embdiag {

SynthMetrics measure_synth(const SynthConfig& cfg, DiagnosticsConfig diag, ProbeConfig probe) {
  const SynthDataset data = generate(cfg);
  diag.seed = cfg.seed;
  probe.seed = cfg.seed;
  const EvalReport r = run_full_report(data.dataset, probe, diag);

  SynthMetrics m;
  m.class_nmi = r.nmi_class;
  m.recording_nmi = r.diagnostics.record_id.nmi;
  m.class_auc = r.mean_roc_auc;
  m.recording_auc = r.diagnostics.record_id.mean_roc_auc;
  m.probe_accuracy = r.probe_accuracy;
  m.shuffle_mean_accuracy = r.diagnostics.label_shuffle.mean_accuracy;
  m.logit_nmi = r.diagnostics.nmi_logits;

  const auto& drops = r.diagnostics.ablation.drops;
  std::size_t outside = 0;
  std::size_t small = 0;
  for (std::size_t d = cfg.class_dims; d < drops.size(); ++d) {
    ++outside;
    if (drops[d] < 0.01) ++small;
  }
  m.small_drop_fraction_outside =
      outside == 0 ? 1.0 : static_cast<double>(small) / static_cast<double>(outside);
  return m;
}

}  // namespace embdiag
