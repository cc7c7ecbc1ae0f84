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


#include "embdiag/synth.h"

#include <cmath>

#include <fmt/format.h>

#include "embdiag/error.h"
#include "embdiag/rng.h"
#include "embdiag/splits.h"

namespace embdiag {

void SynthConfig::validate() const {
  if (n_classes < 2) throw ValidationError("synth: need at least 2 classes");
  if (recordings_per_class < 2) throw ValidationError("synth: need at least 2 recordings per class");
  if (clips_per_recording < 1) throw ValidationError("synth: need at least 1 clip per recording");
  if (dim < 1) throw ValidationError("synth: dim must be at least 1");
  if (class_dims > dim) {
    throw ValidationError(fmt::format("synth: class_dims {} exceeds dim {}", class_dims, dim));
  }
  if (!std::isfinite(class_scale) || class_scale < 0.0 || !std::isfinite(recording_scale) ||
      recording_scale < 0.0) {
    throw ValidationError("synth: class and recording scales must be finite and >= 0");
  }
  if (!std::isfinite(noise_scale) || !(noise_scale > 0.0)) {
    throw ValidationError("synth: noise_scale must be finite and > 0");
  }
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError("synth: test_fraction must lie in (0, 1)");
  }
  if (!(clip_duration_s > 0.0)) throw ValidationError("synth: clip duration must be > 0");
}

SynthDataset generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  Rng rng(derive_seed(cfg.seed, "synth"));
  SynthTruth truth;

  truth.class_means = Matrix::Zero(static_cast<Eigen::Index>(cfg.n_classes), d);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    truth.class_names.push_back(fmt::format("class_{}", c));
    for (std::size_t j = 0; j < cfg.class_dims; ++j) {
      truth.class_means(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) =
          cfg.class_scale * rng.normal();
    }
  }

  const std::size_t total_recordings = cfg.n_classes * cfg.recordings_per_class;
  truth.recording_means.resize(static_cast<Eigen::Index>(total_recordings), d);
  for (std::size_t c = 0; c < cfg.n_classes; ++c) {
    for (std::size_t r = 0; r < cfg.recordings_per_class; ++r) {
      const auto row = static_cast<Eigen::Index>(truth.recording_ids.size());
      truth.recording_ids.push_back(fmt::format("c{}_r{:02}", c, r));
      truth.recording_class.push_back(static_cast<int>(c));
      for (Eigen::Index j = 0; j < d; ++j) {
        truth.recording_means(row, j) = cfg.recording_scale * rng.normal();
      }
    }
  }

  std::vector<float> values;
  values.reserve(total_recordings * cfg.clips_per_recording * cfg.dim);
  std::vector<std::string> ids;
  std::vector<ClipMetadata> meta;
  for (std::size_t rec = 0; rec < total_recordings; ++rec) {
    const auto c = static_cast<Eigen::Index>(truth.recording_class[rec]);
    for (std::size_t m = 0; m < cfg.clips_per_recording; ++m) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double v = truth.class_means(c, j) +
                         truth.recording_means(static_cast<Eigen::Index>(rec), j) +
                         cfg.noise_scale * rng.normal();
        values.push_back(static_cast<float>(v));
      }
      ClipMetadata clip;
      clip.clip_id = fmt::format("{}_m{:03}", truth.recording_ids[rec], m);
      clip.recording_id = truth.recording_ids[rec];
      clip.label = truth.class_names[static_cast<std::size_t>(c)];
      clip.dataset = "synth";
      clip.start_s = static_cast<double>(m) * cfg.clip_duration_s;
      clip.duration_s = cfg.clip_duration_s;
      ids.push_back(clip.clip_id);
      meta.push_back(std::move(clip));
    }
  }

  const auto assignment =
      recordingwise_split(meta, cfg.test_fraction, derive_seed(cfg.seed, "synth-split"));
  meta = apply_split(meta, assignment);

  EmbeddingTable table("synth", cfg.dim, std::move(values), std::move(ids));
  return {LabeledDataset(std::move(table), std::move(meta)), std::move(truth)};
}

nlohmann::ordered_json synth_sidecar(const SynthConfig& cfg, const SynthTruth& truth) {
  nlohmann::ordered_json j;
  j["config"] = {{"n_classes", cfg.n_classes},
                 {"recordings_per_class", cfg.recordings_per_class},
                 {"clips_per_recording", cfg.clips_per_recording},
                 {"dim", cfg.dim},
                 {"class_dims", cfg.class_dims},
                 {"class_scale", cfg.class_scale},
                 {"recording_scale", cfg.recording_scale},
                 {"noise_scale", cfg.noise_scale},
                 {"test_fraction", cfg.test_fraction},
                 {"clip_duration_s", cfg.clip_duration_s},
                 {"seed", cfg.seed}};
  auto rows = [](const Matrix& m, Eigen::Index i) {
    return std::vector<double>(m.row(i).data(), m.row(i).data() + m.cols());
  };
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < truth.class_names.size(); ++c) {
    classes.push_back({{"label", truth.class_names[c]},
                       {"mean", rows(truth.class_means, static_cast<Eigen::Index>(c))}});
  }
  nlohmann::ordered_json recordings = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < truth.recording_ids.size(); ++r) {
    recordings.push_back(
        {{"recording_id", truth.recording_ids[r]},
         {"label", truth.class_names[static_cast<std::size_t>(truth.recording_class[r])]},
         {"mean", rows(truth.recording_means, static_cast<Eigen::Index>(r))}});
  }
  j["classes"] = classes;
  j["recordings"] = recordings;
  return j;
}

}  // namespace embdiag
