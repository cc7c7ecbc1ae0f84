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

#include <gtest/gtest.h>

#include "embdiag/clustering.h"
#include "embdiag/diagnostics.h"
#include "embdiag/error.h"
#include "embdiag/io_formats.h"
#include "embdiag/probe.h"

namespace embdiag {
namespace {

TEST(SynthTest, ShapeNamingAndSplit) {
  SynthConfig cfg;
  const auto s = generate(cfg);
  const auto& ds = s.dataset;
  EXPECT_EQ(ds.table().rows(), 4u * 8u * 25u);
  EXPECT_EQ(ds.table().dim(), 256u);
  EXPECT_TRUE(validate_dataset(ds).empty());
  EXPECT_EQ(ds.rows_in(Split::kTest).size(), 4u * 2u * 25u);
  EXPECT_EQ(ds.meta().front().clip_id, "c0_r00_m000");
  EXPECT_EQ(ds.meta().front().label, "class_0");
}

TEST(SynthTest, DeterministicBySeed) {
  SynthConfig cfg;
  cfg.dim = 16;
  cfg.class_dims = 4;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_EQ(encode_embeddings(a.dataset.table()), encode_embeddings(b.dataset.table()));
  EXPECT_EQ(a.dataset.meta(), b.dataset.meta());
  EXPECT_EQ(synth_sidecar(cfg, a.truth).dump(), synth_sidecar(cfg, b.truth).dump());
  cfg.seed = 8;
  EXPECT_NE(encode_embeddings(generate(cfg).dataset.table()),
            encode_embeddings(a.dataset.table()));
}

TEST(SynthTest, LatentMeansExplainRecordingAverages) {
  SynthConfig cfg;
  cfg.dim = 8;
  cfg.class_dims = 3;
  cfg.clips_per_recording = 400;
  cfg.recordings_per_class = 3;
  const auto s = generate(cfg);
  for (std::size_t d = cfg.class_dims; d < cfg.dim; ++d) {
    for (std::size_t c = 0; c < cfg.n_classes; ++c) EXPECT_EQ(s.truth.class_means(c, d), 0.0);
  }
  const Matrix x = to_matrix(s.dataset.table());
  for (std::size_t r = 0; r < s.truth.recording_ids.size(); ++r) {
    Vector mean = Vector::Zero(cfg.dim);
    std::size_t count = 0;
    for (std::size_t i = 0; i < s.dataset.meta().size(); ++i) {
      if (s.dataset.meta()[i].recording_id == s.truth.recording_ids[r]) {
        mean += x.row(i).transpose();
        ++count;
      }
    }
    mean /= static_cast<double>(count);
    const Vector expected = s.truth.class_means.row(s.truth.recording_class[r]).transpose() +
                            s.truth.recording_means.row(r).transpose();
    // noise_scale / sqrt(400) = 0.05 per coordinate; 6 sigma
    EXPECT_LT((mean - expected).cwiseAbs().maxCoeff(), 0.3);
  }
}

TEST(SynthTest, NoClassSignalGivesChanceAccuracy) {
  SynthConfig cfg;
  cfg.class_scale = 0.0;
  cfg.recording_scale = 0.0;
  cfg.dim = 32;
  const auto s = generate(cfg);
  const ProbeData data = probe_data(s.dataset);
  const auto probe = train_probe(data.x_train, data.y_train, data.classes.names(), {});
  const double acc = accuracy(probe, data.x_test, data.y_test);
  const double n = static_cast<double>(data.y_test.size());
  const double sigma = std::sqrt(0.25 * 0.75 / n);
  EXPECT_NEAR(acc, 0.25, 3.0 * sigma);
}

TEST(SynthTest, SeparatedBlobsClusterByClass) {
  SynthConfig cfg;
  cfg.recording_scale = 0.0;
  cfg.class_scale = 5.0;
  cfg.dim = 16;
  cfg.class_dims = 16;
  const auto s = generate(cfg);
  EXPECT_GE(cluster_eval(s.dataset, LabelField::kClass, RowSelection::kTest, 1).nmi, 0.9);
}

TEST(SynthTest, RecordingDominatedGeometry) {
  SynthConfig cfg;
  const auto s = generate(cfg);
  const double rec = cluster_eval(s.dataset, LabelField::kRecordingId, RowSelection::kTest, 1).nmi;
  const double cls = cluster_eval(s.dataset, LabelField::kClass, RowSelection::kTest, 1).nmi;
  EXPECT_GT(rec, cls);
}

TEST(SynthTest, AblationDropsConcentrateInClassDims) {
  SynthConfig cfg;
  cfg.recording_scale = 0.0;
  cfg.class_scale = 1.0;
  cfg.dim = 64;
  cfg.class_dims = 4;
  cfg.clips_per_recording = 50;
  const auto s = generate(cfg);
  const ProbeData data = probe_data(s.dataset);
  const auto probe = train_probe(data.x_train, data.y_train, data.classes.names(), {});
  const auto fi = feature_importance(probe, data.x_test, data.y_test);
  double inside = 0.0;
  double outside = 0.0;
  for (std::size_t d = 0; d < fi.drops.size(); ++d) {
    (d < cfg.class_dims ? inside : outside) = std::max(d < cfg.class_dims ? inside : outside,
                                                       fi.drops[d]);
  }
  EXPECT_GT(inside, outside);
}

TEST(SynthTest, InvalidConfig) {
  SynthConfig cfg;
  cfg.class_dims = 300;
  EXPECT_THROW(generate(cfg), ValidationError);
  cfg = {};
  cfg.noise_scale = 0.0;
  EXPECT_THROW(generate(cfg), ValidationError);
}

}  // namespace
}  // namespace embdiag
