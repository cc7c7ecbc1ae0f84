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
#include <span>
#include <string>
#include <vector>

#include "embdiag/clustering.h"
#include "embdiag/data_model.h"
#include "embdiag/probe.h"
#include "embdiag/retrieval.h"

namespace embdiag {

struct DiagnosticsConfig {
  std::size_t shuffle_repeats = 10;
  std::size_t pca_components = 0;  // 0 selects the number of classes
  std::uint64_t seed = 0;
  RowSelection cluster_split = RowSelection::kTest;
  ClusterEvalOptions cluster;
};

// Train/test matrices and dense class indices (sorted label order over the
// whole dataset).
struct ProbeData {
  LabelIndex classes;
  Matrix x_train;
  std::vector<int> y_train;
  Matrix x_test;
  std::vector<int> y_test;
};

ProbeData probe_data(const LabeledDataset& ds);

struct RecordIdResult {
  double nmi = 0.0;
  double mean_roc_auc = 0.0;
  std::size_t n_recordings = 0;
  ClusterEval cluster;
  RetrievalResult retrieval;
};

// Clustering and retrieval keyed on recording id instead of class; K is the
// number of recordings among the clustered rows.
RecordIdResult record_id_eval(const LabeledDataset& ds, std::uint64_t seed,
                              const ClusterEvalOptions& options = {},
                              RowSelection which = RowSelection::kTest);

// Training recordings in sorted id order with their class index.
struct TrainRecordings {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

TrainRecordings train_recordings(const LabeledDataset& ds, const LabelIndex& classes);

// Retrains the probe after giving train recording i the class of recording
// permutation[i] (indices into train_recordings order) and returns test
// accuracy against the true labels.
double shuffled_probe_accuracy(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                               std::span<const std::size_t> permutation);

struct ShuffleResult {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation, 0 for one repeat
  std::vector<double> per_repeat;
};

// Repeat r draws its permutation from derive_seed(cfg.seed, "shuffle", r).
ShuffleResult label_shuffle_control(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                                    const DiagnosticsConfig& cfg);

// K-Means on the probe's test-set logits with K = number of probe classes;
// NMI against the true classes.
double logit_space_clustering(const LabeledDataset& ds, const LinearProbe& probe,
                              std::uint64_t seed, const KMeansOptions& options = {});

// PCA fitted on train rows, test rows projected, then class clustering.
double pca_control(const LabeledDataset& ds, const DiagnosticsConfig& cfg);

// Hex SHA-256 of the dataset contents and both configurations.
std::string config_fingerprint(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                               const DiagnosticsConfig& cfg);

EvalReport run_full_report(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                           const DiagnosticsConfig& cfg);

}  // namespace embdiag
