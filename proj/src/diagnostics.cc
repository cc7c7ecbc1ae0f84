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


#include "embdiag/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "embdiag/error.h"
#include "embdiag/io_formats.h"
#include "embdiag/parallel.h"
#include "embdiag/rng.h"

namespace embdiag {
namespace {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string out;
  for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::size_t resolved_pca_components(const DiagnosticsConfig& cfg, std::size_t classes) {
  return cfg.pca_components == 0 ? classes : cfg.pca_components;
}

}  // namespace

ProbeData probe_data(const LabeledDataset& ds) {
  const auto all = ds.all_rows();
  const auto all_labels = ds.field_values(all, LabelField::kClass);
  ProbeData out{LabelIndex(all_labels), {}, {}, {}, {}};
  const auto train = ds.rows_in(Split::kTrain);
  const auto test = ds.rows_in(Split::kTest);
  out.x_train = to_matrix(ds.table(), train);
  out.y_train = out.classes.encode(ds.field_values(train, LabelField::kClass));
  out.x_test = to_matrix(ds.table(), test);
  out.y_test = out.classes.encode(ds.field_values(test, LabelField::kClass));
  return out;
}

RecordIdResult record_id_eval(const LabeledDataset& ds, std::uint64_t seed,
                              const ClusterEvalOptions& options, RowSelection which) {
  const auto test = ds.rows_in(Split::kTest);
  const auto recordings = ds.field_values(test, LabelField::kRecordingId);
  const std::set<std::string> distinct(recordings.begin(), recordings.end());
  if (distinct.size() < 2) {
    throw ValidationError(fmt::format(
        "record-id evaluation needs at least 2 test recordings, found {}", distinct.size()));
  }
  RecordIdResult out;
  out.cluster = cluster_eval(ds, LabelField::kRecordingId, which, seed, options);
  out.retrieval = retrieval_eval(ds, LabelField::kRecordingId);
  out.nmi = out.cluster.nmi;
  out.mean_roc_auc = out.retrieval.mean_auc;
  out.n_recordings = out.cluster.k;
  return out;
}

TrainRecordings train_recordings(const LabeledDataset& ds, const LabelIndex& classes) {
  std::map<std::string, std::string> label_of;
  for (std::size_t r : ds.rows_in(Split::kTrain)) {
    const ClipMetadata* m = ds.meta_for_row(r);
    auto [it, inserted] = label_of.emplace(m->recording_id, m->label);
    if (!inserted && it->second != m->label) {
      throw ValidationError(fmt::format("recording {} mixes labels {} and {}", m->recording_id,
                                        it->second, m->label));
    }
  }
  TrainRecordings out;
  for (const auto& [id, label] : label_of) {
    out.ids.push_back(id);
    out.labels.push_back(classes.index_of(label));
  }
  return out;
}

double shuffled_probe_accuracy(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                               std::span<const std::size_t> permutation) {
  ProbeData data = probe_data(ds);
  const TrainRecordings recs = train_recordings(ds, data.classes);
  if (recs.ids.size() < 2) {
    throw ValidationError("label shuffle needs at least 2 train recordings");
  }
  if (permutation.size() != recs.ids.size()) {
    throw ValidationError(fmt::format("permutation has {} entries for {} train recordings",
                                      permutation.size(), recs.ids.size()));
  }
  std::map<std::string, int> shuffled;
  for (std::size_t i = 0; i < recs.ids.size(); ++i) {
    shuffled[recs.ids[i]] = recs.labels.at(permutation[i]);
  }
  const auto train = ds.rows_in(Split::kTrain);
  std::vector<int> y(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    y[i] = shuffled.at(ds.meta_for_row(train[i])->recording_id);
  }
  const LinearProbe probe = train_probe(data.x_train, y, data.classes.names(), probe_cfg);
  return accuracy(probe, data.x_test, data.y_test);
}

ShuffleResult label_shuffle_control(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                                    const DiagnosticsConfig& cfg) {
  if (cfg.shuffle_repeats == 0) throw ValidationError("shuffle_repeats must be at least 1");
  const ProbeData data = probe_data(ds);
  const TrainRecordings recs = train_recordings(ds, data.classes);
  if (recs.ids.size() < 2) {
    throw ValidationError("label shuffle needs at least 2 train recordings");
  }
  ShuffleResult out;
  out.per_repeat.resize(cfg.shuffle_repeats);
  parallel_for(cfg.shuffle_repeats, [&](std::size_t r) {
    std::vector<std::size_t> perm(recs.ids.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, "shuffle", r));
    rng.shuffle(perm);
    out.per_repeat[r] = shuffled_probe_accuracy(ds, probe_cfg, perm);
  });
  const double n = static_cast<double>(out.per_repeat.size());
  out.mean_accuracy = std::accumulate(out.per_repeat.begin(), out.per_repeat.end(), 0.0) / n;
  if (out.per_repeat.size() > 1) {
    double ss = 0.0;
    for (double a : out.per_repeat) ss += (a - out.mean_accuracy) * (a - out.mean_accuracy);
    out.std_accuracy = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

double logit_space_clustering(const LabeledDataset& ds, const LinearProbe& probe,
                              std::uint64_t seed, const KMeansOptions& options) {
  const auto test = ds.rows_in(Split::kTest);
  if (test.empty()) throw ValidationError("logit clustering: empty test split");
  const LabelIndex classes(probe.class_names);
  const auto y = classes.encode(ds.field_values(test, LabelField::kClass));
  const Matrix z = logits(probe, to_matrix(ds.table(), test));
  const KMeansResult result = kmeans(z, probe.class_names.size(), seed, options);
  return nmi(y, result.assignments);
}

double pca_control(const LabeledDataset& ds, const DiagnosticsConfig& cfg) {
  const ProbeData data = probe_data(ds);
  const std::size_t k = resolved_pca_components(cfg, data.classes.size());
  if (static_cast<std::size_t>(data.x_test.rows()) < k + 1) {
    throw ValidationError(fmt::format("PCA control needs at least {} test rows, found {}", k + 1,
                                      data.x_test.rows()));
  }
  const PcaModel model = pca_fit(data.x_train, k);
  const Matrix projected = model.transform(data.x_test);
  return cluster_labels(projected, data.y_test, derive_seed(cfg.seed, "cluster-class"), cfg.cluster)
      .nmi;
}

std::string config_fingerprint(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                               const DiagnosticsConfig& cfg) {
  nlohmann::ordered_json j;
  j["probe"] = {{"l2_lambda", probe_cfg.l2_lambda},
                {"max_iters", probe_cfg.max_iters},
                {"grad_tol", probe_cfg.grad_tol},
                {"learning_rate", probe_cfg.learning_rate},
                {"seed", probe_cfg.seed}};
  j["diagnostics"] = {{"shuffle_repeats", cfg.shuffle_repeats},
                      {"pca_components", cfg.pca_components},
                      {"seed", cfg.seed},
                      {"cluster_split", to_string(cfg.cluster_split)},
                      {"standardize", cfg.cluster.standardize},
                      {"restarts", cfg.cluster.kmeans.restarts},
                      {"max_iter", cfg.cluster.kmeans.max_iter},
                      {"tol", cfg.cluster.kmeans.tol}};
  j["embeddings_sha256"] = sha256_hex(encode_embeddings(ds.table()));
  j["metadata_sha256"] = sha256_hex(format_metadata_csv(ds.meta()));
  return sha256_hex(j.dump());
}

EvalReport run_full_report(const LabeledDataset& ds, const ProbeConfig& probe_cfg,
                           const DiagnosticsConfig& cfg) {
  ds.require_valid();
  const ProbeData data = probe_data(ds);
  if (data.y_train.empty() || data.y_test.empty()) {
    throw ValidationError("full report needs non-empty train and test splits");
  }

  EvalReport report;
  report.model_id = ds.table().model_id();
  report.dataset = ds.dataset_name();
  report.seed = cfg.seed;
  report.config_fingerprint = config_fingerprint(ds, probe_cfg, cfg);
  report.n_train = static_cast<std::int64_t>(data.y_train.size());
  report.n_test = static_cast<std::int64_t>(data.y_test.size());
  report.n_classes = static_cast<std::int64_t>(data.classes.size());

  const LinearProbe probe = train_probe(data.x_train, data.y_train, data.classes.names(), probe_cfg);
  report.probe_accuracy = accuracy(probe, data.x_test, data.y_test);
  report.per_class_accuracy = per_class_accuracy(probe, data.x_test, data.y_test);

  const ClusterEval clusters = cluster_eval(ds, LabelField::kClass, cfg.cluster_split,
                                            derive_seed(cfg.seed, "cluster-class"), cfg.cluster);
  report.nmi_class = clusters.nmi;
  const RetrievalResult retrieval = retrieval_eval(ds, LabelField::kClass);
  report.mean_roc_auc = retrieval.mean_auc;
  report.retrieval_skipped = static_cast<std::int64_t>(retrieval.skipped_queries.size());

  Diagnostics& d = report.diagnostics;
  const RecordIdResult rec = record_id_eval(ds, derive_seed(cfg.seed, "cluster-record"),
                                            cfg.cluster, cfg.cluster_split);
  d.record_id = {rec.nmi, rec.mean_roc_auc, static_cast<std::int64_t>(rec.n_recordings)};

  const ShuffleResult shuffle = label_shuffle_control(ds, probe_cfg, cfg);
  d.label_shuffle = {shuffle.mean_accuracy, shuffle.std_accuracy, shuffle.per_repeat};

  d.nmi_logits = logit_space_clustering(ds, probe, derive_seed(cfg.seed, "cluster-logits"),
                                        cfg.cluster.kmeans);
  d.pca_components = static_cast<std::int64_t>(resolved_pca_components(cfg, data.classes.size()));
  d.nmi_pca = pca_control(ds, cfg);

  const FeatureImportance importance = feature_importance(probe, data.x_test, data.y_test);
  d.ablation.baseline_accuracy = importance.baseline_accuracy;
  d.ablation.drops = importance.drops;
  d.ablation.bin_width_pp = kAblationBinWidthPp;
  d.ablation.histogram = importance.histogram;

  const auto violations = validate_report(report);
  if (!violations.empty()) {
    throw Error("internal: report out of range: " + violations.front());
  }
  return report;
}

}  // namespace embdiag
