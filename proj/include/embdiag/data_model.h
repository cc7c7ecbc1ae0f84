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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace embdiag {

enum class Split { kTrain, kTest };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view token);

// Which per-clip field acts as the grouping label for an evaluation.
enum class LabelField { kClass, kRecordingId };

std::string_view to_string(LabelField field);
std::optional<LabelField> parse_label_field(std::string_view token);

// N x D embedding matrix stored row-major at float precision, one row per
// clip. Construction only checks the shape; content invariants (finite
// values, unique ids, N >= 1) are reported by validate_dataset so that bad
// inputs can be diagnosed instead of rejected blindly.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::string model_id, std::size_t dim, std::vector<float> values,
                 std::vector<std::string> clip_ids);

  // Throws ValidationError when a row does not have exactly `dim` entries.
  static EmbeddingTable from_rows(std::string model_id, std::size_t dim,
                                  const std::vector<std::vector<float>>& rows,
                                  std::vector<std::string> clip_ids);

  const std::string& model_id() const { return model_id_; }
  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return clip_ids_.size(); }
  std::span<const float> values() const { return values_; }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values_).subspan(i * dim_, dim_);
  }
  const std::vector<std::string>& clip_ids() const { return clip_ids_; }

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::string model_id_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::vector<std::string> clip_ids_;
};

struct ClipMetadata {
  std::string clip_id;
  std::string recording_id;
  std::string label;
  Split split = Split::kTrain;
  std::string dataset;
  double start_s = 0.0;
  double duration_s = 0.0;
  // Optional per-recording ordering key (e.g. an ISO-8601 date) used by the
  // time-wise split. Empty when the source CSV has no recorded_at column.
  std::string recorded_at;

  bool operator==(const ClipMetadata&) const = default;
};

// Embeddings joined to metadata by clip id.
class LabeledDataset {
 public:
  LabeledDataset() = default;
  LabeledDataset(EmbeddingTable table, std::vector<ClipMetadata> meta);

  const EmbeddingTable& table() const { return table_; }
  const std::vector<ClipMetadata>& meta() const { return meta_; }

  // Metadata joined to table row `row`, or nullptr if the clip has none.
  const ClipMetadata* meta_for_row(std::size_t row) const;

  // Table rows whose metadata carries the given split, in table order.
  std::vector<std::size_t> rows_in(Split split) const;
  std::vector<std::size_t> all_rows() const;

  // Label or recording id of each listed row. Rows must have metadata.
  std::vector<std::string> field_values(std::span<const std::size_t> rows,
                                        LabelField field) const;

  // Throws ValidationError listing every violation if validation fails.
  void require_valid() const;

  // Name of the source dataset: the shared `dataset` value, or the sorted
  // distinct values joined with '+'.
  std::string dataset_name() const;

 private:
  EmbeddingTable table_;
  std::vector<ClipMetadata> meta_;
  std::vector<std::ptrdiff_t> row_meta_;
};

// One entry per violated invariant; empty means the dataset is usable.
std::vector<std::string> validate_dataset(const LabeledDataset& ds);

// Dense 0..C-1 indexing of string labels in sorted order.
class LabelIndex {
 public:
  LabelIndex() = default;
  explicit LabelIndex(std::span<const std::string> values);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  // Throws ValidationError for unknown labels.
  int index_of(const std::string& label) const;
  std::vector<int> encode(std::span<const std::string> values) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> lookup_;
};

struct ClassAccuracy {
  std::string label;
  double accuracy = 0.0;
  std::int64_t support = 0;
  bool operator==(const ClassAccuracy&) const = default;
};

struct HistogramBin {
  double lower_pp = 0.0;
  double upper_pp = 0.0;
  std::int64_t count = 0;
  bool operator==(const HistogramBin&) const = default;
};

struct RecordIdDiagnostics {
  double nmi = 0.0;
  double mean_roc_auc = 0.0;
  std::int64_t n_recordings = 0;
  bool operator==(const RecordIdDiagnostics&) const = default;
};

struct ShuffleDiagnostics {
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  std::vector<double> per_repeat;
  bool operator==(const ShuffleDiagnostics&) const = default;
};

// Accuracy drops are in accuracy units (baseline minus ablated); histogram
// bins are expressed in percentage points.
struct AblationDiagnostics {
  double baseline_accuracy = 0.0;
  std::vector<double> drops;
  double bin_width_pp = 0.5;
  std::vector<HistogramBin> histogram;
  bool operator==(const AblationDiagnostics&) const = default;
};

struct Diagnostics {
  RecordIdDiagnostics record_id;
  ShuffleDiagnostics label_shuffle;
  double nmi_logits = 0.0;
  double nmi_pca = 0.0;
  std::int64_t pca_components = 0;
  AblationDiagnostics ablation;
  bool operator==(const Diagnostics&) const = default;
};

struct EvalReport {
  std::string model_id;
  std::string dataset;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  std::int64_t n_train = 0;
  std::int64_t n_test = 0;
  std::int64_t n_classes = 0;
  double probe_accuracy = 0.0;
  std::vector<ClassAccuracy> per_class_accuracy;
  double nmi_class = 0.0;
  double mean_roc_auc = 0.0;
  std::int64_t retrieval_skipped = 0;
  Diagnostics diagnostics;

  bool operator==(const EvalReport&) const = default;
};

// Range checks on every score carried by the report.
std::vector<std::string> validate_report(const EvalReport& report);

}  // namespace embdiag
