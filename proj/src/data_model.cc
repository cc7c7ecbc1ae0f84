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


#include "embdiag/data_model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "embdiag/error.h"

namespace embdiag {

std::string_view to_string(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

std::optional<Split> parse_split(std::string_view token) {
  if (token == "train") return Split::kTrain;
  if (token == "test") return Split::kTest;
  return std::nullopt;
}

std::string_view to_string(LabelField field) {
  return field == LabelField::kClass ? "class" : "recording_id";
}

std::optional<LabelField> parse_label_field(std::string_view token) {
  if (token == "class") return LabelField::kClass;
  if (token == "recording_id") return LabelField::kRecordingId;
  return std::nullopt;
}

EmbeddingTable::EmbeddingTable(std::string model_id, std::size_t dim,
                               std::vector<float> values,
                               std::vector<std::string> clip_ids)
    : model_id_(std::move(model_id)),
      dim_(dim),
      values_(std::move(values)),
      clip_ids_(std::move(clip_ids)) {
  if (values_.size() != dim_ * clip_ids_.size()) {
    throw ValidationError(fmt::format(
        "embedding table shape mismatch: {} values for {} rows of dim {}",
        values_.size(), clip_ids_.size(), dim_));
  }
}

EmbeddingTable EmbeddingTable::from_rows(std::string model_id, std::size_t dim,
                                         const std::vector<std::vector<float>>& rows,
                                         std::vector<std::string> clip_ids) {
  if (rows.size() != clip_ids.size()) {
    throw ValidationError(fmt::format("{} rows but {} clip ids", rows.size(),
                                      clip_ids.size()));
  }
  std::vector<float> values;
  values.reserve(rows.size() * dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != dim) {
      throw ValidationError(fmt::format("clip {}: row has {} entries, expected {}",
                                        clip_ids[i], rows[i].size(), dim));
    }
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return EmbeddingTable(std::move(model_id), dim, std::move(values),
                        std::move(clip_ids));
}

LabeledDataset::LabeledDataset(EmbeddingTable table, std::vector<ClipMetadata> meta)
    : table_(std::move(table)), meta_(std::move(meta)) {
  std::unordered_map<std::string, std::ptrdiff_t> by_id;
  by_id.reserve(meta_.size());
  for (std::size_t i = 0; i < meta_.size(); ++i) {
    by_id.emplace(meta_[i].clip_id, static_cast<std::ptrdiff_t>(i));
  }
  row_meta_.resize(table_.rows(), -1);
  for (std::size_t r = 0; r < table_.rows(); ++r) {
    auto it = by_id.find(table_.clip_ids()[r]);
    if (it != by_id.end()) row_meta_[r] = it->second;
  }
}

const ClipMetadata* LabeledDataset::meta_for_row(std::size_t row) const {
  const std::ptrdiff_t m = row_meta_.at(row);
  return m < 0 ? nullptr : &meta_[static_cast<std::size_t>(m)];
}

std::vector<std::size_t> LabeledDataset::rows_in(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < table_.rows(); ++r) {
    const ClipMetadata* m = meta_for_row(r);
    if (m != nullptr && m->split == split) out.push_back(r);
  }
  return out;
}

std::vector<std::size_t> LabeledDataset::all_rows() const {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < table_.rows(); ++r) {
    if (meta_for_row(r) != nullptr) out.push_back(r);
  }
  return out;
}

std::vector<std::string> LabeledDataset::field_values(std::span<const std::size_t> rows,
                                                      LabelField field) const {
  std::vector<std::string> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    const ClipMetadata* m = meta_for_row(r);
    if (m == nullptr) {
      throw ValidationError(
          fmt::format("clip {}: no metadata row", table_.clip_ids().at(r)));
    }
    out.push_back(field == LabelField::kClass ? m->label : m->recording_id);
  }
  return out;
}

void LabeledDataset::require_valid() const {
  const auto violations = validate_dataset(*this);
  if (violations.empty()) return;
  std::string message = "invalid dataset:";
  for (const auto& v : violations) message += "\n  " + v;
  throw ValidationError(message);
}

std::string LabeledDataset::dataset_name() const {
  std::set<std::string> names;
  for (const auto& m : meta_) names.insert(m.dataset);
  std::string out;
  for (const auto& n : names) {
    if (!out.empty()) out += '+';
    out += n;
  }
  return out;
}

std::vector<std::string> validate_dataset(const LabeledDataset& ds) {
  std::vector<std::string> violations;
  const EmbeddingTable& table = ds.table();

  if (table.dim() == 0) violations.push_back("embedding dim must be at least 1");
  if (table.rows() == 0) violations.push_back("embedding table has no rows");

  std::set<std::string> table_ids;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const std::string& id = table.clip_ids()[r];
    if (!table_ids.insert(id).second) {
      violations.push_back(fmt::format("clip {}: duplicate clip_id in embedding table", id));
    }
    const auto row = table.row(r);
    auto bad = std::find_if(row.begin(), row.end(),
                            [](float v) { return !std::isfinite(v); });
    if (bad != row.end()) {
      violations.push_back(fmt::format("clip {}: non-finite value at dim {}", id,
                                       std::distance(row.begin(), bad)));
    }
  }

  std::set<std::string> meta_ids;
  for (const auto& m : ds.meta()) {
    if (!meta_ids.insert(m.clip_id).second) {
      violations.push_back(fmt::format("clip {}: duplicate clip_id in metadata", m.clip_id));
    }
    if (m.recording_id.empty()) {
      violations.push_back(fmt::format("clip {}: empty recording_id", m.clip_id));
    }
    if (m.label.empty()) violations.push_back(fmt::format("clip {}: empty label", m.clip_id));
    if (!(m.start_s >= 0.0) || !std::isfinite(m.start_s)) {
      violations.push_back(fmt::format("clip {}: start_s must be >= 0", m.clip_id));
    }
    if (!(m.duration_s > 0.0) || !std::isfinite(m.duration_s)) {
      violations.push_back(fmt::format("clip {}: duration_s must be > 0", m.clip_id));
    }
  }

  for (const auto& id : table_ids) {
    if (!meta_ids.contains(id)) {
      violations.push_back(fmt::format("clip {}: no metadata row", id));
    }
  }
  for (const auto& id : meta_ids) {
    if (!table_ids.contains(id)) {
      violations.push_back(fmt::format("clip {}: metadata row without embedding", id));
    }
  }

  std::map<std::string, std::pair<bool, bool>> recording_splits;
  for (const auto& m : ds.meta()) {
    auto& seen = recording_splits[m.recording_id];
    (m.split == Split::kTrain ? seen.first : seen.second) = true;
  }
  for (const auto& [recording, seen] : recording_splits) {
    if (seen.first && seen.second) {
      violations.push_back(fmt::format("recording {} spans train and test", recording));
    }
  }
  return violations;
}

LabelIndex::LabelIndex(std::span<const std::string> values) {
  std::set<std::string> unique(values.begin(), values.end());
  names_.assign(unique.begin(), unique.end());
  for (std::size_t i = 0; i < names_.size(); ++i) {
    lookup_.emplace(names_[i], static_cast<int>(i));
  }
}

int LabelIndex::index_of(const std::string& label) const {
  auto it = lookup_.find(label);
  if (it == lookup_.end()) throw ValidationError("unknown label: " + label);
  return it->second;
}

std::vector<int> LabelIndex::encode(std::span<const std::string> values) const {
  std::vector<int> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(index_of(v));
  return out;
}

namespace {

void check_unit(std::vector<std::string>& out, std::string_view name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) out.push_back(fmt::format("{} = {} outside [0, 1]", name, v));
}

}  // namespace

std::vector<std::string> validate_report(const EvalReport& report) {
  std::vector<std::string> out;
  check_unit(out, "probe_accuracy", report.probe_accuracy);
  check_unit(out, "nmi_class", report.nmi_class);
  check_unit(out, "mean_roc_auc", report.mean_roc_auc);
  for (const auto& c : report.per_class_accuracy) {
    check_unit(out, "per_class_accuracy." + c.label, c.accuracy);
  }
  const Diagnostics& d = report.diagnostics;
  check_unit(out, "record_id.nmi", d.record_id.nmi);
  check_unit(out, "record_id.mean_roc_auc", d.record_id.mean_roc_auc);
  check_unit(out, "label_shuffle.mean_accuracy", d.label_shuffle.mean_accuracy);
  for (double a : d.label_shuffle.per_repeat) check_unit(out, "label_shuffle.per_repeat", a);
  if (!(d.label_shuffle.std_accuracy >= 0.0)) {
    out.push_back("label_shuffle.std_accuracy must be >= 0");
  }
  check_unit(out, "nmi_logits", d.nmi_logits);
  check_unit(out, "nmi_pca", d.nmi_pca);
  check_unit(out, "ablation.baseline_accuracy", d.ablation.baseline_accuracy);
  for (double drop : d.ablation.drops) {
    if (!(drop >= -1.0 && drop <= 1.0)) out.push_back("ablation drop outside [-1, 1]");
  }
  return out;
}

}  // namespace embdiag
