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
#include <vector>

#include "embdiag/data_model.h"
#include "embdiag/numerics.h"

namespace embdiag {

struct KMeansOptions {
  std::size_t restarts = 10;
  std::size_t max_iter = 300;
  double tol = 1e-6;  // stop when no centroid moves farther than this
};

struct KMeansResult {
  Matrix centroids;              // K x D, mean of each cluster
  std::vector<int> assignments;  // N entries in [0, K)
  double inertia = 0.0;          // sum of squared distances to own centroid
  std::size_t iterations = 0;    // accepted Lloyd iterations of the best run
  std::size_t restarts_used = 0;
  std::size_t best_restart = 0;
  std::vector<double> inertia_trace;  // best run: seeding, then each iteration
};

// k-means++ seeding followed by Lloyd iterations, best of `restarts` runs by
// inertia (ties go to the lower restart index). Restart r draws from the
// substream derive_seed(seed, "kmeans", r), so results do not depend on the
// worker count. A Lloyd step that would raise inertia (possible only through
// rounding) ends the run with the previous state. Empty clusters are refilled
// with the point farthest from its centroid.
KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

// Sum of squared distances of each row to the centroid of its cluster.
double kmeans_inertia(const Matrix& x, const Matrix& centroids,
                      std::span<const int> assignments);

// Joint counts of two labelings. Labels may be arbitrary integers; rows and
// columns are their sorted distinct values.
class ContingencyTable {
 public:
  ContingencyTable(std::span<const int> y, std::span<const int> c);

  std::size_t rows() const { return row_values_.size(); }
  std::size_t cols() const { return col_values_.size(); }
  std::int64_t count(std::size_t i, std::size_t j) const { return counts_[i * cols() + j]; }
  std::int64_t total() const { return total_; }
  const std::vector<std::int64_t>& row_margins() const { return row_margins_; }
  const std::vector<std::int64_t>& col_margins() const { return col_margins_; }
  const std::vector<int>& row_values() const { return row_values_; }
  const std::vector<int>& col_values() const { return col_values_; }

  double row_entropy() const;
  double col_entropy() const;
  double mutual_information() const;

 private:
  std::vector<int> row_values_;
  std::vector<int> col_values_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> row_margins_;
  std::vector<std::int64_t> col_margins_;
  std::int64_t total_ = 0;
};

// 2 I(Y;C) / (H(Y) + H(C)), clamped to [0, 1]. Two single-block partitions
// score 1.0. Throws ValidationError on empty or mismatched inputs.
double nmi(std::span<const int> y, std::span<const int> c);

enum class RowSelection { kTest, kAll };

std::string_view to_string(RowSelection selection);
std::optional<RowSelection> parse_row_selection(std::string_view token);

struct ClusterEvalOptions {
  bool standardize = false;  // z-score the selected rows before clustering
  KMeansOptions kmeans;
};

struct ClusterEval {
  double nmi = 0.0;
  std::size_t k = 0;
  std::size_t n_rows = 0;
  KMeansResult kmeans;
};

// Clusters `x` into K = number of distinct `labels` and scores the result.
ClusterEval cluster_labels(const Matrix& x, std::span<const int> labels,
                           std::uint64_t seed, const ClusterEvalOptions& options = {});

// K-Means on the selected rows with K equal to the number of distinct values
// of `field` among them; NMI of the assignments against that field.
ClusterEval cluster_eval(const LabeledDataset& ds, LabelField field, RowSelection which,
                         std::uint64_t seed, const ClusterEvalOptions& options = {});

}  // namespace embdiag
