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


#include "embdiag/clustering.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "embdiag/error.h"
#include "embdiag/parallel.h"
#include "embdiag/rng.h"

namespace embdiag {
namespace {

double squared_distance(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double s = 0.0;
  const double* pa = a.row(i).data();
  const double* pb = b.row(j).data();
  for (Eigen::Index d = 0; d < a.cols(); ++d) {
    const double diff = pa[d] - pb[d];
    s += diff * diff;
  }
  return s;
}

struct Assignment {
  std::vector<int> labels;
  std::vector<double> dist2;
};

Assignment assign_nearest(const Matrix& x, const Matrix& centroids) {
  Assignment out;
  out.labels.resize(static_cast<std::size_t>(x.rows()));
  out.dist2.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = squared_distance(x, i, centroids, 0);
    for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
      const double dd = squared_distance(x, i, centroids, c);
      if (dd < best_d) {
        best_d = dd;
        best = static_cast<int>(c);
      }
    }
    out.labels[static_cast<std::size_t>(i)] = best;
    out.dist2[static_cast<std::size_t>(i)] = best_d;
  }
  return out;
}

// Moves the farthest point of a multi-point cluster into each empty cluster.
void repair_empty(Assignment& a, std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (int l : a.labels) ++sizes[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < k; ++c) {
    if (sizes[c] != 0) continue;
    std::size_t best = a.labels.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
      if (sizes[static_cast<std::size_t>(a.labels[i])] > 1 && a.dist2[i] > best_d) {
        best_d = a.dist2[i];
        best = i;
      }
    }
    --sizes[static_cast<std::size_t>(a.labels[best])];
    a.labels[best] = static_cast<int>(c);
    a.dist2[best] = 0.0;
    ++sizes[c];
  }
}

Matrix cluster_means(const Matrix& x, std::span<const int> labels, std::size_t k) {
  Matrix sums = Matrix::Zero(static_cast<Eigen::Index>(k), x.cols());
  std::vector<double> counts(k, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    sums.row(labels[i]) += x.row(static_cast<Eigen::Index>(i));
    counts[static_cast<std::size_t>(labels[i])] += 1.0;
  }
  for (std::size_t c = 0; c < k; ++c) sums.row(static_cast<Eigen::Index>(c)) /= counts[c];
  return sums;
}

Matrix plus_plus_seeds(const Matrix& x, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix centers(static_cast<Eigen::Index>(k), x.cols());
  std::size_t first = rng.uniform_index(n);
  centers.row(0) = x.row(static_cast<Eigen::Index>(first));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_distance(x, static_cast<Eigen::Index>(i), centers, 0);
  }
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      pick = rng.uniform_index(n);
    }
    centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x, static_cast<Eigen::Index>(i), centers,
                                               static_cast<Eigen::Index>(c)));
    }
  }
  return centers;
}

KMeansResult single_run(const Matrix& x, std::size_t k, std::uint64_t seed,
                        const KMeansOptions& options) {
  Rng rng(seed);
  Matrix seeds = plus_plus_seeds(x, k, rng);
  Assignment a = assign_nearest(x, seeds);
  repair_empty(a, k);

  KMeansResult r;
  r.assignments = std::move(a.labels);
  r.centroids = cluster_means(x, r.assignments, k);
  r.inertia = kmeans_inertia(x, r.centroids, r.assignments);
  r.inertia_trace.push_back(r.inertia);

  for (std::size_t it = 0; it < options.max_iter; ++it) {
    Assignment next = assign_nearest(x, r.centroids);
    repair_empty(next, k);
    Matrix next_centroids = cluster_means(x, next.labels, k);
    const double next_inertia = kmeans_inertia(x, next_centroids, next.labels);
    if (next_inertia > r.inertia) break;

    double shift = 0.0;
    for (Eigen::Index c = 0; c < next_centroids.rows(); ++c) {
      shift = std::max(shift, std::sqrt(squared_distance(next_centroids, c, r.centroids, c)));
    }
    const bool unchanged = next.labels == r.assignments;
    r.assignments = std::move(next.labels);
    r.centroids = std::move(next_centroids);
    r.inertia = next_inertia;
    r.inertia_trace.push_back(next_inertia);
    ++r.iterations;
    if (unchanged || shift < options.tol) break;
  }
  return r;
}

}  // namespace

double kmeans_inertia(const Matrix& x, const Matrix& centroids,
                      std::span<const int> assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    total += squared_distance(x, static_cast<Eigen::Index>(i), centroids, assignments[i]);
  }
  return total;
}

KMeansResult kmeans(const Matrix& x, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
  const auto n = static_cast<std::size_t>(x.rows());
  if (k == 0) throw ValidationError("kmeans: K must be at least 1");
  if (k > n) throw ValidationError(fmt::format("kmeans: K = {} exceeds N = {}", k, n));
  if (!x.allFinite()) throw ValidationError("kmeans: non-finite input");
  const std::size_t restarts = std::max<std::size_t>(1, options.restarts);

  std::vector<KMeansResult> runs(restarts);
  parallel_for(restarts, [&](std::size_t r) {
    runs[r] = single_run(x, k, derive_seed(seed, "kmeans", r), options);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  KMeansResult out = std::move(runs[best]);
  out.restarts_used = restarts;
  out.best_restart = best;
  return out;
}

ContingencyTable::ContingencyTable(std::span<const int> y, std::span<const int> c) {
  if (y.size() != c.size()) {
    throw ValidationError(
        fmt::format("contingency table: length mismatch {} vs {}", y.size(), c.size()));
  }
  std::map<int, std::size_t> rows, cols;
  for (int v : y) rows.emplace(v, 0);
  for (int v : c) cols.emplace(v, 0);
  for (auto& [value, index] : rows) {
    index = row_values_.size();
    row_values_.push_back(value);
  }
  for (auto& [value, index] : cols) {
    index = col_values_.size();
    col_values_.push_back(value);
  }
  counts_.assign(rows.size() * cols.size(), 0);
  row_margins_.assign(rows.size(), 0);
  col_margins_.assign(cols.size(), 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::size_t r = rows[y[i]];
    const std::size_t k = cols[c[i]];
    ++counts_[r * cols.size() + k];
    ++row_margins_[r];
    ++col_margins_[k];
  }
  total_ = static_cast<std::int64_t>(y.size());
}

double ContingencyTable::row_entropy() const { return entropy(row_margins_); }
double ContingencyTable::col_entropy() const { return entropy(col_margins_); }

double ContingencyTable::mutual_information() const {
  const double n = static_cast<double>(total_);
  double mi = 0.0;
  for (std::size_t i = 0; i < rows(); ++i) {
    for (std::size_t j = 0; j < cols(); ++j) {
      const auto nij = count(i, j);
      if (nij == 0) continue;
      const double joint = static_cast<double>(nij);
      mi += joint / n *
            std::log(n * joint /
                     (static_cast<double>(row_margins_[i]) * static_cast<double>(col_margins_[j])));
    }
  }
  return std::max(mi, 0.0);
}

double nmi(std::span<const int> y, std::span<const int> c) {
  if (y.size() != c.size()) {
    throw ValidationError(fmt::format("nmi: length mismatch {} vs {}", y.size(), c.size()));
  }
  if (y.empty()) throw ValidationError("nmi: empty labelings");
  const ContingencyTable table(y, c);
  const double denom = table.row_entropy() + table.col_entropy();
  if (denom == 0.0) return 1.0;
  return std::clamp(2.0 * table.mutual_information() / denom, 0.0, 1.0);
}

std::string_view to_string(RowSelection selection) {
  return selection == RowSelection::kTest ? "test" : "all";
}

std::optional<RowSelection> parse_row_selection(std::string_view token) {
  if (token == "test") return RowSelection::kTest;
  if (token == "all") return RowSelection::kAll;
  return std::nullopt;
}

ClusterEval cluster_labels(const Matrix& x, std::span<const int> labels,
                           std::uint64_t seed, const ClusterEvalOptions& options) {
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw ValidationError("cluster_labels: row/label count mismatch");
  }
  if (labels.empty()) throw ValidationError("cluster_labels: no rows selected");
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  ClusterEval out;
  out.k = distinct.size();
  out.n_rows = labels.size();
  if (out.n_rows < out.k) {
    throw ValidationError(
        fmt::format("cluster_eval: {} rows for K = {}", out.n_rows, out.k));
  }
  const Matrix features = options.standardize ? fit_standardizer(x).apply(x) : x;
  out.kmeans = kmeans(features, out.k, seed, options.kmeans);
  out.nmi = nmi(labels, out.kmeans.assignments);
  return out;
}

ClusterEval cluster_eval(const LabeledDataset& ds, LabelField field, RowSelection which,
                         std::uint64_t seed, const ClusterEvalOptions& options) {
  const auto rows = which == RowSelection::kTest ? ds.rows_in(Split::kTest) : ds.all_rows();
  if (rows.empty()) throw ValidationError("cluster_eval: selected split is empty");
  const auto values = ds.field_values(rows, field);
  const LabelIndex index(values);
  const auto labels = index.encode(values);
  return cluster_labels(to_matrix(ds.table(), rows), labels, seed, options);
}

}  // namespace embdiag
