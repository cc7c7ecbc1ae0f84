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


#include "embdiag/retrieval.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "embdiag/error.h"
#include "embdiag/parallel.h"

namespace embdiag {
namespace {

constexpr Eigen::Index kQueryBlock = 256;

}  // namespace

double roc_auc_from_scores(std::span<const double> pos, std::span<const double> neg) {
  if (pos.empty() || neg.empty()) {
    throw ValidationError("roc_auc_from_scores: need at least one positive and one negative");
  }
  std::vector<double> sorted_neg(neg.begin(), neg.end());
  std::sort(sorted_neg.begin(), sorted_neg.end());
  double less = 0.0;
  double ties = 0.0;
  for (double p : pos) {
    const auto lo = std::lower_bound(sorted_neg.begin(), sorted_neg.end(), p);
    const auto hi = std::upper_bound(lo, sorted_neg.end(), p);
    less += static_cast<double>(lo - sorted_neg.begin());
    ties += static_cast<double>(hi - lo);
  }
  return (less + 0.5 * ties) /
         (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

RetrievalResult rank_by_cosine(const Matrix& x, std::span<const int> labels,
                               std::span<const std::string> clip_ids) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != labels.size() || labels.size() != clip_ids.size()) {
    throw ValidationError("rank_by_cosine: rows, labels and ids differ in length");
  }
  if (n < 2) throw ValidationError("retrieval: need at least 2 rows");

  const Vector norms = x.rowwise().norm();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (norms(i) == 0.0) {
      throw ValidationError(fmt::format("retrieval: clip {} has a zero-norm embedding",
                                        clip_ids[static_cast<std::size_t>(i)]));
    }
  }

  std::vector<double> auc(static_cast<std::size_t>(n), 0.0);
  std::vector<int> status(static_cast<std::size_t>(n), 0);  // 0 ok, 1 no pos, 2 no neg
  const auto blocks = static_cast<std::size_t>((n + kQueryBlock - 1) / kQueryBlock);
  parallel_for(blocks, [&](std::size_t b) {
    const Eigen::Index begin = static_cast<Eigen::Index>(b) * kQueryBlock;
    const Eigen::Index rows = std::min(kQueryBlock, n - begin);
    const Matrix dots = x.middleRows(begin, rows) * x.transpose();
    std::vector<double> pos, neg;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const Eigen::Index q = begin + r;
      pos.clear();
      neg.clear();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == q) continue;
        const double sim = std::clamp(dots(r, j) / (norms(q) * norms(j)), -1.0, 1.0);
        (labels[static_cast<std::size_t>(j)] == labels[static_cast<std::size_t>(q)] ? pos : neg)
            .push_back(sim);
      }
      const auto slot = static_cast<std::size_t>(q);
      if (pos.empty()) {
        status[slot] = 1;
      } else if (neg.empty()) {
        status[slot] = 2;
      } else {
        auc[slot] = roc_auc_from_scores(pos, neg);
      }
    }
  });

  RetrievalResult out;
  double sum = 0.0;
  for (std::size_t i = 0; i < auc.size(); ++i) {
    if (status[i] == 0) {
      out.per_query_auc.push_back({clip_ids[i], auc[i]});
      sum += auc[i];
    } else {
      out.skipped_queries.push_back(
          {clip_ids[i], status[i] == 1 ? "no other row shares the query label"
                                       : "every other row shares the query label"});
    }
  }
  if (out.per_query_auc.empty()) throw ValidationError("retrieval: no query could be scored");
  out.mean_auc = sum / static_cast<double>(out.per_query_auc.size());
  return out;
}

RetrievalResult retrieval_eval(const LabeledDataset& ds, LabelField field) {
  const auto rows = ds.rows_in(Split::kTest);
  if (rows.size() < 2) {
    throw ValidationError(fmt::format("retrieval: test split has {} rows, need at least 2",
                                      rows.size()));
  }
  const auto values = ds.field_values(rows, field);
  const LabelIndex index(values);
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  for (std::size_t r : rows) ids.push_back(ds.table().clip_ids()[r]);
  return rank_by_cosine(to_matrix(ds.table(), rows), index.encode(values), ids);
}

}  // namespace embdiag
