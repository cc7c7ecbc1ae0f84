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

#include <span>
#include <string>
#include <vector>

#include "embdiag/data_model.h"
#include "embdiag/numerics.h"

namespace embdiag {

struct QueryAuc {
  std::string clip_id;
  double auc = 0.0;
};

struct SkippedQuery {
  std::string clip_id;
  std::string reason;
};

struct RetrievalResult {
  std::vector<QueryAuc> per_query_auc;
  double mean_auc = 0.0;  // over scored queries only
  std::vector<SkippedQuery> skipped_queries;
};

// Mann-Whitney estimate of P(pos > neg) with ties counted as one half.
// Throws ValidationError when either side is empty.
double roc_auc_from_scores(std::span<const double> pos, std::span<const double> neg);

// Every row is a query ranked against all other rows by cosine similarity;
// rows sharing the query's label are positives. Queries without a positive or
// without a negative are skipped. Throws ValidationError for fewer than two
// rows, zero-norm rows, or when no query can be scored.
RetrievalResult rank_by_cosine(const Matrix& x, std::span<const int> labels,
                               std::span<const std::string> clip_ids);

// rank_by_cosine over the test split, grouping by `field`.
RetrievalResult retrieval_eval(const LabeledDataset& ds, LabelField field);

}  // namespace embdiag
