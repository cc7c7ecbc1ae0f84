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

#include <Eigen/Dense>

#include "embdiag/data_model.h"

namespace embdiag {

// All metric arithmetic runs at double precision on row-major matrices.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Selected table rows widened to double, in the given order.
Matrix to_matrix(const EmbeddingTable& table, std::span<const std::size_t> rows);
Matrix to_matrix(const EmbeddingTable& table);

// u.v / (|u| |v|), clamped to [-1, 1]. Throws ValidationError on a zero-norm
// input or a length mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Shannon entropy in nats of a histogram of counts. Zero bins contribute
// nothing. Throws ValidationError when the total count is zero.
double entropy(std::span<const std::int64_t> counts);

// Max-shifted softmax.
std::vector<double> softmax(std::span<const double> z);

inline constexpr double kStdFloor = 1e-8;

// Per-column z-scoring with statistics frozen at fit time.
struct Standardizer {
  Vector means;
  Vector stds;  // population std, floored at kStdFloor

  Matrix apply(const Matrix& x) const;
};

Standardizer fit_standardizer(const Matrix& x_train);

struct PcaModel {
  Matrix components;          // k x D, orthonormal rows
  Vector mean;                // D
  Vector explained_variance;  // k, descending
  double total_variance = 0.0;

  // Subtracts the fitted mean and projects onto the components: N x k.
  Matrix transform(const Matrix& x) const;
};

// Top-k principal components of the sample covariance (N - 1 denominator).
// Uses the D x D covariance when D <= N and the N x N Gram matrix otherwise.
// Each component is sign-normalized so its largest-magnitude entry is
// positive. Throws ValidationError when k is out of [1, min(N-1, D)] or the
// data rank is below k.
PcaModel pca_fit(const Matrix& x, std::size_t k);
Matrix pca_transform(const PcaModel& model, const Matrix& x);

}  // namespace embdiag
