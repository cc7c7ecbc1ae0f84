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


#include "embdiag/numerics.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "embdiag/error.h"

namespace embdiag {

Matrix to_matrix(const EmbeddingTable& table, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(table.dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto row = table.row(rows[i]);
    for (std::size_t d = 0; d < row.size(); ++d) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = row[d];
    }
  }
  return out;
}

Matrix to_matrix(const EmbeddingTable& table) {
  std::vector<std::size_t> rows(table.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return to_matrix(table, rows);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw ValidationError(fmt::format("cosine_similarity: length mismatch {} vs {}",
                                      u.size(), v.size()));
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0.0 || vv == 0.0) throw ValidationError("cosine_similarity: zero-norm input");
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

double entropy(std::span<const std::int64_t> counts) {
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw ValidationError("entropy: negative count");
    total += c;
  }
  if (total == 0) throw ValidationError("entropy: empty histogram");
  const double n = static_cast<double>(total);
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> out(z.size());
  if (z.empty()) return out;
  const double shift = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - shift);
    sum += out[i];
  }
  for (auto& p : out) p /= sum;
  return out;
}

Standardizer fit_standardizer(const Matrix& x_train) {
  if (x_train.rows() == 0) throw ValidationError("fit_standardizer: no rows");
  const auto n = static_cast<double>(x_train.rows());
  Standardizer s;
  s.means = Vector::Zero(x_train.cols());
  s.stds = Vector::Zero(x_train.cols());
  for (Eigen::Index d = 0; d < x_train.cols(); ++d) {
    const auto col = x_train.col(d);
    if (col.maxCoeff() == col.minCoeff()) {
      // Exact mean so the column maps to exact zeros.
      s.means(d) = col(0);
      s.stds(d) = kStdFloor;
      continue;
    }
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    s.means(d) = mean;
    s.stds(d) = std::max(std::sqrt(var), kStdFloor);
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != means.size()) {
    throw ValidationError(fmt::format("standardizer expects {} columns, got {}",
                                      means.size(), x.cols()));
  }
  Matrix out = x;
  out.rowwise() -= means.transpose();
  out.array().rowwise() /= stds.transpose().array();
  return out;
}

namespace {

void normalize_sign(Eigen::Ref<Vector> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  if (v(best) < 0.0) v = -v;
}

}  // namespace

PcaModel pca_fit(const Matrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < 2) throw ValidationError("pca_fit: need at least 2 rows");
  if (k == 0 || k > std::min(n - 1, d)) {
    throw ValidationError(fmt::format(
        "pca_fit: k = {} out of range [1, {}] for {} rows of dim {}", k,
        std::min(n - 1, d), n, d));
  }

  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  Matrix centered = x.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  model.total_variance = centered.squaredNorm() / denom;

  const bool use_gram = d > n;
  const Matrix scatter = use_gram ? Matrix(centered * centered.transpose() / denom)
                                  : Matrix(centered.transpose() * centered / denom);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(scatter);
  if (solver.info() != Eigen::Success) {
    throw Error("pca_fit: eigendecomposition failed");
  }
  // Ascending order from Eigen; walk from the top.
  const Vector& values = solver.eigenvalues();
  const Eigen::Index m = values.size();
  const double top = std::max(values(m - 1), 0.0);
  const double rank_tol = top * 1e-10;
  std::size_t rank = 0;
  for (Eigen::Index i = m - 1; i >= 0 && values(i) > rank_tol && top > 0.0; --i) ++rank;
  if (rank < k) {
    throw ValidationError(fmt::format(
        "pca_fit: data rank {} is below requested k = {} (achievable k <= {})", rank, k,
        rank));
  }

  model.components.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  model.explained_variance.resize(static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) {
    const Eigen::Index src = m - 1 - static_cast<Eigen::Index>(j);
    Vector axis;
    if (use_gram) {
      axis = centered.transpose() * solver.eigenvectors().col(src);
      axis /= axis.norm();
    } else {
      axis = solver.eigenvectors().col(src);
    }
    normalize_sign(axis);
    model.components.row(static_cast<Eigen::Index>(j)) = axis.transpose();
    model.explained_variance(static_cast<Eigen::Index>(j)) = std::max(values(src), 0.0);
  }
  return model;
}

Matrix PcaModel::transform(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw ValidationError(fmt::format("pca_transform expects {} columns, got {}",
                                      mean.size(), x.cols()));
  }
  return (x.rowwise() - mean.transpose()) * components.transpose();
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) { return model.transform(x); }

}  // namespace embdiag
