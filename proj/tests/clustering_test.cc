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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "embdiag/error.h"
#include "embdiag/rng.h"
#include "oracles.h"

namespace embdiag {
namespace {

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<int> v(n);
  for (auto& e : v) e = static_cast<int>(rng.uniform_index(k));
  return v;
}

Matrix random_matrix(Rng& rng, int n, int d) {
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  }
  return x;
}

TEST(NmiTest, HandCases) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_NEAR(nmi(y, std::vector<int>{1, 1, 0, 0}), 1.0, 1e-15);
  EXPECT_NEAR(nmi(y, std::vector<int>{0, 1, 0, 1}), 0.0, 1e-15);
  EXPECT_NEAR(nmi(y, std::vector<int>{0, 0, 0, 1}), 0.3437, 1e-4);
  EXPECT_DOUBLE_EQ(nmi(std::vector<int>{2, 2, 2}, std::vector<int>{5, 5, 5}), 1.0);
  EXPECT_DOUBLE_EQ(nmi(std::vector<int>{0, 0, 0}, std::vector<int>{0, 1, 2}), 0.0);
}

TEST(NmiTest, ContingencyPieces) {
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<int> c{0, 0, 0, 1};
  const ContingencyTable t(y, c);
  EXPECT_EQ(t.total(), 4);
  EXPECT_EQ(t.count(0, 0), 2);
  EXPECT_EQ(t.count(1, 1), 1);
  EXPECT_NEAR(t.mutual_information(), 0.21576, 1e-5);
  EXPECT_NEAR(t.row_entropy(), 0.69315, 1e-5);
  EXPECT_NEAR(t.col_entropy(), 0.56234, 1e-5);
}

TEST(NmiTest, RejectsBadInput) {
  EXPECT_THROW(nmi(std::vector<int>{}, std::vector<int>{}), ValidationError);
  EXPECT_THROW(nmi(std::vector<int>{0}, std::vector<int>{0, 1}), ValidationError);
}

TEST(NmiTest, MatchesOracleAndProperties) {
  Rng rng(99);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 1 + rng.uniform_index(50);
    const auto y = random_labels(rng, n, 1 + rng.uniform_index(6));
    const auto c = random_labels(rng, n, 1 + rng.uniform_index(6));
    const double v = nmi(y, c);
    EXPECT_NEAR(v, testing::oracle_nmi(y, c), 1e-9);
    EXPECT_NEAR(v, nmi(c, y), 1e-12);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    std::vector<int> relabeled(y);
    for (auto& e : relabeled) e = 10 - 3 * e;
    EXPECT_NEAR(nmi(y, relabeled), 1.0, 1e-12);
  }
}

TEST(KMeansTest, WellSeparatedPairs) {
  Matrix x(4, 2);
  x << 0, 0, 0, 0.1, 10, 10, 10, 10.1;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = kmeans(x, 2, seed);
    EXPECT_EQ(r.assignments[0], r.assignments[1]);
    EXPECT_EQ(r.assignments[2], r.assignments[3]);
    EXPECT_NE(r.assignments[0], r.assignments[2]);
  }
}

TEST(KMeansTest, KEqualsNGivesZeroInertia) {
  Rng rng(1);
  const Matrix x = random_matrix(rng, 7, 3);
  EXPECT_NEAR(kmeans(x, 7, 4).inertia, 0.0, 1e-12);
}

TEST(KMeansTest, BeatsRandomAssignments) {
  Rng rng(2);
  const Matrix x = random_matrix(rng, 30, 4);
  const auto r = kmeans(x, 3, 17);
  for (int t = 0; t < 1000; ++t) {
    std::vector<int> a(30);
    for (auto& e : a) e = static_cast<int>(rng.uniform_index(3));
    Matrix centroids = Matrix::Zero(3, 4);
    std::vector<int> counts(3, 0);
    for (int i = 0; i < 30; ++i) {
      centroids.row(a[i]) += x.row(i);
      ++counts[a[i]];
    }
    for (int k = 0; k < 3; ++k) {
      if (counts[k] > 0) centroids.row(k) /= counts[k];
    }
    EXPECT_LE(r.inertia, kmeans_inertia(x, centroids, a) + 1e-9);
  }
}

TEST(KMeansTest, InertiaTraceNonincreasingAndConsistent) {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const int n = 5 + static_cast<int>(rng.uniform_index(60));
    const Matrix x = random_matrix(rng, n, 1 + static_cast<int>(rng.uniform_index(5)));
    const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(6, n));
    const auto r = kmeans(x, k, t);
    ASSERT_FALSE(r.inertia_trace.empty());
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) {
      EXPECT_LE(r.inertia_trace[i], r.inertia_trace[i - 1]);
    }
    const double recomputed = kmeans_inertia(x, r.centroids, r.assignments);
    EXPECT_NEAR(r.inertia, recomputed, 1e-6 * std::max(1.0, recomputed));
    for (int a : r.assignments) {
      EXPECT_GE(a, 0);
      EXPECT_LT(a, static_cast<int>(k));
    }
  }
}

TEST(KMeansTest, DeterministicAcrossRunsAndThreads) {
  Rng rng(12);
  const Matrix x = random_matrix(rng, 80, 5);
  const auto a = kmeans(x, 4, 31);
  const auto b = kmeans(x, 4, 31);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.inertia, b.inertia);
  EXPECT_EQ(a.restarts_used, 10u);
}

TEST(KMeansTest, DuplicatePointsStillFillEveryCluster) {
  Matrix x(6, 1);
  x << 1, 1, 1, 1, 5, 5;
  const auto r = kmeans(x, 3, 0);
  std::vector<int> counts(3, 0);
  for (int a : r.assignments) ++counts[a];
  for (int c : counts) EXPECT_GT(c, 0);
}

TEST(KMeansTest, RejectsBadK) {
  const Matrix x = Matrix::Zero(3, 2);
  EXPECT_THROW(kmeans(x, 0, 0), ValidationError);
  EXPECT_THROW(kmeans(x, 4, 0), ValidationError);
}

TEST(ClusterLabelsTest, OneHotGeometryIsPerfect) {
  std::vector<int> labels;
  Matrix x = Matrix::Zero(30, 3);
  for (int i = 0; i < 30; ++i) {
    labels.push_back(i % 3);
    x(i, i % 3) = 1.0;
  }
  const auto r = cluster_labels(x, labels, 5);
  EXPECT_EQ(r.k, 3u);
  EXPECT_DOUBLE_EQ(r.nmi, 1.0);
}

TEST(RowSelectionTest, Tokens) {
  EXPECT_EQ(parse_row_selection("test"), RowSelection::kTest);
  EXPECT_EQ(parse_row_selection("all"), RowSelection::kAll);
  EXPECT_FALSE(parse_row_selection("train").has_value());
  EXPECT_EQ(to_string(RowSelection::kAll), "all");
}

}  // namespace
}  // namespace embdiag
