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


#include "embdiag/probe.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "embdiag/error.h"
#include "embdiag/rng.h"
#include "oracles.h"

namespace embdiag {
namespace {

testing::DenseMatrix dense(const Matrix& m) {
  testing::DenseMatrix out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

double oracle_loss(const Matrix& x, const std::vector<int>& y, const Matrix& w, const Vector& b,
                   double l2) {
  return testing::oracle_probe_loss(dense(x), y, dense(w),
                                    std::vector<double>(b.data(), b.data() + b.size()), l2);
}

TEST(ProbeObjectiveTest, GradientMatchesFiniteDifferences) {
  Rng rng(42);
  const double h = 1e-5;
  for (int t = 0; t < 20; ++t) {
    const int n = 10;
    const int d = 4;
    const int c = 3;
    Matrix x(n, d);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    }
    std::vector<int> y(n);
    for (auto& e : y) e = static_cast<int>(rng.uniform_index(c));
    Matrix w(c, d);
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < d; ++j) w(i, j) = rng.normal();
    }
    Vector b(c);
    for (int i = 0; i < c; ++i) b(i) = rng.normal();
    const double l2 = 0.1;

    const auto obj = probe_objective(x, y, w, b, l2);
    EXPECT_NEAR(obj.loss, oracle_loss(x, y, w, b, l2), 1e-12);
    double worst = 0.0;
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < d; ++j) {
        Matrix wp = w;
        Matrix wm = w;
        wp(i, j) += h;
        wm(i, j) -= h;
        const double fd = (oracle_loss(x, y, wp, b, l2) - oracle_loss(x, y, wm, b, l2)) / (2 * h);
        const double a = obj.grad_weights(i, j);
        worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
      }
      Vector bp = b;
      Vector bm = b;
      bp(i) += h;
      bm(i) -= h;
      const double fd = (oracle_loss(x, y, w, bp, l2) - oracle_loss(x, y, w, bm, l2)) / (2 * h);
      const double a = obj.grad_bias(i);
      worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6}));
    }
    EXPECT_LT(worst, 1e-4);
  }
}

TEST(ProbeObjectiveTest, ZeroWeightsGiveLogC) {
  for (int c : {2, 3, 7}) {
    Matrix x = Matrix::Random(9, 3);
    std::vector<int> y(9);
    for (int i = 0; i < 9; ++i) y[i] = i % c;
    const auto obj = probe_objective(x, y, Matrix::Zero(c, 3), Vector::Zero(c), 0.5);
    EXPECT_NEAR(obj.loss, std::log(static_cast<double>(c)), 1e-12);
  }
}

struct Blobs {
  Matrix x;
  std::vector<int> y;
};

Blobs blobs(Rng& rng, int per_class, double gap) {
  Blobs out;
  out.x.resize(2 * per_class, 2);
  for (int i = 0; i < 2 * per_class; ++i) {
    const int label = i < per_class ? 0 : 1;
    out.x(i, 0) = rng.normal() + (label == 0 ? -gap : gap);
    out.x(i, 1) = rng.normal();
    out.y.push_back(label);
  }
  return out;
}

TEST(TrainProbeTest, SeparableBlobsReachFullTrainAccuracy) {
  Rng rng(3);
  const Blobs data = blobs(rng, 40, 6.0);
  ProbeConfig cfg;
  cfg.l2_lambda = 1e-6;
  const auto probe = train_probe(data.x, data.y, {"a", "b"}, cfg);
  EXPECT_DOUBLE_EQ(accuracy(probe, data.x, data.y), 1.0);
  EXPECT_NEAR(probe.train_loss_trace.front(), std::log(2.0), 1e-12);
  for (std::size_t i = 1; i < probe.train_loss_trace.size(); ++i) {
    EXPECT_LT(probe.train_loss_trace[i], probe.train_loss_trace[i - 1]);
  }
}

TEST(TrainProbeTest, ConvergesOnGradientTolerance) {
  Rng rng(9);
  const Blobs data = blobs(rng, 30, 0.5);
  ProbeConfig cfg;
  cfg.l2_lambda = 1e-1;
  cfg.max_iters = 5000;
  cfg.grad_tol = 1e-6;
  const auto probe = train_probe(data.x, data.y, {"a", "b"}, cfg);
  EXPECT_TRUE(probe.converged);
  const Matrix xs = probe.standardizer.apply(data.x);
  const auto obj = probe_objective(xs, data.y, probe.weights, probe.bias, cfg.l2_lambda);
  EXPECT_LT(std::max(obj.grad_weights.cwiseAbs().maxCoeff(), obj.grad_bias.cwiseAbs().maxCoeff()),
            1e-6);
}

TEST(TrainProbeTest, DeterministicAndScaleRobust) {
  Rng rng(10);
  Matrix x(60, 5);
  std::vector<int> y(60);
  for (int i = 0; i < 60; ++i) {
    y[i] = i % 3;
    for (int j = 0; j < 5; ++j) x(i, j) = rng.normal() + (j == y[i] ? 1.0 : 0.0);
  }
  const auto a = train_probe(x, y, {"a", "b", "c"}, {});
  const auto b = train_probe(x, y, {"a", "b", "c"}, {});
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.bias, b.bias);
  const Matrix scaled = x * 10.0;
  const auto s = train_probe(scaled, y, {"a", "b", "c"}, {});
  EXPECT_EQ(accuracy(a, x, y), accuracy(s, scaled, y));
}

TEST(TrainProbeTest, RejectsInvalidInput) {
  Matrix x = Matrix::Random(4, 2);
  EXPECT_THROW(train_probe(x, std::vector<int>{0, 0, 0, 0}, {"a", "b"}, {}), ValidationError);
  EXPECT_THROW(train_probe(x, std::vector<int>{0, 0, 0, 0}, {"a"}, {}), ValidationError);
  EXPECT_THROW(train_probe(x, std::vector<int>{0, 1, 2, 0}, {"a", "b"}, {}), ValidationError);
  Matrix bad = x;
  bad(1, 1) = std::nan("");
  EXPECT_THROW(train_probe(bad, std::vector<int>{0, 1, 0, 1}, {"a", "b"}, {}), ValidationError);
}

LinearProbe zero_probe(int classes, int dim) {
  LinearProbe p;
  p.weights = Matrix::Zero(classes, dim);
  p.bias = Vector::Zero(classes);
  p.standardizer.means = Vector::Zero(dim);
  p.standardizer.stds = Vector::Ones(dim);
  for (int c = 0; c < classes; ++c) p.class_names.push_back("c" + std::to_string(c));
  return p;
}

TEST(PredictTest, TiesGoToLowestClass) {
  const auto p = zero_probe(3, 2);
  const Matrix x = Matrix::Random(5, 2);
  EXPECT_TRUE(logits(p, x).isZero(0.0));
  for (int v : predict(p, x)) EXPECT_EQ(v, 0);
  EXPECT_EQ(logits(p, x).rows(), 5);
  EXPECT_THROW(logits(p, Matrix::Zero(2, 3)), ValidationError);
}

TEST(PredictTest, BiasShiftInvariant) {
  Rng rng(1);
  auto p = zero_probe(3, 4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 4; ++j) p.weights(i, j) = rng.normal();
  }
  Matrix x(20, 4);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
  }
  auto shifted = p;
  shifted.bias.array() += 4.0;
  EXPECT_EQ(predict(p, x), predict(shifted, x));
}

TEST(AccuracyTest, PerfectAndPerClass) {
  auto p = zero_probe(2, 1);
  p.weights(1, 0) = 1.0;
  Matrix x(4, 1);
  x << -1, -2, 3, 4;
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(accuracy(p, x, y), 1.0);
  const std::vector<int> half{0, 1, 1, 1};
  const auto per = per_class_accuracy(p, x, half);
  ASSERT_EQ(per.size(), 2u);
  EXPECT_EQ(per[0].label, "c0");
  EXPECT_DOUBLE_EQ(per[0].accuracy, 1.0);
  EXPECT_DOUBLE_EQ(per[1].accuracy, 2.0 / 3.0);
  EXPECT_EQ(per[1].support, 3);
  const Matrix single = x.bottomRows(2);
  EXPECT_DOUBLE_EQ(accuracy(p, single, std::vector<int>{1, 1}), 1.0);
}

TEST(FeatureImportanceTest, ZeroWeightFeatureHasNoDrop) {
  Rng rng(4);
  auto p = zero_probe(2, 3);
  p.weights(1, 0) = 2.0;
  p.weights(0, 1) = 0.5;
  Matrix x(50, 3);
  std::vector<int> y(50);
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal();
    y[i] = x(i, 0) > 0 ? 1 : 0;
  }
  const auto fi = feature_importance(p, x, y);
  ASSERT_EQ(fi.drops.size(), 3u);
  EXPECT_EQ(fi.drops[2], 0.0);
  EXPECT_DOUBLE_EQ(fi.baseline_accuracy, accuracy(p, x, y));
  std::int64_t total = 0;
  for (const auto& bin : fi.histogram) {
    total += bin.count;
    EXPECT_DOUBLE_EQ(bin.upper_pp - bin.lower_pp, kAblationBinWidthPp);
  }
  EXPECT_EQ(total, 3);
}

TEST(FeatureImportanceTest, MatchesExplicitZeroing) {
  Rng rng(6);
  Matrix x(40, 4);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    y[i] = i % 2;
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal() + (j < 2 && y[i] ? 0.8 : 0.0);
  }
  const auto probe = train_probe(x, y, {"a", "b"}, {});
  const auto fi = feature_importance(probe, x, y);
  for (int d = 0; d < 4; ++d) {
    Matrix ablated = x;
    ablated.col(d).setConstant(probe.standardizer.means(d));
    EXPECT_NEAR(fi.drops[d], fi.baseline_accuracy - accuracy(probe, ablated, y), 1e-12);
  }
}

}  // namespace
}  // namespace embdiag
