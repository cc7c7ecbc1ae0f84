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
#include <string>
#include <vector>

#include "embdiag/data_model.h"
#include "embdiag/numerics.h"

namespace embdiag {

struct ProbeConfig {
  double l2_lambda = 1e-4;
  std::size_t max_iters = 1000;
  double grad_tol = 1e-6;
  double learning_rate = 0.5;  // initial step of every backtracking search
  std::uint64_t seed = 0;      // recorded only; training is deterministic
};

// Affine map from standardized embeddings to class logits.
struct LinearProbe {
  Matrix weights;  // C x D
  Vector bias;     // C
  Standardizer standardizer;
  std::vector<std::string> class_names;
  std::vector<double> train_loss_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

struct ProbeObjective {
  double loss = 0.0;
  Matrix grad_weights;
  Vector grad_bias;
};

// Mean softmax cross-entropy plus (l2 / 2) |W|^2 on standardized features,
// with its gradient. The bias is not regularized.
ProbeObjective probe_objective(const Matrix& xs, std::span<const int> y, const Matrix& weights,
                               const Vector& bias, double l2_lambda);

// Full-batch gradient descent from zero weights. Each iteration starts at
// cfg.learning_rate and halves the step until the objective strictly
// decreases; training stops when the gradient max-norm drops below
// cfg.grad_tol, after cfg.max_iters steps, or when no step size improves the
// objective. Class index i corresponds to class_names[i].
LinearProbe train_probe(const Matrix& x_train, std::span<const int> y_train,
                        std::vector<std::string> class_names, const ProbeConfig& cfg);

Matrix logits(const LinearProbe& probe, const Matrix& x);
// Row-wise argmax of the logits; ties go to the lowest class index.
std::vector<int> predict(const LinearProbe& probe, const Matrix& x);
double accuracy(const LinearProbe& probe, const Matrix& x, std::span<const int> y);
// Accuracy per class present in y, in class index order.
std::vector<ClassAccuracy> per_class_accuracy(const LinearProbe& probe, const Matrix& x,
                                              std::span<const int> y);

inline constexpr double kAblationBinWidthPp = 0.5;

struct FeatureImportance {
  double baseline_accuracy = 0.0;
  std::vector<double> drops;  // per feature, baseline minus ablated accuracy
  std::vector<HistogramBin> histogram;
};

// Zeroes each standardized feature in turn (train-mean imputation in raw
// space) and records the accuracy drop.
FeatureImportance feature_importance(const LinearProbe& probe, const Matrix& x_test,
                                     std::span<const int> y_test);

}  // namespace embdiag
