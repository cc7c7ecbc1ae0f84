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
#include <map>

#include <fmt/format.h>

#include "embdiag/error.h"
#include "embdiag/parallel.h"

namespace embdiag {
namespace {

void check_labels(std::span<const int> y, std::size_t classes) {
  for (int label : y) {
    if (label < 0 || static_cast<std::size_t>(label) >= classes) {
      throw ValidationError(fmt::format("label {} outside [0, {})", label, classes));
    }
  }
}

int row_argmax(const Matrix& m, Eigen::Index i) {
  int best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(i, c) > m(i, best)) best = static_cast<int>(c);
  }
  return best;
}

std::int64_t count_correct(const Matrix& z, std::span<const int> y) {
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (row_argmax(z, static_cast<Eigen::Index>(i)) == y[i]) ++correct;
  }
  return correct;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

ProbeObjective probe_objective(const Matrix& xs, std::span<const int> y, const Matrix& weights,
                               const Vector& bias, double l2_lambda) {
  const Eigen::Index n = xs.rows();
  Matrix z = xs * weights.transpose();
  z.rowwise() += bias.transpose();

  ProbeObjective out;
  double data_loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shift = z.row(i).maxCoeff();
    const int yi = y[static_cast<std::size_t>(i)];
    const double true_logit = z(i, yi) - shift;
    double sum = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      z(i, c) = std::exp(z(i, c) - shift);
      sum += z(i, c);
    }
    data_loss += std::log(sum) - true_logit;
    z.row(i) /= sum;  // probabilities
    z(i, yi) -= 1.0;  // P - Y
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss = data_loss * inv_n + 0.5 * l2_lambda * weights.squaredNorm();
  out.grad_weights = (z.transpose() * xs) * inv_n + l2_lambda * weights;
  out.grad_bias = z.colwise().sum().transpose() * inv_n;
  return out;
}

LinearProbe train_probe(const Matrix& x_train, std::span<const int> y_train,
                        std::vector<std::string> class_names, const ProbeConfig& cfg) {
  const std::size_t classes = class_names.size();
  const auto n = static_cast<std::size_t>(x_train.rows());
  if (y_train.size() != n) {
    throw ValidationError(fmt::format("train_probe: {} rows but {} labels", n, y_train.size()));
  }
  if (classes < 2) throw ValidationError("train_probe: need at least 2 classes");
  if (n < classes) {
    throw ValidationError(fmt::format("train_probe: {} rows for {} classes", n, classes));
  }
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("train_probe: learning_rate must be > 0");
  if (!(cfg.grad_tol > 0.0)) throw ValidationError("train_probe: grad_tol must be > 0");
  if (!(cfg.l2_lambda >= 0.0)) throw ValidationError("train_probe: l2_lambda must be >= 0");
  if (!x_train.allFinite()) throw ValidationError("train_probe: non-finite input");
  check_labels(y_train, classes);
  std::vector<bool> present(classes, false);
  for (int label : y_train) present[static_cast<std::size_t>(label)] = true;
  for (std::size_t c = 0; c < classes; ++c) {
    if (!present[c]) {
      throw ValidationError(
          fmt::format("train_probe: class {} has no training rows", class_names[c]));
    }
  }

  LinearProbe probe;
  probe.class_names = std::move(class_names);
  probe.standardizer = fit_standardizer(x_train);
  const Matrix xs = probe.standardizer.apply(x_train);
  probe.weights = Matrix::Zero(static_cast<Eigen::Index>(classes), x_train.cols());
  probe.bias = Vector::Zero(static_cast<Eigen::Index>(classes));

  ProbeObjective current = probe_objective(xs, y_train, probe.weights, probe.bias, cfg.l2_lambda);
  probe.train_loss_trace.push_back(current.loss);

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const double grad_norm =
        std::max(current.grad_weights.cwiseAbs().maxCoeff(), current.grad_bias.cwiseAbs().maxCoeff());
    if (grad_norm < cfg.grad_tol) {
      probe.converged = true;
      break;
    }
    bool accepted = false;
    for (double step = cfg.learning_rate; step > 1e-20; step *= 0.5) {
      Matrix w = probe.weights - step * current.grad_weights;
      Vector b = probe.bias - step * current.grad_bias;
      ProbeObjective candidate = probe_objective(xs, y_train, w, b, cfg.l2_lambda);
      if (candidate.loss < current.loss) {
        probe.weights = std::move(w);
        probe.bias = std::move(b);
        current = std::move(candidate);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    probe.train_loss_trace.push_back(current.loss);
    ++probe.iterations;
  }
  return probe;
}

Matrix logits(const LinearProbe& probe, const Matrix& x) {
  if (x.cols() != probe.weights.cols()) {
    throw ValidationError(fmt::format("probe expects {} features, got {}",
                                      probe.weights.cols(), x.cols()));
  }
  Matrix z = probe.standardizer.apply(x) * probe.weights.transpose();
  z.rowwise() += probe.bias.transpose();
  return z;
}

std::vector<int> predict(const LinearProbe& probe, const Matrix& x) {
  const Matrix z = logits(probe, x);
  std::vector<int> out(static_cast<std::size_t>(z.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) out[static_cast<std::size_t>(i)] = row_argmax(z, i);
  return out;
}

double accuracy(const LinearProbe& probe, const Matrix& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ValidationError(fmt::format("accuracy: {} rows but {} labels", x.rows(), y.size()));
  }
  if (y.empty()) throw ValidationError("accuracy: empty test set");
  return static_cast<double>(count_correct(logits(probe, x), y)) /
         static_cast<double>(y.size());
}

std::vector<ClassAccuracy> per_class_accuracy(const LinearProbe& probe, const Matrix& x,
                                              std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ValidationError("per_class_accuracy: length mismatch");
  }
  const auto pred = predict(probe, x);
  std::map<int, std::pair<std::int64_t, std::int64_t>> tally;  // correct, support
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto& t = tally[y[i]];
    t.second += 1;
    if (pred[i] == y[i]) t.first += 1;
  }
  std::vector<ClassAccuracy> out;
  for (const auto& [label, t] : tally) {
    const std::string name = label >= 0 && static_cast<std::size_t>(label) < probe.class_names.size()
                                 ? probe.class_names[static_cast<std::size_t>(label)]
                                 : std::to_string(label);
    out.push_back({name, static_cast<double>(t.first) / static_cast<double>(t.second), t.second});
  }
  return out;
}

FeatureImportance feature_importance(const LinearProbe& probe, const Matrix& x_test,
                                     std::span<const int> y_test) {
  if (static_cast<std::size_t>(x_test.rows()) != y_test.size()) {
    throw ValidationError("feature_importance: length mismatch");
  }
  if (y_test.empty()) throw ValidationError("feature_importance: empty test set");
  const Matrix xs = probe.standardizer.apply(x_test);
  Matrix base = xs * probe.weights.transpose();
  base.rowwise() += probe.bias.transpose();
  const std::int64_t n = static_cast<std::int64_t>(y_test.size());
  const std::int64_t base_correct = count_correct(base, y_test);

  const auto dims = static_cast<std::size_t>(xs.cols());
  std::vector<std::int64_t> lost(dims, 0);
  parallel_for(dims, [&](std::size_t d) {
    const auto col = static_cast<Eigen::Index>(d);
    Matrix ablated = base - xs.col(col) * probe.weights.col(col).transpose();
    lost[d] = base_correct - count_correct(ablated, y_test);
  });

  FeatureImportance out;
  out.baseline_accuracy = static_cast<double>(base_correct) / static_cast<double>(n);
  out.drops.reserve(dims);
  // Bin on exact counts: bin = floor(100 * lost / n / width) with width 0.5.
  std::map<std::int64_t, std::int64_t> bins;
  for (std::int64_t l : lost) {
    out.drops.push_back(static_cast<double>(l) / static_cast<double>(n));
    ++bins[floor_div(200 * l, n)];
  }
  for (std::int64_t b = bins.begin()->first; b <= bins.rbegin()->first; ++b) {
    auto it = bins.find(b);
    const double lower = static_cast<double>(b) * kAblationBinWidthPp;
    out.histogram.push_back(
        {lower, lower + kAblationBinWidthPp, it == bins.end() ? 0 : it->second});
  }
  return out;
}

}  // namespace embdiag
