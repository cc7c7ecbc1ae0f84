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


// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1 for ctest).

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "embdiag/cli.h"
#include "embdiag/clustering.h"
#include "embdiag/io_formats.h"
#include "embdiag/numerics.h"
#include "embdiag/parallel.h"
#include "embdiag/probe.h"
#include "embdiag/retrieval.h"
#include "embdiag/rng.h"
#include "embdiag/synth_eval.h"
#include "oracles.h"

namespace embdiag {
namespace {

constexpr double kNmiOracleTol = 1e-9;
constexpr double kNmiHandValue = 0.3437;
constexpr double kNmiHandTol = 1e-4;
constexpr double kAucOracleTol = 1e-12;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradRelFloor = 1e-6;  // denominator floor of the relative error
constexpr double kFiniteDiffStep = 1e-5;
constexpr double kInitialLossTol = 1e-12;
constexpr double kPcaTol = 1e-8;
constexpr double kNullNmiMax = 0.05;
constexpr double kNullAucBand = 0.05;

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

Matrix random_matrix(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
  }
  return x;
}

testing::DenseMatrix dense(const Matrix& m) {
  testing::DenseMatrix out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

Outcome nmi_oracle() {
  Rng rng(derive_seed(1, "accept-nmi"));
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.uniform_index(50);
    const std::size_t ky = 1 + rng.uniform_index(6);
    const std::size_t kc = 1 + rng.uniform_index(6);
    std::vector<int> y(n);
    std::vector<int> c(n);
    for (auto& e : y) e = static_cast<int>(rng.uniform_index(ky));
    for (auto& e : c) e = static_cast<int>(rng.uniform_index(kc));
    worst = std::max(worst, std::abs(nmi(y, c) - testing::oracle_nmi(y, c)));
  }
  const double hand = nmi(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 0, 1});
  return {worst <= kNmiOracleTol && std::abs(hand - kNmiHandValue) <= kNmiHandTol,
          fmt::format("max |nmi - oracle| = {:.3g} (tol {:g}); hand case = {:.6f}", worst,
                      kNmiOracleTol, hand)};
}

Outcome auc_oracle() {
  Rng rng(derive_seed(1, "accept-auc"));
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> pos(1 + rng.uniform_index(50));
    std::vector<double> neg(1 + rng.uniform_index(50));
    // Coarse grid for half the instances so ties are common.
    const double grid = t % 2 == 0 ? 8.0 : 1e6;
    for (auto& v : pos) v = std::round(rng.normal() * grid) / grid;
    for (auto& v : neg) v = std::round(rng.normal() * grid) / grid;
    worst = std::max(worst, std::abs(roc_auc_from_scores(pos, neg) - testing::oracle_auc(pos, neg)));
  }
  return {worst <= kAucOracleTol,
          fmt::format("max |auc - oracle| = {:.3g} (tol {:g})", worst, kAucOracleTol)};
}

Outcome probe_gradient() {
  Rng rng(derive_seed(1, "accept-grad"));
  double worst = 0.0;
  double worst_initial = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int c = 2 + static_cast<int>(rng.uniform_index(4));
    const int d = 2 + static_cast<int>(rng.uniform_index(7));
    const int n = c + 2 + static_cast<int>(rng.uniform_index(25));
    const Matrix x = random_matrix(rng, n, d);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) y[i] = i < c ? i : static_cast<int>(rng.uniform_index(c));
    const Matrix w = random_matrix(rng, c, d);
    const Matrix bm = random_matrix(rng, c, 1);
    const Vector b = bm.col(0);
    const double l2 = rng.uniform01();

    const auto obj = probe_objective(x, y, w, b, l2);
    const auto loss = [&](const Matrix& ww, const Vector& bb) {
      return testing::oracle_probe_loss(dense(x), y, dense(ww),
                                        std::vector<double>(bb.data(), bb.data() + bb.size()), l2);
    };
    const auto rel = [](double a, double f) {
      return std::abs(a - f) / std::max({std::abs(a), std::abs(f), kGradRelFloor});
    };
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < d; ++j) {
        Matrix wp = w;
        Matrix wm = w;
        wp(i, j) += kFiniteDiffStep;
        wm(i, j) -= kFiniteDiffStep;
        const double fd = (loss(wp, b) - loss(wm, b)) / (2.0 * kFiniteDiffStep);
        worst = std::max(worst, rel(obj.grad_weights(i, j), fd));
      }
      Vector bp = b;
      Vector bn = b;
      bp(i) += kFiniteDiffStep;
      bn(i) -= kFiniteDiffStep;
      const double fd = (loss(w, bp) - loss(w, bn)) / (2.0 * kFiniteDiffStep);
      worst = std::max(worst, rel(obj.grad_bias(i), fd));
    }

    std::vector<std::string> names;
    for (int k = 0; k < c; ++k) names.push_back("c" + std::to_string(k));
    ProbeConfig cfg;
    cfg.max_iters = 0;
    const auto probe = train_probe(x, y, names, cfg);
    worst_initial = std::max(worst_initial,
                             std::abs(probe.train_loss_trace.front() - std::log(double(c))));
  }
  return {worst < kGradRelTol && worst_initial <= kInitialLossTol,
          fmt::format("max relative gradient error = {:.3g} (tol {:g}); max |L0 - ln C| = {:.3g}",
                      worst, kGradRelTol, worst_initial)};
}

Outcome lloyd() {
  Rng rng(derive_seed(1, "accept-lloyd"));
  int violations = 0;
  int nondeterministic = 0;
  for (int t = 0; t < 100; ++t) {
    const auto n = static_cast<Eigen::Index>(5 + rng.uniform_index(100));
    const auto d = static_cast<Eigen::Index>(1 + rng.uniform_index(8));
    const Matrix x = random_matrix(rng, n, d);
    const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(8, n));
    const auto a = kmeans(x, k, t);
    for (std::size_t i = 1; i < a.inertia_trace.size(); ++i) {
      if (a.inertia_trace[i] > a.inertia_trace[i - 1]) ++violations;
    }
    if (kmeans(x, k, t).assignments != a.assignments) ++nondeterministic;
  }
  return {violations == 0 && nondeterministic == 0,
          fmt::format("{} trace increases, {} nondeterministic instances", violations,
                      nondeterministic)};
}

Outcome pca() {
  Rng rng(derive_seed(1, "accept-pca"));
  double worst_ortho = 0.0;
  double worst_var = 0.0;
  int misordered = 0;
  for (int t = 0; t < 20; ++t) {
    const auto n = static_cast<Eigen::Index>(4 + rng.uniform_index(30));
    const auto d = static_cast<Eigen::Index>(2 + rng.uniform_index(12));
    const Matrix x = random_matrix(rng, n, d);
    const std::size_t k = 1 + rng.uniform_index(std::min<std::size_t>(n - 1, d));
    const PcaModel m = pca_fit(x, k);
    const Matrix gram = m.components * m.components.transpose();
    worst_ortho = std::max(
        worst_ortho, (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff());
    const auto eig = testing::jacobi_eigen(testing::covariance(dense(x)));
    const Matrix proj = m.transform(x);
    for (std::size_t c = 0; c < k; ++c) {
      const double var = proj.col(c).squaredNorm() / static_cast<double>(n - 1);
      worst_var = std::max(worst_var, std::abs(var - eig.values[c]));
      worst_var = std::max(worst_var, std::abs(m.explained_variance(c) - eig.values[c]));
      if (c > 0 && m.explained_variance(c) > m.explained_variance(c - 1)) ++misordered;
    }
  }
  return {worst_ortho <= kPcaTol && worst_var <= kPcaTol && misordered == 0,
          fmt::format("orthonormality error {:.3g}, variance error {:.3g} (tol {:g}), {} misordered",
                      worst_ortho, worst_var, kPcaTol, misordered)};
}

Outcome end_to_end() {
  const std::size_t saved = num_threads();
  set_num_threads(1);
  SynthConfig cfg;  // C=4, R=8, M=25, D=256, k=12, scales 1/4/1, seed 7
  const SynthMetrics m = measure_synth(cfg);
  set_num_threads(saved);

  struct Check {
    const char* what;
    bool ok;
    double value;
  };
  const Check checks[] = {
      {"class NMI < 0.30", m.class_nmi < 0.30, m.class_nmi},
      {"recording NMI > 0.60", m.recording_nmi > 0.60, m.recording_nmi},
      {"class AUC < 0.75", m.class_auc < 0.75, m.class_auc},
      {"recording AUC > 0.85", m.recording_auc > 0.85, m.recording_auc},
      {"probe accuracy > 0.85", m.probe_accuracy > 0.85, m.probe_accuracy},
      {"shuffle accuracy < 0.40", m.shuffle_mean_accuracy < 0.40, m.shuffle_mean_accuracy},
      {"logit NMI > class NMI + 0.10", m.logit_nmi > m.class_nmi + 0.10, m.logit_nmi},
      {">= 90% of dims >= k drop < 1pp", m.small_drop_fraction_outside >= 0.90,
       m.small_drop_fraction_outside},
  };
  Outcome out;
  for (const auto& c : checks) {
    out.pass = out.pass && c.ok;
    out.detail += fmt::format("\n    [{}] {} (got {:.4f})", c.ok ? "ok" : "miss", c.what, c.value);
  }
  return out;
}

Outcome null_calibration() {
  Rng rng(derive_seed(1, "accept-null"));
  const int n = 200;
  const int d = 16;
  std::vector<float> values(n * d);
  for (auto& v : values) v = static_cast<float>(rng.normal());
  std::vector<std::string> ids;
  std::vector<ClipMetadata> meta;
  for (int i = 0; i < n; ++i) {
    ids.push_back("n" + std::to_string(i));
    meta.push_back({ids.back(), "r" + std::to_string(i), "l" + std::to_string(rng.uniform_index(4)),
                    Split::kTest, "null", 0.0, 1.0, ""});
  }
  const LabeledDataset ds(EmbeddingTable("null", d, values, ids), meta);
  const double nmi_value = cluster_eval(ds, LabelField::kClass, RowSelection::kTest, 1).nmi;
  const double auc = retrieval_eval(ds, LabelField::kClass).mean_auc;
  return {nmi_value < kNullNmiMax && std::abs(auc - 0.5) <= kNullAucBand,
          fmt::format("class NMI = {:.4f} (< {:g}), mean AUC = {:.4f} (0.5 +/- {:g})", nmi_value,
                      kNullNmiMax, auc, kNullAucBand)};
}

Outcome diagnose_determinism() {
  testing::TempDir dir;
  std::ostringstream out;
  std::ostringstream err;
  const std::string d = dir.path().string();
  auto cli = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "embdiag");
    return run_cli(args, out, err);
  };
  if (cli({"synth", "--seed", "7", "-o", d}) != 0) return {false, "synth failed: " + err.str()};
  const std::string emb = (dir / "synth.emb").string();
  const std::string meta = (dir / "meta.csv").string();
  const int a = cli({"diagnose", "-e", emb, "-m", meta, "--seed", "7", "--threads", "1", "-o",
                     (dir / "a.json").string()});
  const int b = cli({"diagnose", "-e", emb, "-m", meta, "--seed", "7", "-o",
                     (dir / "b.json").string()});
  if (a != 0 || b != 0) return {false, "diagnose failed: " + err.str()};
  const std::string ja = read_file(dir / "a.json");
  const std::string jb = read_file(dir / "b.json");
  return {ja == jb, fmt::format("{} and {} bytes, {}", ja.size(), jb.size(),
                                ja == jb ? "identical" : "different")};
}

Outcome report_fixture() {
  EvalReport deepship;
  deepship.model_id = "BEATS";
  deepship.dataset = "DeepShip";
  deepship.probe_accuracy = 0.654;
  deepship.nmi_class = 0.13;
  deepship.mean_roc_auc = 0.61;
  EvalReport shipsear = deepship;
  shipsear.dataset = "ShipsEar";
  shipsear.probe_accuracy = 0.740;
  shipsear.nmi_class = 0.22;
  shipsear.mean_roc_auc = 0.72;
  const EvalReport reports[] = {deepship, shipsear};
  const std::string md = render_markdown(reports);
  const std::string header =
      "| Model | Accuracy (DeepShip) | Accuracy (ShipsEar) | NMI (DeepShip) | NMI (ShipsEar) | "
      "ROC-AUC (DeepShip) | ROC-AUC (ShipsEar) |";
  const std::string row = "| BEATS | 65.4% | 74.0% | 0.13 | 0.22 | 0.61 | 0.72 |";
  const bool ok = md.find(header) != std::string::npos && md.find(row) != std::string::npos;
  return {ok, ok ? row : "rendered:\n" + md};
}

}  // namespace
}  // namespace embdiag

int main() {
  using embdiag::Criterion;
  const std::vector<Criterion> criteria{
      {"NMI oracle equivalence", 5.0, embdiag::nmi_oracle},
      {"ROC-AUC oracle equivalence", 5.0, embdiag::auc_oracle},
      {"probe gradient check", 10.0, embdiag::probe_gradient},
      {"Lloyd monotonicity + determinism", 10.0, embdiag::lloyd},
      {"PCA orthonormality and variances", 5.0, embdiag::pca},
      {"end-to-end synthetic reproduction", 60.0, embdiag::end_to_end},
      {"null calibration", 10.0, embdiag::null_calibration},
      {"diagnose determinism", 120.0, embdiag::diagnose_determinism},
      {"report fidelity fixture", 5.0, embdiag::report_fixture},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    embdiag::Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = outcome.pass && in_time;
    if (!pass) ++failed;
    std::cout << fmt::format("{} {} [{:.2f}s / {:.0f}s{}]: {}", pass ? "PASS" : "FAIL", c.name,
                             secs, c.budget_s, in_time ? "" : " over budget", outcome.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failed, criteria.size())
            << std::endl;
  return failed == 0 ? 0 : 1;
}
