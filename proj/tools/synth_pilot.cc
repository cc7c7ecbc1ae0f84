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


// Runs the reference synthetic configuration over a range of seeds and
// prints every acceptance metric per seed plus mean, min and max, so the
// end-to-end thresholds can be compared with what the generator produces.

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "embdiag/parallel.h"
#include "embdiag/synth_eval.h"

namespace {

struct Column {
  const char* name;
  double embdiag::SynthMetrics::*field;
};

constexpr Column kColumns[] = {
    {"class_nmi", &embdiag::SynthMetrics::class_nmi},
    {"rec_nmi", &embdiag::SynthMetrics::recording_nmi},
    {"class_auc", &embdiag::SynthMetrics::class_auc},
    {"rec_auc", &embdiag::SynthMetrics::recording_auc},
    {"probe_acc", &embdiag::SynthMetrics::probe_accuracy},
    {"shuffle", &embdiag::SynthMetrics::shuffle_mean_accuracy},
    {"logit_nmi", &embdiag::SynthMetrics::logit_nmi},
    {"small_drop", &embdiag::SynthMetrics::small_drop_fraction_outside},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Seed sweep of the reference synthetic configuration", "synth_pilot"};
  app.option_defaults()->always_capture_default();
  std::uint64_t first_seed = 1;
  std::size_t n_seeds = 20;
  std::string split = "test";
  std::size_t threads = embdiag::default_num_threads();
  embdiag::SynthConfig cfg;
  app.add_option("--first-seed", first_seed, "first seed of the sweep");
  app.add_option("--seeds", n_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  app.add_option("--cluster-split", split, "rows to cluster: test or all")
      ->check(CLI::IsMember({"test", "all"}));
  app.add_option("--class-scale", cfg.class_scale, "class mean std per coordinate");
  app.add_option("--recording-scale", cfg.recording_scale, "recording mean std per coordinate");
  app.add_option("--noise-scale", cfg.noise_scale, "clip noise std per coordinate");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  embdiag::set_num_threads(threads);

  embdiag::DiagnosticsConfig diag;
  diag.cluster_split = *embdiag::parse_row_selection(split);

  std::string header = fmt::format("{:>6}", "seed");
  for (const auto& c : kColumns) header += fmt::format(" {:>10}", c.name);
  std::cout << header << "\n";

  std::vector<embdiag::SynthMetrics> runs;
  for (std::size_t i = 0; i < n_seeds; ++i) {
    cfg.seed = first_seed + i;
    runs.push_back(embdiag::measure_synth(cfg, diag));
    std::string line = fmt::format("{:>6}", cfg.seed);
    for (const auto& c : kColumns) line += fmt::format(" {:>10.4f}", runs.back().*c.field);
    std::cout << line << std::endl;
  }

  for (const char* stat : {"mean", "min", "max"}) {
    std::string line = fmt::format("{:>6}", stat);
    for (const auto& c : kColumns) {
      std::vector<double> v;
      for (const auto& r : runs) v.push_back(r.*c.field);
      double x = 0.0;
      if (stat == std::string("mean")) {
        for (double e : v) x += e;
        x /= static_cast<double>(v.size());
      } else if (stat == std::string("min")) {
        x = *std::min_element(v.begin(), v.end());
      } else {
        x = *std::max_element(v.begin(), v.end());
      }
      line += fmt::format(" {:>10.4f}", x);
    }
    std::cout << line << "\n";
  }
  return 0;
}
