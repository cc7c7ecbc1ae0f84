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


#include "embdiag/cli.h"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "embdiag/baseline_features.h"
#include "embdiag/clustering.h"
#include "embdiag/diagnostics.h"
#include "embdiag/error.h"
#include "embdiag/io_formats.h"
#include "embdiag/parallel.h"
#include "embdiag/probe.h"
#include "embdiag/retrieval.h"
#include "embdiag/rng.h"
#include "embdiag/splits.h"
#include "embdiag/synth.h"

namespace embdiag {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const std::vector<std::string> kLabelFields{"class", "recording_id"};
const std::vector<std::string> kRowSelections{"test", "all"};
const std::vector<std::string> kPolicies{"timewise", "recordingwise"};
const std::vector<std::string> kFormats{"json", "markdown"};

std::string cluster_seed_tag(LabelField field) {
  return field == LabelField::kClass ? "cluster-class" : "cluster-record";
}

struct DatasetArgs {
  std::string embeddings;
  std::string metadata;

  void add(CLI::App* cmd) {
    cmd->add_option("-e,--embeddings", embeddings, "embedding file (.emb)")->required();
    cmd->add_option("-m,--metadata", metadata, "clip metadata CSV")->required();
  }

  LabeledDataset load() const {
    LabeledDataset ds(read_embeddings(embeddings), read_metadata_csv(metadata));
    const auto problems = validate_dataset(ds);
    if (!problems.empty()) {
      std::string msg = fmt::format("{} + {}: {} violation(s)", embeddings, metadata,
                                    problems.size());
      for (const auto& p : problems) msg += "\n  " + p;
      throw ValidationError(msg);
    }
    return ds;
  }
};

void add_kmeans_options(CLI::App* cmd, ClusterEvalOptions& o) {
  cmd->add_option("--restarts", o.kmeans.restarts, "k-means++ restarts")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", o.kmeans.max_iter, "Lloyd iterations per restart")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--kmeans-tol", o.kmeans.tol, "centroid movement tolerance");
  cmd->add_flag("--standardize", o.standardize, "z-score rows before clustering (off by default)");
}

void add_probe_options(CLI::App* cmd, ProbeConfig& p) {
  cmd->add_option("--l2", p.l2_lambda, "L2 penalty on probe weights")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iters", p.max_iters, "gradient descent iterations");
  cmd->add_option("--grad-tol", p.grad_tol, "stop when the gradient max-norm falls below this")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--learning-rate", p.learning_rate, "initial backtracking step")
      ->check(CLI::PositiveNumber);
}

// Writes `text` to `path` atomically, or to `out` when no path was given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

std::string json_text(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding diagnostics for frozen audio representations", "embdiag"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  std::size_t threads = default_num_threads();
  app.add_option("--threads", threads, "worker threads (default from EMBDIAG_THREADS)")
      ->check(CLI::PositiveNumber);

  // featurize
  auto* featurize = app.add_subcommand("featurize", "log-mel baseline embeddings from WAV clips");
  std::string audio_dir;
  std::string feat_meta;
  std::string feat_out;
  MelConfig mel;
  featurize->add_option("--audio-dir", audio_dir, "directory holding <clip_id>.wav")->required();
  featurize->add_option("-m,--metadata", feat_meta, "clip metadata CSV")->required();
  featurize->add_option("-o,--output", feat_out, "output .emb file")->required();
  featurize->add_option("--n-mels", mel.n_mels, "mel bands");
  featurize->add_option("--n-fft", mel.n_fft, "FFT length in samples");
  featurize->add_option("--hop", mel.hop, "hop length in samples");
  featurize->add_option("--f-min", mel.f_min, "lowest filter edge in Hz");
  featurize->add_option("--f-max", mel.f_max, "highest filter edge in Hz, 0 for Nyquist");

  // split
  auto* split = app.add_subcommand("split", "assign recordings to train and test");
  std::string split_meta;
  std::string split_out;
  SplitSpec split_spec;
  std::string split_policy{to_string(split_spec.policy)};
  split->add_option("-m,--metadata", split_meta, "clip metadata CSV")->required();
  split->add_option("-o,--output", split_out, "output metadata CSV")->required();
  split->add_option("--policy", split_policy, "timewise or recordingwise")
      ->check(CLI::IsMember(kPolicies));
  split->add_option("--test-fraction", split_spec.test_fraction, "fraction of recordings in test")
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", split_spec.seed, "shuffle seed for the recordingwise policy");

  // cluster-eval
  auto* cluster = app.add_subcommand("cluster-eval", "k-means NMI against a label field");
  DatasetArgs cluster_data;
  cluster_data.add(cluster);
  std::string cluster_field = "class";
  std::string cluster_rows = "test";
  std::uint64_t cluster_seed = 0;
  ClusterEvalOptions cluster_opts;
  std::string cluster_out;
  cluster->add_option("--label-field", cluster_field, "class or recording_id")
      ->check(CLI::IsMember(kLabelFields));
  cluster->add_option("--split", cluster_rows, "rows to cluster: test or all")
      ->check(CLI::IsMember(kRowSelections));
  cluster->add_option("--seed", cluster_seed, "random seed");
  add_kmeans_options(cluster, cluster_opts);
  cluster->add_option("-o,--output", cluster_out, "JSON result file (stdout if omitted)");

  // retrieval
  auto* retrieval = app.add_subcommand("retrieval", "cosine retrieval ROC-AUC on the test split");
  DatasetArgs retrieval_data;
  retrieval_data.add(retrieval);
  std::string retrieval_field = "class";
  std::string retrieval_out;
  retrieval->add_option("--label-field", retrieval_field, "class or recording_id")
      ->check(CLI::IsMember(kLabelFields));
  retrieval->add_option("-o,--output", retrieval_out, "per-query CSV file");

  // probe
  auto* probe_cmd = app.add_subcommand("probe", "train a linear probe and score the test split");
  DatasetArgs probe_data_args;
  probe_data_args.add(probe_cmd);
  ProbeConfig probe_cfg;
  std::string probe_out;
  add_probe_options(probe_cmd, probe_cfg);
  probe_cmd->add_option("--seed", probe_cfg.seed, "random seed (recorded in the output)");
  probe_cmd->add_option("-o,--output", probe_out, "probe parameter JSON");

  // diagnose
  auto* diagnose = app.add_subcommand("diagnose", "full evaluation report with confound controls");
  DatasetArgs diag_data;
  diag_data.add(diagnose);
  ProbeConfig diag_probe;
  DiagnosticsConfig diag_cfg;
  std::string diag_out;
  std::string diag_format = "json";
  std::string diag_rows = "test";
  add_probe_options(diagnose, diag_probe);
  add_kmeans_options(diagnose, diag_cfg.cluster);
  diagnose->add_option("--seed", diag_cfg.seed, "random seed");
  diagnose->add_option("--shuffle-repeats", diag_cfg.shuffle_repeats, "label shuffle repeats")
      ->check(CLI::PositiveNumber);
  diagnose->add_option("--pca-components", diag_cfg.pca_components,
                       "PCA control dimensionality, 0 for the class count");
  diagnose->add_option("--cluster-split", diag_rows, "rows to cluster: test or all")
      ->check(CLI::IsMember(kRowSelections));
  diagnose->add_option("--format", diag_format, "json or markdown")
      ->check(CLI::IsMember(kFormats));
  diagnose->add_option("-o,--output", diag_out, "report file (stdout if omitted)");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic embedding dataset");
  SynthConfig synth_cfg;
  std::string synth_dir;
  synth->add_option("--classes", synth_cfg.n_classes, "number of classes");
  synth->add_option("--recordings-per-class", synth_cfg.recordings_per_class,
                    "recordings per class");
  synth->add_option("--clips-per-recording", synth_cfg.clips_per_recording,
                    "clips per recording");
  synth->add_option("--dim", synth_cfg.dim, "embedding dimension");
  synth->add_option("--class-dims", synth_cfg.class_dims, "leading dims carrying class signal");
  synth->add_option("--class-scale", synth_cfg.class_scale, "class mean std per coordinate");
  synth->add_option("--recording-scale", synth_cfg.recording_scale,
                    "recording mean std per coordinate");
  synth->add_option("--noise-scale", synth_cfg.noise_scale, "clip noise std per coordinate");
  synth->add_option("--test-fraction", synth_cfg.test_fraction, "fraction of recordings in test");
  synth->add_option("--seed", synth_cfg.seed, "random seed");
  synth->add_option("-o,--output", synth_dir, "output directory")->required();

  // compare
  auto* compare = app.add_subcommand("compare", "merge report JSON files into markdown tables");
  std::vector<std::string> compare_in;
  std::string compare_out;
  compare->add_option("reports", compare_in, "report JSON files")->required();
  compare->add_option("-o,--output", compare_out, "markdown file (stdout if omitted)");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  set_num_threads(threads);

  try {
    if (*featurize) {
      auto meta = read_metadata_csv(feat_meta, {.require_split = false});
      if (meta.empty()) throw ValidationError(fmt::format("{}: no clips listed", feat_meta));
      std::vector<std::vector<float>> rows(meta.size());
      parallel_for(meta.size(), [&](std::size_t i) {
        const fs::path wav_path = fs::path(audio_dir) / (meta[i].clip_id + ".wav");
        const WavAudio audio = read_wav(wav_path);
        std::vector<double> v;
        try {
          v = baseline_embedding(audio.samples, audio.sample_rate, mel);
        } catch (const ValidationError& e) {
          throw ValidationError(fmt::format("{}: {}", wav_path.string(), e.what()));
        }
        rows[i].assign(v.begin(), v.end());
      });
      std::vector<std::string> ids;
      for (const auto& m : meta) ids.push_back(m.clip_id);
      const auto table = EmbeddingTable::from_rows("baseline-logmel", mel.n_mels, rows, ids);
      write_embeddings(table, feat_out);
      out << fmt::format("wrote {} embeddings of dim {} to {}\n", table.rows(), table.dim(),
                         feat_out);
    } else if (*split) {
      split_spec.policy = *parse_split_policy(split_policy);
      const auto meta = read_metadata_csv(split_meta, {.require_split = false});
      const SplitAssignment assignment = make_split(meta, split_spec);
      for (const auto& w : assignment.warnings) err << "warning: " << w << "\n";
      write_metadata_csv(apply_split(meta, assignment), split_out);
      out << fmt::format("{} recordings: {} train, {} test\n", assignment.by_recording.size(),
                         assignment.count(Split::kTrain), assignment.count(Split::kTest));
    } else if (*cluster) {
      const LabeledDataset ds = cluster_data.load();
      const LabelField field = *parse_label_field(cluster_field);
      const ClusterEval r = cluster_eval(ds, field, *parse_row_selection(cluster_rows),
                                         derive_seed(cluster_seed, cluster_seed_tag(field)),
                                         cluster_opts);
      ordered_json j;
      j["label_field"] = cluster_field;
      j["split"] = cluster_rows;
      j["seed"] = cluster_seed;
      j["k"] = r.k;
      j["n_rows"] = r.n_rows;
      j["nmi"] = r.nmi;
      j["inertia"] = r.kmeans.inertia;
      j["iterations"] = r.kmeans.iterations;
      emit(cluster_out, json_text(j), out);
    } else if (*retrieval) {
      const LabeledDataset ds = retrieval_data.load();
      const RetrievalResult r = retrieval_eval(ds, *parse_label_field(retrieval_field));
      if (!retrieval_out.empty()) {
        std::string csv = "clip_id,auc,skipped\n";
        for (const auto& q : r.per_query_auc) csv += fmt::format("{},{:.17g},\n", q.clip_id, q.auc);
        for (const auto& s : r.skipped_queries) csv += fmt::format("{},,{}\n", s.clip_id, s.reason);
        write_file_atomic(retrieval_out, csv);
      }
      ordered_json j;
      j["label_field"] = retrieval_field;
      j["mean_auc"] = r.mean_auc;
      j["n_scored"] = r.per_query_auc.size();
      j["n_skipped"] = r.skipped_queries.size();
      out << json_text(j);
    } else if (*probe_cmd) {
      const LabeledDataset ds = probe_data_args.load();
      const ProbeData data = probe_data(ds);
      if (data.y_test.empty()) throw ValidationError("probe: test split is empty");
      const LinearProbe probe =
          train_probe(data.x_train, data.y_train, data.classes.names(), probe_cfg);
      if (!probe_out.empty()) write_file_atomic(probe_out, json_text(probe_to_json(probe)));
      ordered_json j;
      j["accuracy"] = accuracy(probe, data.x_test, data.y_test);
      j["per_class_accuracy"] = ordered_json::array();
      for (const auto& c : per_class_accuracy(probe, data.x_test, data.y_test)) {
        j["per_class_accuracy"].push_back(
            {{"label", c.label}, {"accuracy", c.accuracy}, {"support", c.support}});
      }
      j["iterations"] = probe.iterations;
      j["converged"] = probe.converged;
      j["final_loss"] = probe.train_loss_trace.empty() ? 0.0 : probe.train_loss_trace.back();
      out << json_text(j);
    } else if (*diagnose) {
      const LabeledDataset ds = diag_data.load();
      diag_probe.seed = diag_cfg.seed;
      diag_cfg.cluster_split = *parse_row_selection(diag_rows);
      const ReportFormat format =
          diag_format == "json" ? ReportFormat::kJson : ReportFormat::kMarkdown;
      const EvalReport report = run_full_report(ds, diag_probe, diag_cfg);
      if (diag_out.empty()) {
        out << (format == ReportFormat::kJson
                    ? format_report_json(report)
                    : render_markdown(std::span<const EvalReport>(&report, 1)));
      } else {
        write_report(report, diag_out, format);
      }
    } else if (*synth) {
      const SynthDataset generated = generate(synth_cfg);
      const fs::path dir(synth_dir);
      std::error_code ec;
      fs::create_directories(dir, ec);
      if (ec) throw IoError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
      write_embeddings(generated.dataset.table(), dir / "synth.emb");
      write_metadata_csv(generated.dataset.meta(), dir / "meta.csv");
      write_file_atomic(dir / "sidecar.json",
                        json_text(synth_sidecar(synth_cfg, generated.truth)));
      out << fmt::format("wrote {} clips to {}\n", generated.dataset.table().rows(),
                         dir.string());
    } else if (*compare) {
      std::vector<EvalReport> reports;
      for (const auto& path : compare_in) reports.push_back(read_report(path));
      emit(compare_out, render_markdown(reports), out);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace embdiag
