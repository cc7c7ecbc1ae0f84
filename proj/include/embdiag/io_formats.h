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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "embdiag/data_model.h"
#include "embdiag/probe.h"

namespace embdiag {

// Writes `bytes` to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// True when `id` is non-empty and uses only [A-Za-z0-9_.-].
bool is_valid_id(std::string_view id);

// --- Embedding container (.emb) -------------------------------------------
//
//   line 1: {"version":1,"model":"...","dim":D,"count":N,"dtype":"f32le"}\n
//   N * D little-endian IEEE-754 binary32 values, row-major
//   N clip ids, each terminated by '\n'
//
// Nothing may follow the last id.

std::string encode_embeddings(const EmbeddingTable& table);
EmbeddingTable decode_embeddings(std::string_view bytes);
std::size_t write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

// --- Clip metadata CSV -----------------------------------------------------
//
// Header names the columns clip_id,recording_id,label,split,dataset,start_s,
// duration_s in any order; an optional recorded_at column feeds the
// time-wise split and other columns are ignored. No quoting.

struct MetadataCsvOptions {
  // When false a missing split column is accepted and every clip reads as
  // train; used by the split command before assignments exist.
  bool require_split = true;
};

std::vector<ClipMetadata> parse_metadata_csv(std::string_view text,
                                             const MetadataCsvOptions& options = {});
std::vector<ClipMetadata> read_metadata_csv(const std::filesystem::path& path,
                                            const MetadataCsvOptions& options = {});
std::string format_metadata_csv(std::span<const ClipMetadata> meta);
void write_metadata_csv(std::span<const ClipMetadata> meta, const std::filesystem::path& path);

// --- WAV -------------------------------------------------------------------

struct WavAudio {
  double sample_rate = 0.0;
  std::vector<double> samples;  // channel 0, nominally in [-1, 1]
};

enum class WavEncoding { kPcm16, kFloat32 };

// Accepts PCM 16-bit and IEEE float 32-bit (plain or WAVE_FORMAT_EXTENSIBLE)
// with any channel count; keeps channel 0 and scales PCM by 1/32768.
WavAudio decode_wav(std::string_view bytes);
WavAudio read_wav(const std::filesystem::path& path);
// Mono encoder; `channels` > 1 duplicates the signal into every channel.
std::string encode_wav(std::span<const double> samples, int sample_rate, WavEncoding encoding,
                       int channels = 1);

// --- Reports ----------------------------------------------------------------

enum class ReportFormat { kJson, kMarkdown };

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
std::string format_report_json(const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

// Accuracy as a percentage with one decimal, NMI and ROC-AUC with two.
std::string format_percent(double fraction);
std::string format_score(double value);

// One row per model, metric columns per dataset, followed by the recording
// confound table.
std::string render_markdown(std::span<const EvalReport> reports);

// Throws ValidationError when validate_report finds a problem.
void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format);

// --- Probe parameters -------------------------------------------------------

nlohmann::ordered_json probe_to_json(const LinearProbe& probe);
LinearProbe probe_from_json(const nlohmann::json& j);

}  // namespace embdiag
