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


#include "embdiag/io_formats.h"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include <fmt/format.h>

#include "embdiag/error.h"

namespace embdiag {

using nlohmann::json;
using nlohmann::ordered_json;

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += fmt::format(".tmp.{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError(fmt::format("write to {} failed", tmp.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(fmt::format("cannot move output into place at {}", path.string()));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError(fmt::format("read of {} failed", path.string()));
  return std::move(ss).str();
}

bool is_valid_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) != 0 || c == '_' || c == '.' || c == '-';
  });
}

// --- Embeddings ---------------------------------------------------------------

namespace {

constexpr std::string_view kDtype = "f32le";

void append_f32le(std::string& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((bits >> shift) & 0xffu));
  }
}

float load_f32le(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

}  // namespace

std::string encode_embeddings(const EmbeddingTable& table) {
  if (table.dim() == 0) throw ValidationError("embeddings: dim must be at least 1");
  if (table.rows() == 0) throw ValidationError("embeddings: table has no rows");
  if (table.values().size() != table.rows() * table.dim()) {
    throw ValidationError("embeddings: header/row mismatch");
  }
  std::vector<std::string> sorted_ids = table.clip_ids();
  std::sort(sorted_ids.begin(), sorted_ids.end());
  if (auto dup = std::adjacent_find(sorted_ids.begin(), sorted_ids.end());
      dup != sorted_ids.end()) {
    throw ValidationError(fmt::format("embeddings: duplicate clip_id {}", *dup));
  }
  for (const auto& id : table.clip_ids()) {
    if (!is_valid_id(id)) throw ValidationError(fmt::format("embeddings: invalid clip_id '{}'", id));
  }
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (float v : table.row(r)) {
      if (!std::isfinite(v)) {
        throw ValidationError(
            fmt::format("embeddings: clip {} has a non-finite value", table.clip_ids()[r]));
      }
    }
  }

  ordered_json header;
  header["version"] = 1;
  header["model"] = table.model_id();
  header["dim"] = table.dim();
  header["count"] = table.rows();
  header["dtype"] = kDtype;
  std::string out = header.dump();
  out.push_back('\n');
  out.reserve(out.size() + table.values().size() * 4);
  for (float v : table.values()) append_f32le(out, v);
  for (const auto& id : table.clip_ids()) {
    out += id;
    out.push_back('\n');
  }
  return out;
}

EmbeddingTable decode_embeddings(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) throw ValidationError("embeddings: missing header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, newline));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("embeddings: malformed header: {}", e.what()));
  }
  if (!header.is_object()) throw ValidationError("embeddings: header is not a JSON object");
  for (const auto& [key, value] : header.items()) {
    if (key != "version" && key != "model" && key != "dim" && key != "count" && key != "dtype") {
      throw ValidationError(fmt::format("embeddings: unknown header key '{}'", key));
    }
  }
  auto require = [&](const char* key) -> const json& {
    if (!header.contains(key)) {
      throw ValidationError(fmt::format("embeddings: header lacks '{}'", key));
    }
    return header.at(key);
  };
  const json& version = require("version");
  const json& model = require("model");
  const json& dim_j = require("dim");
  const json& count_j = require("count");
  const json& dtype = require("dtype");
  if (!version.is_number_integer() || version.get<std::int64_t>() != 1) {
    throw ValidationError("embeddings: unsupported version");
  }
  if (!dtype.is_string() || dtype.get<std::string>() != kDtype) {
    throw ValidationError(fmt::format("embeddings: unsupported dtype {}", dtype.dump()));
  }
  if (!model.is_string()) throw ValidationError("embeddings: model must be a string");
  if (!dim_j.is_number_integer() || dim_j.get<std::int64_t>() < 1) {
    throw ValidationError("embeddings: dim must be an integer >= 1");
  }
  if (!count_j.is_number_integer() || count_j.get<std::int64_t>() < 1) {
    throw ValidationError("embeddings: count must be an integer >= 1");
  }
  const auto dim = dim_j.get<std::size_t>();
  const auto count = count_j.get<std::size_t>();

  const std::size_t payload_begin = newline + 1;
  const std::size_t payload_size = dim * count * 4;
  if (bytes.size() - payload_begin < payload_size) {
    throw ValidationError(fmt::format("embeddings: truncated payload ({} of {} bytes)",
                                      bytes.size() - payload_begin, payload_size));
  }
  std::vector<float> values(dim * count);
  const char* p = bytes.data() + payload_begin;
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = load_f32le(p + 4 * i);
    if (!std::isfinite(values[i])) {
      throw ValidationError(
          fmt::format("embeddings: non-finite value at row {} dim {}", i / dim, i % dim));
    }
  }

  std::string_view rest = bytes.substr(payload_begin + payload_size);
  std::vector<std::string> ids;
  ids.reserve(count);
  while (ids.size() < count) {
    const auto end = rest.find('\n');
    if (end == std::string_view::npos) {
      throw ValidationError(fmt::format("embeddings: expected {} clip ids, found {}", count,
                                        ids.size()));
    }
    ids.emplace_back(rest.substr(0, end));
    rest.remove_prefix(end + 1);
  }
  if (!rest.empty()) {
    throw ValidationError(fmt::format("embeddings: {} trailing bytes after clip ids", rest.size()));
  }
  return EmbeddingTable(model.get<std::string>(), dim, std::move(values), std::move(ids));
}

std::size_t write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  const std::string bytes = encode_embeddings(table);
  write_file_atomic(path, bytes);
  return bytes.size();
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  return decode_embeddings(read_file(path));
}

// --- Metadata CSV ---------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_number(std::string_view text, std::string_view column, std::size_t line) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty() ||
      !std::isfinite(value)) {
    throw ValidationError(
        fmt::format("metadata line {}: cannot parse {} '{}' as a number", line, column, text));
  }
  return value;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_valid_label(std::string_view label) {
  return !label.empty() && label.find_first_of(",\"\r\n") == std::string_view::npos;
}

}  // namespace

std::vector<ClipMetadata> parse_metadata_csv(std::string_view text,
                                             const MetadataCsvOptions& options) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ValidationError("metadata: missing header");

  const auto header = split_fields(lines.front());
  std::map<std::string_view, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!column.emplace(header[i], i).second) {
      throw ValidationError(fmt::format("metadata: duplicate column {}", header[i]));
    }
  }
  std::vector<std::string_view> required = {"clip_id", "recording_id", "label", "dataset",
                                            "start_s", "duration_s"};
  if (options.require_split) required.push_back("split");
  for (auto name : required) {
    if (!column.contains(name)) throw ValidationError(fmt::format("metadata: missing column {}", name));
  }
  const bool has_split = column.contains("split");
  const bool has_recorded_at = column.contains("recorded_at");

  std::vector<ClipMetadata> out;
  out.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    const auto fields = split_fields(lines[li]);
    if (fields.size() != header.size()) {
      throw ValidationError(fmt::format("metadata line {}: expected {} fields, found {}", line_no,
                                        header.size(), fields.size()));
    }
    auto field = [&](std::string_view name) { return fields[column.at(name)]; };
    ClipMetadata m;
    m.clip_id = field("clip_id");
    m.recording_id = field("recording_id");
    m.label = field("label");
    m.dataset = field("dataset");
    if (!is_valid_id(m.clip_id)) {
      throw ValidationError(fmt::format("metadata line {}: invalid clip_id '{}'", line_no, m.clip_id));
    }
    if (!is_valid_id(m.recording_id)) {
      throw ValidationError(
          fmt::format("metadata line {}: invalid recording_id '{}'", line_no, m.recording_id));
    }
    if (!is_valid_label(m.label)) {
      throw ValidationError(fmt::format("metadata line {}: invalid label '{}'", line_no, m.label));
    }
    if (has_split) {
      const auto split = parse_split(field("split"));
      if (!split) {
        throw ValidationError(fmt::format(
            "metadata line {}: unknown split '{}' (expected train or test)", line_no, field("split")));
      }
      m.split = *split;
    }
    m.start_s = parse_number(field("start_s"), "start_s", line_no);
    m.duration_s = parse_number(field("duration_s"), "duration_s", line_no);
    if (m.start_s < 0.0) {
      throw ValidationError(fmt::format("metadata line {}: start_s must be >= 0", line_no));
    }
    if (!(m.duration_s > 0.0)) {
      throw ValidationError(fmt::format("metadata line {}: duration_s must be > 0", line_no));
    }
    if (has_recorded_at) m.recorded_at = field("recorded_at");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<ClipMetadata> read_metadata_csv(const std::filesystem::path& path,
                                            const MetadataCsvOptions& options) {
  if (!std::filesystem::exists(path)) {
    throw IoError(fmt::format("metadata file {} does not exist", path.string()));
  }
  return parse_metadata_csv(read_file(path), options);
}

std::string format_metadata_csv(std::span<const ClipMetadata> meta) {
  const bool with_recorded_at = std::any_of(
      meta.begin(), meta.end(), [](const ClipMetadata& m) { return !m.recorded_at.empty(); });
  std::string out = "clip_id,recording_id,label,split,dataset,start_s,duration_s";
  if (with_recorded_at) out += ",recorded_at";
  out += '\n';
  for (const auto& m : meta) {
    if (!is_valid_id(m.clip_id) || !is_valid_id(m.recording_id)) {
      throw ValidationError(fmt::format("metadata: invalid id in clip '{}'", m.clip_id));
    }
    if (!is_valid_label(m.label) || m.dataset.find_first_of(",\r\n") != std::string::npos ||
        m.recorded_at.find_first_of(",\r\n") != std::string::npos) {
      throw ValidationError(fmt::format("metadata: clip {} has a field that needs quoting", m.clip_id));
    }
    out += fmt::format("{},{},{},{},{},{},{}", m.clip_id, m.recording_id, m.label,
                       to_string(m.split), m.dataset, format_number(m.start_s),
                       format_number(m.duration_s));
    if (with_recorded_at) out += "," + m.recorded_at;
    out += '\n';
  }
  return out;
}

void write_metadata_csv(std::span<const ClipMetadata> meta, const std::filesystem::path& path) {
  write_file_atomic(path, format_metadata_csv(meta));
}

// --- WAV --------------------------------------------------------------------

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xfffe;

std::uint32_t le32(std::string_view b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::uint16_t le16(std::string_view b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    (static_cast<unsigned char>(b[at + 1]) << 8));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xffu));
  out.push_back(static_cast<char>((v >> 8) & 0xffu));
}

}  // namespace

WavAudio decode_wav(std::string_view b) {
  if (b.size() < 12 || b.substr(0, 4) != "RIFF" || b.substr(8, 4) != "WAVE") {
    throw ValidationError("wav: not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  std::string_view data;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string_view id = b.substr(pos, 4);
    const std::uint32_t size = le32(b, pos + 4);
    const std::size_t body = pos + 8;
    if (size > b.size() - body) throw ValidationError(fmt::format("wav: chunk '{}' overruns file", id));
    if (id == "fmt ") {
      if (size < 16) throw ValidationError("wav: fmt chunk too short");
      format = le16(b, body);
      channels = le16(b, body + 2);
      rate = le32(b, body + 4);
      block_align = le16(b, body + 12);
      bits = le16(b, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw ValidationError("wav: extensible fmt chunk too short");
        format = le16(b, body + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (id == "data") {
      data = b.substr(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw ValidationError("wav: missing fmt chunk");
  if (!have_data) throw ValidationError("wav: missing data chunk");
  if (channels == 0 || rate == 0) throw ValidationError("wav: zero channels or sample rate");
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw ValidationError(
        fmt::format("wav: unsupported encoding (format {}, {} bits)", format, bits));
  }
  const std::size_t sample_bytes = bits / 8;
  if (block_align != channels * sample_bytes) throw ValidationError("wav: inconsistent block align");
  const std::size_t frames = data.size() / block_align;

  WavAudio out;
  out.sample_rate = static_cast<double>(rate);
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t at = f * block_align;
    if (pcm16) {
      const auto raw = static_cast<std::int16_t>(le16(data, at));
      out.samples[f] = static_cast<double>(raw) / 32768.0;
    } else {
      out.samples[f] = static_cast<double>(std::bit_cast<float>(le32(data, at)));
    }
  }
  return out;
}

WavAudio read_wav(const std::filesystem::path& path) { return decode_wav(read_file(path)); }

std::string encode_wav(std::span<const double> samples, int sample_rate, WavEncoding encoding,
                       int channels) {
  const std::uint16_t bits = encoding == WavEncoding::kPcm16 ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(channels * bits / 8);
  const auto data_size = static_cast<std::uint32_t>(samples.size() * block);
  std::string out;
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, encoding == WavEncoding::kPcm16 ? kFormatPcm : kFormatFloat);
  put16(out, static_cast<std::uint16_t>(channels));
  put32(out, static_cast<std::uint32_t>(sample_rate));
  put32(out, static_cast<std::uint32_t>(sample_rate) * block);
  put16(out, block);
  put16(out, bits);
  out += "data";
  put32(out, data_size);
  for (double s : samples) {
    for (int c = 0; c < channels; ++c) {
      if (encoding == WavEncoding::kPcm16) {
        const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        put32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
      }
    }
  }
  return out;
}

// --- Reports ----------------------------------------------------------------

ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  j["model_id"] = r.model_id;
  j["dataset"] = r.dataset;
  j["seed"] = r.seed;
  j["config_fingerprint"] = r.config_fingerprint;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["n_classes"] = r.n_classes;
  j["probe_accuracy"] = r.probe_accuracy;
  ordered_json per_class = ordered_json::array();
  for (const auto& c : r.per_class_accuracy) {
    per_class.push_back({{"label", c.label}, {"accuracy", c.accuracy}, {"support", c.support}});
  }
  j["per_class_accuracy"] = per_class;
  j["nmi_class"] = r.nmi_class;
  j["mean_roc_auc"] = r.mean_roc_auc;
  j["retrieval_skipped"] = r.retrieval_skipped;

  const Diagnostics& d = r.diagnostics;
  ordered_json diag;
  diag["record_id"] = {{"nmi", d.record_id.nmi},
                       {"mean_roc_auc", d.record_id.mean_roc_auc},
                       {"n_recordings", d.record_id.n_recordings}};
  diag["label_shuffle"] = {{"mean_accuracy", d.label_shuffle.mean_accuracy},
                           {"std_accuracy", d.label_shuffle.std_accuracy},
                           {"per_repeat", d.label_shuffle.per_repeat}};
  diag["nmi_logits"] = d.nmi_logits;
  diag["nmi_pca"] = d.nmi_pca;
  diag["pca_components"] = d.pca_components;
  ordered_json hist = ordered_json::array();
  for (const auto& bin : d.ablation.histogram) {
    hist.push_back({{"lower_pp", bin.lower_pp}, {"upper_pp", bin.upper_pp}, {"count", bin.count}});
  }
  diag["ablation"] = {{"baseline_accuracy", d.ablation.baseline_accuracy},
                      {"bin_width_pp", d.ablation.bin_width_pp},
                      {"histogram", hist},
                      {"drops", d.ablation.drops}};
  j["diagnostics"] = diag;
  return j;
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.model_id = j.at("model_id").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    r.n_train = j.at("n_train").get<std::int64_t>();
    r.n_test = j.at("n_test").get<std::int64_t>();
    r.n_classes = j.at("n_classes").get<std::int64_t>();
    r.probe_accuracy = j.at("probe_accuracy").get<double>();
    for (const auto& c : j.at("per_class_accuracy")) {
      r.per_class_accuracy.push_back({c.at("label").get<std::string>(),
                                      c.at("accuracy").get<double>(),
                                      c.at("support").get<std::int64_t>()});
    }
    r.nmi_class = j.at("nmi_class").get<double>();
    r.mean_roc_auc = j.at("mean_roc_auc").get<double>();
    r.retrieval_skipped = j.at("retrieval_skipped").get<std::int64_t>();

    const json& diag = j.at("diagnostics");
    Diagnostics& d = r.diagnostics;
    const json& rec = diag.at("record_id");
    d.record_id = {rec.at("nmi").get<double>(), rec.at("mean_roc_auc").get<double>(),
                   rec.at("n_recordings").get<std::int64_t>()};
    const json& shuffle = diag.at("label_shuffle");
    d.label_shuffle.mean_accuracy = shuffle.at("mean_accuracy").get<double>();
    d.label_shuffle.std_accuracy = shuffle.at("std_accuracy").get<double>();
    d.label_shuffle.per_repeat = shuffle.at("per_repeat").get<std::vector<double>>();
    d.nmi_logits = diag.at("nmi_logits").get<double>();
    d.nmi_pca = diag.at("nmi_pca").get<double>();
    d.pca_components = diag.at("pca_components").get<std::int64_t>();
    const json& ablation = diag.at("ablation");
    d.ablation.baseline_accuracy = ablation.at("baseline_accuracy").get<double>();
    d.ablation.bin_width_pp = ablation.at("bin_width_pp").get<double>();
    for (const auto& bin : ablation.at("histogram")) {
      d.ablation.histogram.push_back({bin.at("lower_pp").get<double>(),
                                      bin.at("upper_pp").get<double>(),
                                      bin.at("count").get<std::int64_t>()});
    }
    d.ablation.drops = ablation.at("drops").get<std::vector<double>>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("report: {}", e.what()));
  }
}

std::string format_report_json(const EvalReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

EvalReport read_report(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("report {}: {}", path.string(), e.what()));
  }
  return report_from_json(j);
}

std::string format_percent(double fraction) { return fmt::format("{:.1f}%", fraction * 100.0); }
std::string format_score(double value) { return fmt::format("{:.2f}", value); }

std::string render_markdown(std::span<const EvalReport> reports) {
  std::vector<std::string> models, datasets;
  std::map<std::pair<std::string, std::string>, const EvalReport*> cell;
  for (const auto& r : reports) {
    if (std::find(models.begin(), models.end(), r.model_id) == models.end()) models.push_back(r.model_id);
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    cell[{r.model_id, r.dataset}] = &r;
  }

  struct Column {
    std::string title;
    std::string (*render)(const EvalReport&);
  };
  const Column metrics[] = {
      {"Accuracy", [](const EvalReport& r) { return format_percent(r.probe_accuracy); }},
      {"NMI", [](const EvalReport& r) { return format_score(r.nmi_class); }},
      {"ROC-AUC", [](const EvalReport& r) { return format_score(r.mean_roc_auc); }},
  };

  std::string out = "| Model |";
  std::string rule = "|---|";
  for (const auto& metric : metrics) {
    for (const auto& ds : datasets) {
      out += fmt::format(" {} ({}) |", metric.title, ds);
      rule += "---|";
    }
  }
  out += "\n" + rule + "\n";
  for (const auto& model : models) {
    out += "| " + model + " |";
    for (const auto& metric : metrics) {
      for (const auto& ds : datasets) {
        auto it = cell.find({model, ds});
        out += " " + (it == cell.end() ? std::string("-") : metric.render(*it->second)) + " |";
      }
    }
    out += "\n";
  }

  out +=
      "\n| Model | Dataset | Record-ID NMI | Record-ID ROC-AUC | Shuffled-label accuracy | "
      "Logit NMI | PCA NMI |\n|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    const Diagnostics& d = r.diagnostics;
    out += fmt::format("| {} | {} | {} | {} | {} ± {} | {} | {} |\n", r.model_id, r.dataset,
                       format_score(d.record_id.nmi), format_score(d.record_id.mean_roc_auc),
                       format_percent(d.label_shuffle.mean_accuracy),
                       format_percent(d.label_shuffle.std_accuracy), format_score(d.nmi_logits),
                       format_score(d.nmi_pca));
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
  const auto violations = validate_report(report);
  if (!violations.empty()) {
    std::string message = "report out of range:";
    for (const auto& v : violations) message += "\n  " + v;
    throw ValidationError(message);
  }
  const EvalReport single[] = {report};
  write_file_atomic(path, format == ReportFormat::kJson ? format_report_json(report)
                                                        : render_markdown(single));
}

// --- Probe --------------------------------------------------------------------

namespace {

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> row(m.row(i).data(), m.row(i).data() + m.cols());
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> vector_values(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector json_to_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

ordered_json probe_to_json(const LinearProbe& probe) {
  ordered_json j;
  j["class_names"] = probe.class_names;
  j["weights"] = matrix_to_json(probe.weights);
  j["bias"] = vector_values(probe.bias);
  j["standardizer"] = {{"means", vector_values(probe.standardizer.means)},
                       {"stds", vector_values(probe.standardizer.stds)}};
  j["iterations"] = probe.iterations;
  j["converged"] = probe.converged;
  j["train_loss_trace"] = probe.train_loss_trace;
  return j;
}

LinearProbe probe_from_json(const json& j) {
  try {
    LinearProbe p;
    p.class_names = j.at("class_names").get<std::vector<std::string>>();
    const auto rows = j.at("weights").get<std::vector<std::vector<double>>>();
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    p.weights.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != dim) throw ValidationError("probe: ragged weight matrix");
      for (std::size_t d = 0; d < dim; ++d) {
        p.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];
      }
    }
    p.bias = json_to_vector(j.at("bias"));
    p.standardizer.means = json_to_vector(j.at("standardizer").at("means"));
    p.standardizer.stds = json_to_vector(j.at("standardizer").at("stds"));
    p.iterations = j.at("iterations").get<std::size_t>();
    p.converged = j.at("converged").get<bool>();
    p.train_loss_trace = j.at("train_loss_trace").get<std::vector<double>>();
    const auto classes = static_cast<Eigen::Index>(p.class_names.size());
    if (p.weights.rows() != classes || p.bias.size() != classes ||
        p.standardizer.means.size() != p.weights.cols() ||
        p.standardizer.stds.size() != p.weights.cols()) {
      throw ValidationError("probe: inconsistent parameter shapes");
    }
    return p;
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("probe: {}", e.what()));
  }
}

}  // namespace embdiag
