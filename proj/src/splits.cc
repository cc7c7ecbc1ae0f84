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


#include "embdiag/splits.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

#include "embdiag/error.h"
#include "embdiag/rng.h"

namespace embdiag {
namespace {

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) {
    throw ValidationError(fmt::format("test_fraction must lie in (0, 1), got {}", f));
  }
}

// Recording-level view of clip metadata; labels must agree within a recording.
struct RecordingInfo {
  std::string label;
  std::string recorded_at;
  double earliest_start = std::numeric_limits<double>::infinity();
};

std::map<std::string, RecordingInfo> summarize(std::span<const ClipMetadata> meta) {
  std::map<std::string, RecordingInfo> out;
  for (const auto& m : meta) {
    auto [it, inserted] = out.try_emplace(m.recording_id);
    RecordingInfo& info = it->second;
    if (inserted) {
      info.label = m.label;
      info.recorded_at = m.recorded_at;
    } else {
      if (info.label != m.label) {
        throw ValidationError(fmt::format("recording {} mixes labels {} and {}",
                                          m.recording_id, info.label, m.label));
      }
      if (info.recorded_at != m.recorded_at) {
        throw ValidationError(
            fmt::format("recording {} has inconsistent recorded_at values", m.recording_id));
      }
    }
    info.earliest_start = std::min(info.earliest_start, m.start_s);
  }
  return out;
}

}  // namespace

std::string_view to_string(SplitPolicy policy) {
  return policy == SplitPolicy::kTimewise ? "timewise" : "recordingwise";
}

std::optional<SplitPolicy> parse_split_policy(std::string_view token) {
  if (token == "timewise") return SplitPolicy::kTimewise;
  if (token == "recordingwise") return SplitPolicy::kRecordingwise;
  return std::nullopt;
}

std::size_t SplitAssignment::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      by_recording.begin(), by_recording.end(), [&](const auto& e) { return e.second == split; }));
}

std::size_t test_recording_count(double test_fraction, std::size_t recordings) {
  // The epsilon keeps exact products such as 0.7 * 10 from rounding up.
  const double raw = std::ceil(test_fraction * static_cast<double>(recordings) - 1e-9);
  const auto wanted = static_cast<std::size_t>(std::max(raw, 1.0));
  return std::min(wanted, recordings - 1);
}

SplitAssignment timewise_split(std::span<const ClipMetadata> meta, double test_fraction) {
  check_fraction(test_fraction);
  const auto recordings = summarize(meta);
  if (recordings.size() < 2) {
    throw ValidationError("timewise split needs at least 2 recordings");
  }
  using Key = std::tuple<std::string, double>;
  std::vector<std::pair<Key, std::string>> order;
  for (const auto& [id, info] : recordings) {
    order.push_back({Key{info.recorded_at, info.earliest_start}, id});
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const std::size_t n_test = test_recording_count(test_fraction, order.size());
  const std::size_t cut = order.size() - n_test;
  if (order[cut - 1].first == order[cut].first) {
    throw ValidationError(fmt::format(
        "timewise split is ambiguous: recordings {} and {} share the cut timestamp",
        order[cut - 1].second, order[cut].second));
  }
  SplitAssignment out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.by_recording[order[i].second] = i < cut ? Split::kTrain : Split::kTest;
  }
  return out;
}

SplitAssignment recordingwise_split(std::span<const ClipMetadata> meta, double test_fraction,
                                    std::uint64_t seed) {
  check_fraction(test_fraction);
  const auto recordings = summarize(meta);
  if (recordings.size() < 2) {
    throw ValidationError("recording-wise split needs at least 2 recordings");
  }
  std::map<std::string, std::vector<std::string>> by_class;  // ids arrive sorted
  for (const auto& [id, info] : recordings) by_class[info.label].push_back(id);

  Rng rng(seed);
  SplitAssignment out;
  for (auto& [label, ids] : by_class) {
    if (ids.size() == 1) {
      out.by_recording[ids.front()] = Split::kTrain;
      out.warnings.push_back(fmt::format(
          "class {} has a single recording ({}); kept in train", label, ids.front()));
      continue;
    }
    rng.shuffle(ids);
    const std::size_t n_test = test_recording_count(test_fraction, ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out.by_recording[ids[i]] = i < n_test ? Split::kTest : Split::kTrain;
    }
  }
  return out;
}

SplitAssignment make_split(std::span<const ClipMetadata> meta, const SplitSpec& spec) {
  return spec.policy == SplitPolicy::kTimewise
             ? timewise_split(meta, spec.test_fraction)
             : recordingwise_split(meta, spec.test_fraction, spec.seed);
}

std::vector<ClipMetadata> apply_split(std::span<const ClipMetadata> meta,
                                      const SplitAssignment& assignment) {
  std::vector<ClipMetadata> out(meta.begin(), meta.end());
  for (auto& m : out) {
    auto it = assignment.by_recording.find(m.recording_id);
    if (it == assignment.by_recording.end()) {
      throw ValidationError(fmt::format("recording {} has no split assignment", m.recording_id));
    }
    m.split = it->second;
  }
  return out;
}

}  // namespace embdiag
