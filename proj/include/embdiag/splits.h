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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embdiag/data_model.h"

namespace embdiag {

enum class SplitPolicy { kTimewise, kRecordingwise };

std::string_view to_string(SplitPolicy policy);
std::optional<SplitPolicy> parse_split_policy(std::string_view token);

struct SplitSpec {
  SplitPolicy policy = SplitPolicy::kRecordingwise;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct SplitAssignment {
  std::map<std::string, Split> by_recording;
  std::vector<std::string> warnings;

  std::size_t count(Split split) const;
};

// Number of recordings sent to test out of `recordings`:
// ceil(fraction * recordings), kept within [1, recordings - 1].
std::size_t test_recording_count(double test_fraction, std::size_t recordings);

// Orders recordings by (recorded_at, earliest start_s) and sends the latest
// ceil(test_fraction * R) of them to test. Throws ValidationError when fewer
// than two recordings exist or when the last train and first test recording
// share a timestamp.
SplitAssignment timewise_split(std::span<const ClipMetadata> meta, double test_fraction);

// Per class, the recordings are sorted by id, shuffled with Rng(seed) and the
// first ceil(test_fraction * R_c) go to test. A class with one recording
// keeps it in train and adds a warning. Throws ValidationError when fewer
// than two recordings exist or a recording mixes labels.
SplitAssignment recordingwise_split(std::span<const ClipMetadata> meta, double test_fraction,
                                    std::uint64_t seed);

SplitAssignment make_split(std::span<const ClipMetadata> meta, const SplitSpec& spec);

// Copy of `meta` with every clip's split taken from its recording.
std::vector<ClipMetadata> apply_split(std::span<const ClipMetadata> meta,
                                      const SplitAssignment& assignment);

}  // namespace embdiag
