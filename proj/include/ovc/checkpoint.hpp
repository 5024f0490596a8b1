// Copyright 2026 The ovc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "ovc/corpus.hpp"
#include "ovc/dsp.hpp"
#include "ovc/model.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ovc {

/// First and second Adam moments per parameter tensor.
struct AdamState {
  std::map<std::string, Mat> m;
  std::map<std::string, Mat> v;
  std::int64_t step = 0;
};

/// Everything needed to continue an interrupted run bit-identically.
struct TrainingState {
  AdamState adam;
  std::string rng_state;
  std::int64_t iteration = 0;
};

/// Self-contained model file: conversion needs nothing else.
struct Checkpoint {
  ArchConfig arch;
  ModelParams params;
  NormStats norm;
  DspConfig dsp;
  std::optional<TrainingState> training;

  Model model() const { return Model(arch, params); }
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout (little-endian):
///   "OVCK" | u32 version | u32 meta_len | meta (key=value lines)
///   | u32 tensor_count | { u32 name_len | name | u32 rows | u32 cols | f64 data (column-major) }*
///   | u32 crc32 of everything before it
std::vector<unsigned char> serialize_checkpoint(const Checkpoint& c);
Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes);

/// Writes to a temporary sibling and renames, so a crash never leaves a
/// half-written file under the final name.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
/// Throws LoadError on truncation, checksum or version mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Metadata summary for `ovc info`.
std::string describe_checkpoint(const Checkpoint& c);

}  // namespace ovc
