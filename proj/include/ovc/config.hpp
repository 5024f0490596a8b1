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

#include "ovc/dsp.hpp"
#include "ovc/model.hpp"
#include "ovc/probe.hpp"
#include "ovc/training.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ovc {

/// Text accessor for one config field.
template <class T>
struct Field {
  std::string key;
  std::function<std::string(const T&)> get;
  std::function<void(T&, const std::string&)> set;
};

const std::vector<Field<DspConfig>>& dsp_fields();
const std::vector<Field<ArchConfig>>& arch_fields();
const std::vector<Field<TrainConfig>>& train_fields();
const std::vector<Field<ProbeConfig>>& probe_fields();

/// Corpus layout and split settings.
struct CorpusConfig {
  std::string root;
  std::string cache_dir = "cache";
  std::string checkpoint_dir = "checkpoints";
  std::string report_dir = "reports";
  int test_speakers = 20;
  double valid_fraction = 0.1;
  std::uint64_t split_seed = 0;
  int min_frames = 128;
};
const std::vector<Field<CorpusConfig>>& corpus_fields();

/// `key=value` lines for every field of one section, keys prefixed.
template <class T>
std::string fields_to_text(const std::vector<Field<T>>& fields, const T& obj,
                           const std::string& prefix) {
  std::string out;
  for (const auto& f : fields) out += prefix + f.key + "=" + f.get(obj) + "\n";
  return out;
}

/// Parses `key=value` lines; '#' starts a comment. Throws ConfigError on
/// malformed lines.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text,
                                                                  const std::string& origin);

/// All sections. Keys are `dsp.*`, `arch.*`, `train.*`, `probe.*`, `corpus.*`.
/// Precedence, lowest first: built-in defaults, config file, OVC_* environment
/// variables, command-line flags.
struct RunConfig {
  DspConfig dsp;
  ArchConfig arch;
  TrainConfig train;
  ProbeConfig probe;
  CorpusConfig corpus;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::vector<std::string> keys() const;

  void load_file(const std::filesystem::path& path);
  /// OVC_<SECTION>_<FIELD> in upper case, e.g. OVC_TRAIN_LR.
  void apply_env();
  std::string to_text() const;

  /// Section validation plus cross-section checks.
  void validate() const;

  static std::string env_name(const std::string& key);
};

}  // namespace ovc
