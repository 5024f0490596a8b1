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

#include "ovc/common.hpp"
#include "ovc/dsp.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ovc {

struct ManifestRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::filesystem::path audio_path;
  double duration_s = 0.0;
};

/// Line-delimited `utterance_id<TAB>speaker_id<TAB>path<TAB>duration`.
struct Manifest {
  std::vector<ManifestRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  std::vector<std::string> speakers() const;  // sorted, unique

  void save(const std::filesystem::path& path) const;
  static Manifest load(const std::filesystem::path& path);
};

struct SplitManifests {
  Manifest train;
  Manifest valid;
  Manifest test;
};

/// Scans root/<speaker>/*.wav. All utterances of test_speaker_count randomly
/// chosen speakers go to test; the rest is split at utterance level with
/// valid_fraction going to valid. Deterministic in seed.
SplitManifests build_manifest(const std::filesystem::path& root_dir, int test_speaker_count,
                              double valid_fraction, std::uint64_t seed);

/// Binary matrix file shared by the cache and the conversion dumps:
/// "OVCM", u32 version, u32 rows, u32 cols, little-endian float32 row-major.
void write_matrix(const std::filesystem::path& path, const MatF& m);
MatF read_matrix(const std::filesystem::path& path);

struct SkipRecord {
  std::string utterance_id;
  std::string reason;
};

/// Unnormalized log-mel matrices (frames x n_mels) keyed by utterance id.
class FeatureCache {
 public:
  FeatureCache() = default;
  FeatureCache(std::string fingerprint, int n_mels)
      : fingerprint_(std::move(fingerprint)), n_mels_(n_mels) {}

  const std::string& fingerprint() const { return fingerprint_; }
  int n_mels() const { return n_mels_; }

  void insert(const std::string& utterance_id, MatF mel);
  bool contains(const std::string& utterance_id) const { return entries_.count(utterance_id) > 0; }
  const MatF& at(const std::string& utterance_id) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::map<std::string, MatF>& entries() const { return entries_; }

  std::vector<SkipRecord>& skipped() { return skipped_; }
  const std::vector<SkipRecord>& skipped() const { return skipped_; }

  /// index.tsv + one matrix file per utterance + skipped.tsv.
  void save(const std::filesystem::path& dir) const;
  static FeatureCache load(const std::filesystem::path& dir);

 private:
  std::string fingerprint_;
  int n_mels_ = 0;
  std::map<std::string, MatF> entries_;
  std::vector<SkipRecord> skipped_;
};

/// Conditions every utterance (trim, peak-normalize, resample) and extracts
/// log-mels. Utterances shorter than min_frames are dropped with a skip
/// record; undecodable files are skipped with a warning. Throws
/// IngestionError when no file could be decoded at all.
FeatureCache preprocess_corpus(const Manifest& manifest, const DspConfig& dsp, int min_frames);

/// Per-mel-bin statistics over all training frames.
struct NormStats {
  Vec mean;
  Vec std;

  static constexpr double kStdFloor = 1e-8;

  MelSpectrogram normalize(const MelSpectrogram& m) const;
  MelSpectrogram denormalize(const MelSpectrogram& m) const;

  void save(const std::filesystem::path& path) const;
  static NormStats load(const std::filesystem::path& path);
};

/// Floors std at kStdFloor (with a warning) for zero-variance bins.
/// Only the utterance ids of train_manifest are read.
NormStats compute_norm_stats(const FeatureCache& cache, const Manifest& train_manifest,
                             int* floored_bins = nullptr);

}  // namespace ovc
