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

#include "ovc/checkpoint.hpp"
#include "ovc/corpus.hpp"
#include "ovc/model.hpp"
#include "ovc/probe.hpp"
#include "ovc/training.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ovc {

/// Speaker id -> gender tag ("F"/"M"), from a whitespace table whose first
/// column is the speaker id and third column the gender. Header lines
/// starting with "ID" and '#' comments are skipped.
std::map<std::string, std::string> load_speaker_info(const std::filesystem::path& path);

/// Keeps only the cache entries whose ids appear in the manifest.
FeatureCache subset_cache(const FeatureCache& cache, const Manifest& manifest);

struct RepOptions {
  int segment_len = 128;
  /// One example per content frame instead of one time-averaged vector per segment.
  bool frame_level = false;
  /// Replace speaker labels by a seeded permutation (chance-level control).
  bool shuffled_labels = false;
  std::uint64_t shuffle_seed = 0;
};

/// Content codes over consecutive non-overlapping segments of every cached
/// utterance in the manifest, labeled by speaker and grouped by utterance.
LabeledDataset extract_content_reps(const FeatureCache& cache, const Manifest& manifest,
                                    const Checkpoint& ckpt, const RepOptions& opts = {});

/// One speaker code per cached utterance in the manifest.
LabeledDataset extract_speaker_reps(const FeatureCache& cache, const Manifest& manifest,
                                    const Checkpoint& ckpt);

struct AblationRow {
  AblationSetting setting;
  ProbeResult probe;
  double final_l_rec = 0.0;
};

struct AblationOptions {
  std::filesystem::path checkpoint_dir;  // per-setting subdirectories when set
  RepOptions reps;
  std::function<void(AblationSetting, const TrainMetrics&)> on_log;
};

/// Trains one model per setting on the train split with identical budgets,
/// then probes speaker identity from content codes of the train and
/// validation utterances.
std::vector<AblationRow> run_ablation(const FeatureCache& cache, const SplitManifests& split,
                                      const DspConfig& dsp, const ArchConfig& arch,
                                      const TrainConfig& train_cfg, const ProbeConfig& probe_cfg,
                                      const std::vector<AblationSetting>& settings,
                                      const AblationOptions& opts = {});

/// Probe on checkpoints that already exist, one per setting.
AblationRow probe_setting(const FeatureCache& cache, const SplitManifests& split,
                          const Checkpoint& ckpt, AblationSetting setting,
                          const ProbeConfig& probe_cfg, const RepOptions& reps = {});

std::string format_ablation_report(const std::vector<AblationRow>& rows);

struct ProjectionPoint {
  std::string utterance_id;
  std::string speaker_id;
  double x = 0.0;
  double y = 0.0;
};

/// Principal-component projection of the rows of `features` onto two axes,
/// sign-fixed so the largest-magnitude loading of each axis is positive.
Mat pca_project(const Mat& features, int dims = 2);

void write_projection(const std::filesystem::path& path, const std::vector<ProjectionPoint>& pts);
std::vector<ProjectionPoint> read_projection(const std::filesystem::path& path);

struct EmbeddingEvalResult {
  std::optional<ProbeResult> seen;    // validation utterances of training speakers
  std::optional<ProbeResult> unseen;  // test speakers
  std::vector<ProjectionPoint> projection;
};

EmbeddingEvalResult speaker_embedding_eval(const FeatureCache& cache, const SplitManifests& split,
                                           const Checkpoint& ckpt, const ProbeConfig& probe_cfg);

std::string format_embedding_report(const EmbeddingEvalResult& r);

/// Per-bin population variance over all frames of all utterances.
Vec global_variance(const std::vector<MelSpectrogram>& mels);

double gv_distance(const Vec& a, const Vec& b);

struct GvPairResult {
  std::string source_speaker;
  std::string target_speaker;
  Vec source_gv;
  Vec target_gv;
  Vec converted_gv;
  std::size_t n_converted = 0;

  double to_target() const { return gv_distance(converted_gv, target_gv); }
  double to_source() const { return gv_distance(converted_gv, source_gv); }
};

/// Converts up to max_utterances source-speaker utterances, each with a
/// randomly drawn target-speaker utterance as reference, and compares GV
/// profiles on denormalized log-mel.
GvPairResult gv_pair(const FeatureCache& cache, const Manifest& manifest, const Checkpoint& ckpt,
                     const std::string& source_speaker, const std::string& target_speaker,
                     int max_utterances, std::uint64_t seed);

std::string format_gv_report(const std::vector<GvPairResult>& pairs);
void write_gv_profile(const std::filesystem::path& path, const GvPairResult& r);

}  // namespace ovc
