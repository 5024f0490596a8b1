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
#include "ovc/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ovc {

struct TrainConfig {
  double lambda_rec = 10.0;
  double lambda_kl = 0.01;
  double lr = 0.0005;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 256;
  double weight_decay = 0.0001;
  double dropout = 0.5;  // overrides arch.dropout_rate while training
  int segment_len = 128;
  std::int64_t total_iters = 200000;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 10000;
  std::int64_t log_every = 100;
  bool deterministic = true;

  void validate(const ArchConfig& arch) const;
};

struct TrainMetrics {
  std::int64_t iteration = 0;
  double l_rec = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
  double seconds = 0.0;
};

/// `iter<TAB>l_rec<TAB>l_kl<TAB>total<TAB>seconds`
std::string format_metrics(const TrainMetrics& m);
std::vector<TrainMetrics> read_metrics_log(const std::filesystem::path& path);

/// Mean over the batch of the per-element mean absolute error.
double reconstruction_loss(const std::vector<MelSpectrogram>& x,
                           const std::vector<MelSpectrogram>& x_hat);
/// Mean over the batch of the per-element mean of squared content means.
double kl_loss(const std::vector<Mat>& z_c_mean);
double total_loss(double l_rec, double l_kl, const TrainConfig& cfg);

/// Uniform utterance, then uniform start offset; returns a normalized
/// segment_len x n_mels slice. Utterances shorter than the segment are
/// never picked.
class SegmentSampler {
 public:
  SegmentSampler(const FeatureCache& cache, const NormStats& norm, int segment_len);

  MelSpectrogram sample(Rng& rng) const;
  /// Like sample() but also reports which utterance was drawn.
  MelSpectrogram sample(Rng& rng, std::string* utterance_id) const;
  std::size_t eligible() const { return ids_.size(); }

 private:
  const FeatureCache& cache_;
  const NormStats& norm_;
  int segment_len_;
  std::vector<std::string> ids_;
};

MelSpectrogram sample_segment(const FeatureCache& cache, const NormStats& norm, Rng& rng,
                              int segment_len = 128);

/// Coupled L2 weight decay (g + wd * theta) followed by bias-corrected Adam.
/// Throws NumericError naming the first tensor with a non-finite gradient.
void adam_step(ModelParams& params, const std::map<std::string, Mat>& grads, AdamState& state,
               const TrainConfig& cfg);

struct LossBreakdown {
  double l_rec = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
  std::map<std::string, Mat> grads;  // empty unless requested
};

/// One forward (+ optional backward) of the weighted objective on a batch
/// laid out as n_mels x (batch * frames). In train mode the content code is
/// sampled as mean + unit noise and dropout is active, both drawn from rng.
LossBreakdown evaluate_objective(const ArchConfig& arch, const ModelParams& params,
                                 const Mat& batch_mels, int batch, Rng& rng,
                                 const TrainConfig& cfg, Mode mode, bool with_grads);

struct TrainOptions {
  std::filesystem::path checkpoint_dir;   // empty: no periodic checkpoints
  std::filesystem::path metrics_log;      // empty: no log file
  std::optional<Checkpoint> resume_from;  // must carry TrainingState
  DspConfig dsp;                          // recorded in every checkpoint
  std::function<void(const TrainMetrics&)> on_log;
};

struct TrainResult {
  Checkpoint final;
  std::vector<TrainMetrics> metrics;  // one record per log_every iterations
};

/// Runs iterations (resumed iteration + 1) .. total_iters. Reads only the
/// cache matrices; speaker ids never reach this function.
TrainResult train(const FeatureCache& cache, const NormStats& norm, const ArchConfig& arch,
                  const TrainConfig& cfg, const TrainOptions& options = {});

}  // namespace ovc
