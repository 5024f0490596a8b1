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
#include "ovc/rng.hpp"
#include "ovc/tape.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ovc {

/// Network sizes. The encoders downsample by downsample_factor through
/// log2(downsample_factor) stride-2 blocks; the decoder upsamples by the
/// same factor through 1-D pixel shuffle.
struct ArchConfig {
  int n_mels = 512;
  int convbank_k = 8;
  int bank_channels = 128;
  int enc_channels = 128;
  int n_enc_blocks = 6;
  int downsample_factor = 4;
  int speaker_dim = 128;
  int content_channels = 128;
  int dec_channels = 128;
  int n_dec_blocks = 6;
  int n_dense_blocks = 4;
  int kernel_size = 3;
  double dropout_rate = 0.5;
  bool content_in = true;   // instance norm in the content encoder
  bool speaker_in = false;  // instance norm in the speaker encoder (ablation)

  /// Small preset used by the tests and desk-scale experiments.
  static ArchConfig tiny();

  int n_stages() const;
  void validate() const;
};

enum class AblationSetting { content_with_in, content_without_in, content_without_in_speaker_with_in };

const char* to_string(AblationSetting s);
AblationSetting ablation_from_string(const std::string& s);
ArchConfig apply_ablation(ArchConfig arch, AblationSetting s);

using TensorShape = std::pair<Eigen::Index, Eigen::Index>;

/// Every parameter tensor name with its shape, in initialization order.
std::vector<std::pair<std::string, TensorShape>> parameter_shapes(const ArchConfig& arch);

/// Named parameter tensors of the speaker encoder ("speaker.*"), content
/// encoder ("content.*") and decoder ("decoder.*"). Biases are n x 1.
struct ModelParams {
  std::map<std::string, Mat> tensors;

  const Mat& at(const std::string& name) const;
  std::size_t count() const;
  bool all_finite() const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases; AdaIN
/// projections start with gamma bias 1 and beta bias 0.
ModelParams init_params(const ArchConfig& arch, std::uint64_t seed);

enum class Mode { train, eval };

/// Named intermediate activations, filled when passed to a forward pass.
struct Trace {
  std::map<std::string, Mat> values;
};

struct ForwardContext {
  Mode mode = Mode::eval;
  Rng* rng = nullptr;  // dropout masks; required in train mode when dropout > 0
  Trace* trace = nullptr;
};

// Graph builders. x is n_mels x (batch * frames).
namespace graph {
Var speaker_encoder(Tape& t, const ArchConfig& arch, const ModelParams& p, Var x,
                    ForwardContext& ctx);
Var content_encoder(Tape& t, const ArchConfig& arch, const ModelParams& p, Var x,
                    ForwardContext& ctx);
Var decoder(Tape& t, const ArchConfig& arch, const ModelParams& p, Var z_s, Var z_c,
            ForwardContext& ctx);
}  // namespace graph

/// z_c = mean + unit Gaussian noise per element. Gen needs `double normal()`.
template <class Gen>
Mat sample_content(const Mat& z_c_mean, Gen& gen) {
  Mat z = z_c_mean;
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] += gen.normal();
  return z;
}

/// The three networks bound to one parameter set. Mel inputs and outputs
/// are frames x n_mels; content codes are content_channels x (frames / factor).
class Model {
 public:
  Model(ArchConfig arch, ModelParams params);

  const ArchConfig& arch() const { return arch_; }
  const ModelParams& params() const { return params_; }
  ModelParams& mutable_params() { return params_; }

  /// Needs frames >= downsample_factor; output length is speaker_dim.
  Vec speaker_encode(const MelSpectrogram& x, ForwardContext ctx = {}) const;
  /// Gaussian mean E_c(x); frames must be divisible by downsample_factor.
  Mat content_encode(const MelSpectrogram& x, ForwardContext ctx = {}) const;
  MelSpectrogram decode(const Vec& z_s, const Mat& z_c, ForwardContext ctx = {}) const;

  /// decode(speaker_encode(x), content_encode(x)) in eval mode.
  MelSpectrogram autoencode(const MelSpectrogram& x) const;

 private:
  ArchConfig arch_;
  ModelParams params_;
};

}  // namespace ovc
