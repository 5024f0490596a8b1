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

#include <cstdint>
#include <string>
#include <vector>

namespace ovc {

/// Speaker-identity probe: a ReLU MLP trained with softmax cross-entropy
/// and Adam. Defaults are 5 hidden layers of 1024 units, 10k steps of
/// batch 64 at the main model's Adam settings.
struct ProbeConfig {
  int hidden_layers = 5;
  int hidden_units = 1024;
  int iters = 10000;
  int batch = 64;
  double lr = 0.0005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double held_out_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One row per example. groups[i] names the source utterance; the
/// held-out split never separates examples of the same group.
struct LabeledDataset {
  MatF features;  // N x D
  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::vector<std::string> groups;

  std::size_t size() const { return labels.size(); }
  int n_classes() const { return static_cast<int>(label_names.size()); }
  void add(const Eigen::Ref<const Eigen::VectorXf>& x, const std::string& label,
           const std::string& group);
  /// Reassigns labels by a seeded permutation over groups (chance control).
  void shuffle_labels(std::uint64_t seed);
};

struct ProbeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> held_out;
};

/// Per class, a held_out_fraction share of its groups (at least one when the
/// class has two or more groups) goes to held_out.
ProbeSplit stratified_split(const LabeledDataset& data, double held_out_fraction,
                            std::uint64_t seed);

class ProbeNet {
 public:
  ProbeNet(int input_dim, int n_classes, const ProbeConfig& cfg);

  /// Class scores, n_classes x N for inputs D x N.
  MatF logits(const MatF& x) const;
  std::vector<int> predict(const MatF& x) const;
  /// One Adam step on mean cross-entropy; returns the batch loss.
  double train_step(const MatF& x, const std::vector<int>& labels);

 private:
  struct Layer {
    MatF w;
    Eigen::VectorXf b;
    MatF mw, vw;
    Eigen::VectorXf mb, vb;
  };
  std::vector<Layer> layers_;
  ProbeConfig cfg_;
  std::int64_t step_ = 0;
};

struct ProbeResult {
  double held_out_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_held_out = 0;
  int n_classes = 0;
};

/// Standardizes features on the training part, trains, and scores the
/// held-out part. Throws ConfigError for fewer than two classes.
ProbeResult train_probe(const LabeledDataset& data, const ProbeConfig& cfg);

}  // namespace ovc
