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
#include "ovc/layers.hpp"
#include "ovc/rng.hpp"

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace ovc {

/// Handle to a value recorded on a Tape.
struct Var {
  int id = -1;
};

/// Reverse-mode recorder. Every op appends a node holding its value and,
/// when some input needs a gradient, a closure that pushes the output
/// gradient back into its inputs. backward() replays the closures in
/// reverse creation order, which is a valid topological order.
///
/// Values are channels x (batch * time) maps or features x batch matrices;
/// parameters are stored once and shared by the whole batch.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Mat& grad_out)>;

  /// With record == false no closures are kept (inference).
  explicit Tape(bool record = true) : record_(record) {}

  Var constant(Mat value, int batch = 1);
  /// Memoized by name: the same tensor requested twice yields the same node.
  Var parameter(const std::string& name, const Mat& value);

  const Mat& value(Var v) const { return nodes_.at(v.id).value; }
  int batch(Var v) const { return nodes_.at(v.id).batch; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool recording() const { return record_; }

  /// Gradient accumulated into v (zeros if nothing reached it).
  Mat grad(Var v) const;

  /// Seeds d(loss)/d(loss) = 1; loss must be 1 x 1.
  void backward(Var loss);

  std::map<std::string, Mat> parameter_grads() const;

  // Used by ops.
  Var push(Mat value, int batch, const std::vector<Var>& inputs, Backward back);
  void accumulate(Var v, const Mat& g);

 private:
  struct Node {
    Mat value;
    Mat grad;
    int batch = 1;
    bool requires_grad = false;
    Backward back;
  };
  bool record_;
  std::deque<Node> nodes_;
  std::map<std::string, int> params_;
};

namespace ops {

using layers::ConvSpec;

Var conv1d(Tape& t, Var x, Var weight, Var bias, const ConvSpec& spec);
Var leaky_relu(Tape& t, Var x, double slope = layers::kLeakySlope);
/// rng may be null only when !train or rate == 0.
Var dropout(Tape& t, Var x, double rate, Rng* rng, bool train);
Var instance_norm(Tape& t, Var x, double eps = layers::kNormEps);
/// affine is (2C) x batch: rows [0, C) are gamma, [C, 2C) beta.
Var adaptive_instance_norm(Tape& t, Var x, Var affine, double eps = layers::kNormEps);
Var pixel_shuffle(Tape& t, Var x, int r);
Var avg_pool(Tape& t, Var x);
Var dense(Tape& t, Var x, Var weight, Var bias);
Var add(Tape& t, Var a, Var b);
Var concat_channels(Tape& t, const std::vector<Var>& xs);
/// Mean absolute difference over all elements (target gets no gradient).
Var l1_loss(Tape& t, Var prediction, Var target);
/// Mean of squared entries.
Var mean_square(Tape& t, Var x);
Var weighted_sum(Tape& t, const std::vector<std::pair<double, Var>>& terms);

}  // namespace ops
}  // namespace ovc
