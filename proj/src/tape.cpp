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

#include "ovc/tape.hpp"

#include <string>

namespace ovc {

Var Tape::constant(Mat value, int batch) { return push(std::move(value), batch, {}, nullptr); }

Var Tape::parameter(const std::string& name, const Mat& value) {
  auto it = params_.find(name);
  if (it != params_.end()) return Var{it->second};
  Node n;
  n.value = value;
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size()) - 1;
  params_[name] = id;
  return Var{id};
}

Mat Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::push(Mat value, int batch, const std::vector<Var>& inputs, Backward back) {
  Node n;
  n.value = std::move(value);
  n.batch = batch;
  if (record_ && back) {
    for (Var in : inputs) n.requires_grad = n.requires_grad || nodes_.at(in.id).requires_grad;
    if (n.requires_grad) n.back = std::move(back);
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(Var v, const Mat& g) {
  Node& n = nodes_.at(v.id);
  if (!n.requires_grad) return;
  if (g.rows() != n.value.rows() || g.cols() != n.value.cols())
    throw SizeError("tape: gradient shape mismatch on node " + std::to_string(v.id));
  if (n.grad.size() == 0)
    n.grad = g;
  else
    n.grad += g;
}

void Tape::backward(Var loss) {
  if (!record_) throw ConfigError("tape: backward on a non-recording tape");
  Node& l = nodes_.at(loss.id);
  if (l.value.size() != 1) throw SizeError("tape: backward needs a scalar loss");
  l.grad = Mat::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.grad.size() != 0) n.back(*this, n.grad);
  }
}

std::map<std::string, Mat> Tape::parameter_grads() const {
  std::map<std::string, Mat> out;
  for (const auto& [name, id] : params_) out[name] = grad(Var{id});
  return out;
}

namespace ops {

Var conv1d(Tape& t, Var x, Var weight, Var bias, const ConvSpec& spec) {
  const int batch = t.batch(x);
  Mat y = layers::conv1d(t.value(x), t.value(weight), t.value(bias).col(0), spec, batch);
  return t.push(std::move(y), batch, {x, weight, bias}, [=](Tape& tp, const Mat& g) {
    const bool need_input = tp.requires_grad(x);
    auto grads = layers::conv1d_backward(tp.value(x), tp.value(weight), g, spec, batch, need_input);
    if (need_input) tp.accumulate(x, grads.input);
    tp.accumulate(weight, grads.weight);
    tp.accumulate(bias, grads.bias);
  });
}

Var leaky_relu(Tape& t, Var x, double slope) {
  return t.push(layers::leaky_relu(t.value(x), slope), t.batch(x), {x},
                [=](Tape& tp, const Mat& g) {
                  tp.accumulate(x, layers::leaky_relu_backward(tp.value(x), g, slope));
                });
}

Var dropout(Tape& t, Var x, double rate, Rng* rng, bool train) {
  if (!train || rate == 0.0) return x;
  if (!rng) throw ConfigError("dropout: training mode needs a random stream");
  Mat mask;
  Mat y = layers::dropout(t.value(x), rate, *rng, true, &mask);
  return t.push(std::move(y), t.batch(x), {x},
                [=, mask = std::move(mask)](Tape& tp, const Mat& g) {
                  tp.accumulate(x, g.cwiseProduct(mask));
                });
}

Var instance_norm(Tape& t, Var x, double eps) {
  const int batch = t.batch(x);
  return t.push(layers::instance_norm(t.value(x), eps, batch), batch, {x},
                [=](Tape& tp, const Mat& g) {
                  tp.accumulate(x, layers::instance_norm_backward(tp.value(x), g, eps, batch));
                });
}

Var adaptive_instance_norm(Tape& t, Var x, Var affine, double eps) {
  const int batch = t.batch(x);
  const Mat& xv = t.value(x);
  const Mat& av = t.value(affine);
  const Eigen::Index c = xv.rows();
  if (av.rows() != 2 * c || av.cols() != batch)
    throw SizeError("adaptive_instance_norm: affine is " + std::to_string(av.rows()) + "x" +
                    std::to_string(av.cols()) + ", expected " + std::to_string(2 * c) + "x" +
                    std::to_string(batch));
  const Eigen::Index width = xv.cols() / batch;
  Mat y(xv.rows(), xv.cols());
  for (int b = 0; b < batch; ++b) {
    layers::ChannelAffine a{av.col(b).head(c), av.col(b).tail(c)};
    y.middleCols(b * width, width) =
        layers::adaptive_instance_norm(xv.middleCols(b * width, width), a, eps);
  }
  return t.push(std::move(y), batch, {x, affine}, [=](Tape& tp, const Mat& g) {
    const Mat& xv2 = tp.value(x);
    const Mat& av2 = tp.value(affine);
    Mat dx(xv2.rows(), xv2.cols());
    Mat da(av2.rows(), av2.cols());
    for (int b = 0; b < batch; ++b) {
      layers::ChannelAffine a{av2.col(b).head(c), av2.col(b).tail(c)};
      auto gr = layers::adaptive_instance_norm_backward(xv2.middleCols(b * width, width), a,
                                                        g.middleCols(b * width, width), eps);
      dx.middleCols(b * width, width) = gr.input;
      da.col(b).head(c) = gr.gamma;
      da.col(b).tail(c) = gr.beta;
    }
    tp.accumulate(x, dx);
    tp.accumulate(affine, da);
  });
}

Var pixel_shuffle(Tape& t, Var x, int r) {
  if (r == 1) return x;
  const int batch = t.batch(x);
  return t.push(layers::pixel_shuffle_1d(t.value(x), r, batch), batch, {x},
                [=](Tape& tp, const Mat& g) {
                  tp.accumulate(x, layers::pixel_unshuffle_1d(g, r, batch));
                });
}

Var avg_pool(Tape& t, Var x) {
  const int batch = t.batch(x);
  const int width = static_cast<int>(t.value(x).cols() / batch);
  return t.push(layers::avg_pool_over_time(t.value(x), batch), batch, {x},
                [=](Tape& tp, const Mat& g) {
                  tp.accumulate(x, layers::avg_pool_over_time_backward(g, width));
                });
}

Var dense(Tape& t, Var x, Var weight, Var bias) {
  return t.push(layers::dense(t.value(x), t.value(weight), t.value(bias).col(0)), t.batch(x),
                {x, weight, bias}, [=](Tape& tp, const Mat& g) {
                  auto gr = layers::dense_backward(tp.value(x), tp.value(weight), g);
                  tp.accumulate(x, gr.input);
                  tp.accumulate(weight, gr.weight);
                  tp.accumulate(bias, gr.bias);
                });
}

Var add(Tape& t, Var a, Var b) {
  const Mat& av = t.value(a);
  const Mat& bv = t.value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw SizeError("add: shape mismatch");
  return t.push(av + bv, t.batch(a), {a, b}, [=](Tape& tp, const Mat& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var concat_channels(Tape& t, const std::vector<Var>& xs) {
  if (xs.empty()) throw SizeError("concat_channels: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = t.value(xs[0]).cols();
  for (Var v : xs) {
    if (t.value(v).cols() != cols) throw SizeError("concat_channels: time axes differ");
    rows += t.value(v).rows();
  }
  Mat y(rows, cols);
  Eigen::Index r = 0;
  for (Var v : xs) {
    y.middleRows(r, t.value(v).rows()) = t.value(v);
    r += t.value(v).rows();
  }
  return t.push(std::move(y), t.batch(xs[0]), xs, [=](Tape& tp, const Mat& g) {
    Eigen::Index row = 0;
    for (Var v : xs) {
      const Eigen::Index n = tp.value(v).rows();
      tp.accumulate(v, g.middleRows(row, n));
      row += n;
    }
  });
}

Var l1_loss(Tape& t, Var prediction, Var target) {
  const Mat& p = t.value(prediction);
  const Mat& q = t.value(target);
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw SizeError("l1_loss: prediction and target shapes differ");
  const double n = static_cast<double>(p.size());
  Mat loss(1, 1);
  loss(0, 0) = (p - q).cwiseAbs().sum() / n;
  return t.push(std::move(loss), 1, {prediction}, [=](Tape& tp, const Mat& g) {
    const Mat d = tp.value(prediction) - tp.value(target);
    Mat s = d.unaryExpr([](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); });
    tp.accumulate(prediction, s * (g(0, 0) / n));
  });
}

Var mean_square(Tape& t, Var x) {
  const Mat& v = t.value(x);
  const double n = static_cast<double>(v.size());
  Mat loss(1, 1);
  loss(0, 0) = v.squaredNorm() / n;
  return t.push(std::move(loss), 1, {x}, [=](Tape& tp, const Mat& g) {
    tp.accumulate(x, tp.value(x) * (2.0 * g(0, 0) / n));
  });
}

Var weighted_sum(Tape& t, const std::vector<std::pair<double, Var>>& terms) {
  Mat y = Mat::Zero(1, 1);
  std::vector<Var> inputs;
  for (const auto& [w, v] : terms) {
    if (t.value(v).size() != 1) throw SizeError("weighted_sum: terms must be scalars");
    y(0, 0) += w * t.value(v)(0, 0);
    inputs.push_back(v);
  }
  return t.push(std::move(y), 1, inputs, [=](Tape& tp, const Mat& g) {
    for (const auto& [w, v] : terms) tp.accumulate(v, g * w);
  });
}

}  // namespace ops
}  // namespace ovc
