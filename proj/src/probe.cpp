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

#include "ovc/probe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ovc {

void ProbeConfig::validate() const {
  auto bad = [](const std::string& why) { return ConfigError("probe: " + why); };
  if (hidden_layers < 0) throw bad("hidden_layers must be non-negative");
  if (hidden_units < 1) throw bad("hidden_units must be positive");
  if (iters < 0) throw bad("iters must be non-negative");
  if (batch < 1) throw bad("batch must be positive");
  if (!(lr > 0.0)) throw bad("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw bad("betas must be in [0, 1)");
  if (!(held_out_fraction > 0.0 && held_out_fraction < 1.0))
    throw bad("held_out_fraction must be in (0, 1)");
}

void LabeledDataset::add(const Eigen::Ref<const Eigen::VectorXf>& x, const std::string& label,
                         const std::string& group) {
  if (size() > 0 && x.size() != features.cols())
    throw SizeError("probe dataset: feature length " + std::to_string(x.size()) + " differs from " +
                    std::to_string(features.cols()));
  auto it = std::find(label_names.begin(), label_names.end(), label);
  int id = static_cast<int>(it - label_names.begin());
  if (it == label_names.end()) label_names.push_back(label);
  const Eigen::Index n = static_cast<Eigen::Index>(size());
  features.conservativeResize(n + 1, x.size());
  features.row(n) = x.transpose();
  labels.push_back(id);
  groups.push_back(group);
}

void LabeledDataset::shuffle_labels(std::uint64_t seed) {
  // Permute whole groups so every group keeps a single label.
  std::vector<std::string> order;
  std::map<std::string, int> label_of;
  for (std::size_t i = 0; i < size(); ++i)
    if (label_of.emplace(groups[i], labels[i]).second) order.push_back(groups[i]);
  std::vector<int> pool;
  for (const auto& g : order) pool.push_back(label_of[g]);
  Rng rng(seed);
  shuffle(pool, rng);
  for (std::size_t k = 0; k < order.size(); ++k) label_of[order[k]] = pool[k];
  for (std::size_t i = 0; i < size(); ++i) labels[i] = label_of[groups[i]];
}

ProbeSplit stratified_split(const LabeledDataset& data, double held_out_fraction,
                            std::uint64_t seed) {
  std::map<std::string, int> group_label;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, fresh] = group_label.emplace(data.groups[i], data.labels[i]);
    if (!fresh && it->second != data.labels[i])
      throw ConfigError("probe split: group " + data.groups[i] + " mixes labels");
  }
  std::map<int, std::vector<std::string>> by_label;
  for (const auto& [g, l] : group_label) by_label[l].push_back(g);

  Rng rng(seed);
  std::set<std::string> held;
  for (auto& [label, gs] : by_label) {
    shuffle(gs, rng);
    auto k = static_cast<std::size_t>(std::llround(held_out_fraction * static_cast<double>(gs.size())));
    if (gs.size() >= 2) k = std::clamp<std::size_t>(k, 1, gs.size() - 1);
    else k = 0;
    held.insert(gs.begin(), gs.begin() + static_cast<std::ptrdiff_t>(k));
  }
  ProbeSplit s;
  for (std::size_t i = 0; i < data.size(); ++i)
    (held.count(data.groups[i]) ? s.held_out : s.train).push_back(i);
  return s;
}

ProbeNet::ProbeNet(int input_dim, int n_classes, const ProbeConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  int fan_in = input_dim;
  for (int l = 0; l <= cfg.hidden_layers; ++l) {
    const int out = l == cfg.hidden_layers ? n_classes : cfg.hidden_units;
    const double bound = std::sqrt(6.0 / fan_in);
    Layer layer;
    layer.w.resize(out, fan_in);
    for (Eigen::Index i = 0; i < layer.w.size(); ++i)
      layer.w.data()[i] = static_cast<float>(bound * (2.0 * rng.uniform() - 1.0));
    layer.b = Eigen::VectorXf::Zero(out);
    layer.mw = MatF::Zero(out, fan_in);
    layer.vw = MatF::Zero(out, fan_in);
    layer.mb = Eigen::VectorXf::Zero(out);
    layer.vb = Eigen::VectorXf::Zero(out);
    layers_.push_back(std::move(layer));
    fan_in = out;
  }
}

MatF ProbeNet::logits(const MatF& x) const {
  MatF h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    MatF z = layers_[l].w * h;
    z.colwise() += layers_[l].b;
    h = l + 1 < layers_.size() ? MatF(z.cwiseMax(0.0f)) : z;
  }
  return h;
}

std::vector<int> ProbeNet::predict(const MatF& x) const {
  const MatF z = logits(x);
  std::vector<int> out(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index j = 0; j < z.cols(); ++j) z.col(j).maxCoeff(&out[static_cast<std::size_t>(j)]);
  return out;
}

double ProbeNet::train_step(const MatF& x, const std::vector<int>& labels) {
  const Eigen::Index n = x.cols();
  std::vector<MatF> acts{x};
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    MatF z = layers_[l].w * acts.back();
    z.colwise() += layers_[l].b;
    acts.push_back(l + 1 < layers_.size() ? MatF(z.cwiseMax(0.0f)) : z);
  }
  MatF g = acts.back();
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const float mx = g.col(j).maxCoeff();
    g.col(j) = (g.col(j).array() - mx).exp().matrix();
    const float s = g.col(j).sum();
    g.col(j) /= s;
    const int y = labels[static_cast<std::size_t>(j)];
    loss -= std::log(std::max(1e-30, static_cast<double>(g(y, j))));
    g(y, j) -= 1.0f;
  }
  g /= static_cast<float>(n);

  ++step_;
  const float c1 = static_cast<float>(1.0 - std::pow(cfg_.beta1, step_));
  const float c2 = static_cast<float>(1.0 - std::pow(cfg_.beta2, step_));
  const float b1 = static_cast<float>(cfg_.beta1), b2 = static_cast<float>(cfg_.beta2);
  const float lr = static_cast<float>(cfg_.lr);
  for (std::size_t l = layers_.size(); l-- > 0;) {
    Layer& L = layers_[l];
    const MatF gw = g * acts[l].transpose();
    const Eigen::VectorXf gb = g.rowwise().sum();
    if (l > 0) {
      g = L.w.transpose() * g;
      g = g.cwiseProduct((acts[l].array() > 0.0f).cast<float>().matrix());
    }
    L.mw = b1 * L.mw + (1 - b1) * gw;
    L.vw = b2 * L.vw + (1 - b2) * gw.cwiseAbs2();
    L.mb = b1 * L.mb + (1 - b1) * gb;
    L.vb = b2 * L.vb + (1 - b2) * gb.cwiseAbs2();
    L.w.array() -= lr * (L.mw.array() / c1) / ((L.vw.array() / c2).sqrt() + 1e-8f);
    L.b.array() -= lr * (L.mb.array() / c1) / ((L.vb.array() / c2).sqrt() + 1e-8f);
  }
  return loss / static_cast<double>(n);
}

namespace {

double accuracy(const ProbeNet& net, const MatF& x, const std::vector<int>& y) {
  if (y.empty()) return 0.0;
  const auto pred = net.predict(x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace

ProbeResult train_probe(const LabeledDataset& data, const ProbeConfig& cfg) {
  cfg.validate();
  if (data.n_classes() < 2) throw ConfigError("probe needs at least two classes");
  const ProbeSplit split = stratified_split(data, cfg.held_out_fraction, cfg.seed);
  if (split.train.empty() || split.held_out.empty())
    throw SizeError("probe split left an empty train or held-out set");

  const Eigen::Index d = data.features.cols();
  auto gather = [&](const std::vector<std::size_t>& idx, std::vector<int>& y) {
    MatF x(d, static_cast<Eigen::Index>(idx.size()));
    y.clear();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      x.col(static_cast<Eigen::Index>(i)) = data.features.row(static_cast<Eigen::Index>(idx[i])).transpose();
      y.push_back(data.labels[idx[i]]);
    }
    return x;
  };
  std::vector<int> y_train, y_held;
  MatF x_train = gather(split.train, y_train);
  MatF x_held = gather(split.held_out, y_held);

  // Standardize with training-split statistics only.
  const Eigen::VectorXf mean = x_train.rowwise().mean();
  Eigen::VectorXf sd = ((x_train.colwise() - mean).cwiseAbs2().rowwise().mean()).cwiseSqrt();
  sd = sd.cwiseMax(1e-6f);
  auto standardize = [&](MatF& x) {
    x.colwise() -= mean;
    x = sd.cwiseInverse().asDiagonal() * x;
  };
  standardize(x_train);
  standardize(x_held);

  ProbeNet net(static_cast<int>(d), data.n_classes(), cfg);
  Rng rng(cfg.seed + 1);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x_train.cols()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  std::size_t cursor = order.size();
  const int bs = std::min<int>(cfg.batch, static_cast<int>(order.size()));
  MatF xb(d, bs);
  std::vector<int> yb(static_cast<std::size_t>(bs));
  for (int it = 0; it < cfg.iters; ++it) {
    for (int j = 0; j < bs; ++j) {
      if (cursor == order.size()) {
        shuffle(order, rng);
        cursor = 0;
      }
      const Eigen::Index k = order[cursor++];
      xb.col(j) = x_train.col(k);
      yb[static_cast<std::size_t>(j)] = y_train[static_cast<std::size_t>(k)];
    }
    const double loss = net.train_step(xb, yb);
    if (!std::isfinite(loss)) throw NumericError("probe loss became non-finite at step " + std::to_string(it));
  }

  ProbeResult r;
  r.train_accuracy = accuracy(net, x_train, y_train);
  r.held_out_accuracy = accuracy(net, x_held, y_held);
  r.n_train = split.train.size();
  r.n_held_out = split.held_out.size();
  r.n_classes = data.n_classes();
  return r;
}

}  // namespace ovc
