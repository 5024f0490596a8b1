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

#include "ovc/model.hpp"

#include <cmath>

namespace ovc {
namespace {

using layers::ConvSpec;
using layers::Padding;

bool is_upsampling_block(const ArchConfig& a, int i) { return i >= a.n_dec_blocks - a.n_stages(); }

struct Builder {
  Tape& t;
  const ArchConfig& arch;
  const ModelParams& p;
  ForwardContext& ctx;

  Var param(const std::string& name) { return t.parameter(name, p.at(name)); }

  Var conv(const std::string& prefix, Var x, const ConvSpec& spec) {
    return ops::conv1d(t, x, param(prefix + ".weight"), param(prefix + ".bias"), spec);
  }

  Var dense(const std::string& prefix, Var x) {
    return ops::dense(t, x, param(prefix + ".weight"), param(prefix + ".bias"));
  }

  Var act_drop(Var x) {
    return ops::dropout(t, ops::leaky_relu(t, x), arch.dropout_rate, ctx.rng,
                        ctx.mode == Mode::train);
  }

  void trace(const std::string& name, Var v) {
    if (ctx.trace) ctx.trace->values[name] = t.value(v);
  }

  Var maybe_norm(const std::string& name, Var x, bool use_in) {
    if (!use_in) return x;
    trace(name + ".pre_in", x);
    Var y = ops::instance_norm(t, x);
    trace(name + ".post_in", y);
    return y;
  }

  // ConvBank -> 1x1 projection -> conv blocks (the first n_stages strided).
  Var trunk(const std::string& prefix, Var x, Padding padding, bool use_in) {
    std::vector<Var> branches;
    for (int k = 1; k <= arch.convbank_k; ++k)
      branches.push_back(ops::leaky_relu(t, conv(prefix + ".bank.k" + std::to_string(k), x, {k, 1, padding})));
    Var h = ops::concat_channels(t, branches);
    h = conv(prefix + ".in_conv", h, {1, 1, padding});
    h = act_drop(maybe_norm(prefix + ".in_conv", h, use_in));
    for (int i = 0; i < arch.n_enc_blocks; ++i) {
      const std::string name = prefix + ".block" + std::to_string(i);
      const int stride = i < arch.n_stages() ? 2 : 1;
      Var y = conv(name, h, {arch.kernel_size, stride, padding});
      y = act_drop(maybe_norm(name, y, use_in));
      h = stride == 1 ? ops::add(t, h, y) : y;
    }
    return h;
  }
};

void check_mels(const ArchConfig& arch, const Mat& x, const char* who) {
  if (x.rows() != arch.n_mels)
    throw SizeError(std::string(who) + ": expected " + std::to_string(arch.n_mels) +
                    " mel channels, got " + std::to_string(x.rows()));
}

}  // namespace

ArchConfig ArchConfig::tiny() {
  ArchConfig a;
  a.convbank_k = 3;
  a.bank_channels = 8;
  a.enc_channels = 48;
  a.n_enc_blocks = 3;
  a.downsample_factor = 4;
  a.speaker_dim = 32;
  a.content_channels = 16;
  a.dec_channels = 48;
  a.n_dec_blocks = 3;
  a.n_dense_blocks = 2;
  a.kernel_size = 3;
  return a;
}

int ArchConfig::n_stages() const {
  int s = 0;
  for (int f = downsample_factor; f > 1; f /= 2) ++s;
  return s;
}

void ArchConfig::validate() const {
  auto bad = [](const std::string& why) { return ConfigError("arch: " + why); };
  if (n_mels < 1 || convbank_k < 1 || bank_channels < 1 || enc_channels < 1 || speaker_dim < 1 ||
      content_channels < 1 || dec_channels < 1 || kernel_size < 1)
    throw bad("all sizes must be positive");
  if (n_enc_blocks < 0 || n_dec_blocks < 0 || n_dense_blocks < 0)
    throw bad("block counts must be non-negative");
  if (downsample_factor < 1 || (downsample_factor & (downsample_factor - 1)) != 0)
    throw bad("downsample_factor must be a power of two");
  if (n_stages() > n_enc_blocks || n_stages() > n_dec_blocks)
    throw bad("not enough blocks for " + std::to_string(n_stages()) + " stride-2 stages");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw bad("dropout_rate must be in [0, 1)");
}

const char* to_string(AblationSetting s) {
  switch (s) {
    case AblationSetting::content_with_in: return "content_with_in";
    case AblationSetting::content_without_in: return "content_without_in";
    case AblationSetting::content_without_in_speaker_with_in: return "content_without_in_speaker_with_in";
  }
  return "?";
}

AblationSetting ablation_from_string(const std::string& s) {
  for (auto a : {AblationSetting::content_with_in, AblationSetting::content_without_in,
                 AblationSetting::content_without_in_speaker_with_in})
    if (s == to_string(a)) return a;
  throw ConfigError("unknown ablation setting '" + s + "'");
}

ArchConfig apply_ablation(ArchConfig arch, AblationSetting s) {
  arch.content_in = s == AblationSetting::content_with_in;
  arch.speaker_in = s == AblationSetting::content_without_in_speaker_with_in;
  return arch;
}

std::vector<std::pair<std::string, TensorShape>> parameter_shapes(const ArchConfig& a) {
  a.validate();
  std::vector<std::pair<std::string, TensorShape>> s;
  auto add = [&](const std::string& name, Eigen::Index out, Eigen::Index in) {
    s.push_back({name + ".weight", {out, in}});
    s.push_back({name + ".bias", {out, 1}});
  };
  for (const std::string enc : {"speaker", "content"}) {
    for (int k = 1; k <= a.convbank_k; ++k)
      add(enc + ".bank.k" + std::to_string(k), a.bank_channels, k * a.n_mels);
    add(enc + ".in_conv", a.enc_channels, a.convbank_k * a.bank_channels);
    for (int i = 0; i < a.n_enc_blocks; ++i)
      add(enc + ".block" + std::to_string(i), a.enc_channels, a.kernel_size * a.enc_channels);
  }
  add("speaker.out", a.speaker_dim, a.enc_channels);
  add("content.mean", a.content_channels, a.enc_channels);
  for (int j = 0; j < a.n_dense_blocks; ++j)
    add("decoder.dense" + std::to_string(j), a.speaker_dim, a.speaker_dim);
  add("decoder.in_conv", a.dec_channels, a.content_channels);
  for (int i = 0; i < a.n_dec_blocks; ++i) {
    const int r = is_upsampling_block(a, i) ? 2 : 1;
    const std::string name = "decoder.block" + std::to_string(i);
    add(name, a.dec_channels * r, a.kernel_size * a.dec_channels);
    add(name + ".affine", 2 * a.dec_channels * r, a.speaker_dim);
  }
  add("decoder.out", a.n_mels, a.dec_channels);
  return s;
}

const Mat& ModelParams::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ConfigError("model has no parameter '" + name + "'");
  return it->second;
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto& [_, m] : tensors) n += static_cast<std::size_t>(m.size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& [_, m] : tensors)
    if (!m.allFinite()) return false;
  return true;
}

ModelParams init_params(const ArchConfig& arch, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams p;
  // Biases share the bound of their weight's fan-in.
  double bound = 1.0;
  for (const auto& [name, shape] : parameter_shapes(arch)) {
    const bool is_bias = name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0;
    if (!is_bias) bound = 1.0 / std::sqrt(static_cast<double>(shape.second));
    Mat m(shape.first, shape.second);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
    if (is_bias && name.find(".affine.") != std::string::npos) {
      const Eigen::Index c = shape.first / 2;
      m.topRows(c).setOnes();
      m.bottomRows(c).setZero();
    }
    p.tensors[name] = std::move(m);
  }
  return p;
}

namespace graph {

Var speaker_encoder(Tape& t, const ArchConfig& arch, const ModelParams& p, Var x,
                    ForwardContext& ctx) {
  check_mels(arch, t.value(x), "speaker_encode");
  const Eigen::Index frames = t.value(x).cols() / t.batch(x);
  if (frames < arch.downsample_factor)
    throw SizeError("speaker_encode: need at least " + std::to_string(arch.downsample_factor) +
                    " frames, got " + std::to_string(frames));
  Builder b{t, arch, p, ctx};
  // Circular padding: the pooled code of a periodic input equals that of one period.
  Var h = b.trunk("speaker", x, Padding::circular, arch.speaker_in);
  Var pooled = ops::avg_pool(t, h);
  b.trace("speaker.pooled", pooled);
  return b.dense("speaker.out", pooled);
}

Var content_encoder(Tape& t, const ArchConfig& arch, const ModelParams& p, Var x,
                    ForwardContext& ctx) {
  check_mels(arch, t.value(x), "content_encode");
  const Eigen::Index frames = t.value(x).cols() / t.batch(x);
  if (frames < 1 || frames % arch.downsample_factor != 0)
    throw SizeError("content_encode: " + std::to_string(frames) +
                    " frames is not a positive multiple of " + std::to_string(arch.downsample_factor));
  Builder b{t, arch, p, ctx};
  Var h = b.trunk("content", x, Padding::zero, arch.content_in);
  return b.conv("content.mean", h, {1, 1, Padding::zero});
}

Var decoder(Tape& t, const ArchConfig& arch, const ModelParams& p, Var z_s, Var z_c,
            ForwardContext& ctx) {
  if (t.value(z_s).rows() != arch.speaker_dim)
    throw SizeError("decode: speaker code has " + std::to_string(t.value(z_s).rows()) +
                    " entries, expected " + std::to_string(arch.speaker_dim));
  if (t.value(z_c).rows() != arch.content_channels)
    throw SizeError("decode: content code has " + std::to_string(t.value(z_c).rows()) +
                    " channels, expected " + std::to_string(arch.content_channels));
  if (t.value(z_s).cols() != t.batch(z_c) || t.value(z_c).cols() < t.batch(z_c))
    throw SizeError("decode: speaker/content batch mismatch or empty content code");
  Builder b{t, arch, p, ctx};
  Var s = z_s;
  for (int j = 0; j < arch.n_dense_blocks; ++j)
    s = ops::add(t, s, b.act_drop(b.dense("decoder.dense" + std::to_string(j), s)));

  Var h = b.act_drop(b.conv("decoder.in_conv", z_c, {1, 1, Padding::zero}));
  for (int i = 0; i < arch.n_dec_blocks; ++i) {
    const std::string name = "decoder.block" + std::to_string(i);
    const int r = is_upsampling_block(arch, i) ? 2 : 1;
    Var affine = b.dense(name + ".affine", s);
    Var y = b.conv(name, h, {arch.kernel_size, 1, Padding::zero});
    b.trace(name + ".pre_adain", y);
    y = ops::adaptive_instance_norm(t, y, affine);
    b.trace(name + ".affine", affine);
    b.trace(name + ".post_adain", y);
    y = ops::pixel_shuffle(t, b.act_drop(y), r);
    h = r == 1 ? ops::add(t, h, y) : y;
  }
  return b.conv("decoder.out", h, {1, 1, Padding::zero});
}

}  // namespace graph

Model::Model(ArchConfig arch, ModelParams params) : arch_(arch), params_(std::move(params)) {
  arch_.validate();
  for (const auto& [name, shape] : parameter_shapes(arch_)) {
    const Mat& m = params_.at(name);
    if (m.rows() != shape.first || m.cols() != shape.second)
      throw ConfigError("parameter " + name + " has shape " + std::to_string(m.rows()) + "x" +
                        std::to_string(m.cols()) + ", architecture expects " +
                        std::to_string(shape.first) + "x" + std::to_string(shape.second));
  }
}

Vec Model::speaker_encode(const MelSpectrogram& x, ForwardContext ctx) const {
  Tape t(false);
  Var in = t.constant(x.transpose());
  return t.value(graph::speaker_encoder(t, arch_, params_, in, ctx)).col(0);
}

Mat Model::content_encode(const MelSpectrogram& x, ForwardContext ctx) const {
  Tape t(false);
  Var in = t.constant(x.transpose());
  return t.value(graph::content_encoder(t, arch_, params_, in, ctx));
}

MelSpectrogram Model::decode(const Vec& z_s, const Mat& z_c, ForwardContext ctx) const {
  Tape t(false);
  Var s = t.constant(z_s);
  Var c = t.constant(z_c);
  return t.value(graph::decoder(t, arch_, params_, s, c, ctx)).transpose();
}

MelSpectrogram Model::autoencode(const MelSpectrogram& x) const {
  return decode(speaker_encode(x), content_encode(x));
}

}  // namespace ovc
