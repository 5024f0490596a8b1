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

#include "ovc/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ovc::layers {
namespace {

// Macro so the message is only built on failure.
#define OVC_REQUIRE(ok, what) \
  do {                        \
    if (!(ok)) throw SizeError(what); \
  } while (0)

int width_of(const Mat& x, int batch, const char* op) {
  OVC_REQUIRE(batch >= 1 && x.cols() % batch == 0,
          std::string(op) + ": time axis " + std::to_string(x.cols()) +
              " not divisible by batch " + std::to_string(batch));
  return static_cast<int>(x.cols() / batch);
}

// Source column (within one example) feeding output position t through tap
// j, or -1 for zero padding.
inline int source_index(int t, int j, int width, const ConvSpec& s) {
  int idx = t * s.stride + j - (s.kernel - 1) / 2;
  if (idx >= 0 && idx < width) return idx;
  if (s.padding == Padding::zero) return -1;
  idx %= width;
  return idx < 0 ? idx + width : idx;
}

// Output columns [t0, t1) read an in-range input for tap j (stride 1 only).
std::pair<int, int> valid_range(int j, int width, const ConvSpec& s) {
  const int shift = j - (s.kernel - 1) / 2;
  return {std::max(0, -shift), std::min(width, width - shift)};
}

// Tap j: dst[:, out column t] += src[:, input column feeding t].
void gather_tap(const Mat& src, Mat& dst, int j, const ConvSpec& s, int batch, int width,
                int out_width) {
  const bool fast = s.stride == 1 && s.padding == Padding::zero;
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index ob = static_cast<Eigen::Index>(b) * out_width;
    const Eigen::Index ib = static_cast<Eigen::Index>(b) * width;
    if (fast) {
      const auto [t0, t1] = valid_range(j, width, s);
      const int shift = j - (s.kernel - 1) / 2;
      if (t1 > t0) dst.middleCols(ob + t0, t1 - t0) += src.middleCols(ib + t0 + shift, t1 - t0);
      continue;
    }
    for (int t = 0; t < out_width; ++t) {
      const int idx = source_index(t, j, width, s);
      if (idx >= 0) dst.col(ob + t) += src.col(ib + idx);
    }
  }
}

// Adjoint of gather_tap: dst[:, input column] += src[:, out column t].
void scatter_tap(const Mat& src, Mat& dst, int j, const ConvSpec& s, int batch, int width,
                 int out_width) {
  const bool fast = s.stride == 1 && s.padding == Padding::zero;
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index ob = static_cast<Eigen::Index>(b) * out_width;
    const Eigen::Index ib = static_cast<Eigen::Index>(b) * width;
    if (fast) {
      const auto [t0, t1] = valid_range(j, width, s);
      const int shift = j - (s.kernel - 1) / 2;
      if (t1 > t0) dst.middleCols(ib + t0 + shift, t1 - t0) += src.middleCols(ob + t0, t1 - t0);
      continue;
    }
    for (int t = 0; t < out_width; ++t) {
      const int idx = source_index(t, j, width, s);
      if (idx >= 0) dst.col(ib + idx) += src.col(ob + t);
    }
  }
}

void check_finite(const Mat& m, const char* op) {
  if (!m.allFinite()) throw NumericError(std::string(op) + ": non-finite input");
}

}  // namespace

int conv_output_length(int width, const ConvSpec& spec) {
  return (width + spec.stride - 1) / spec.stride;
}

Mat conv1d(const Mat& x, const Mat& weight, const Vec& bias, const ConvSpec& spec, int batch) {
  const int width = width_of(x, batch, "conv1d");
  OVC_REQUIRE(spec.kernel >= 1 && spec.stride >= 1, "conv1d: kernel and stride must be >= 1");
  OVC_REQUIRE(weight.cols() == x.rows() * spec.kernel,
          "conv1d: weight has " + std::to_string(weight.cols()) + " columns, expected " +
              std::to_string(x.rows() * spec.kernel));
  OVC_REQUIRE(bias.size() == weight.rows(), "conv1d: bias size mismatch");
  OVC_REQUIRE(width >= 1, "conv1d: empty input");
  const int out_width = conv_output_length(width, spec);
  const Eigen::Index cin = x.rows();
  Mat out = Mat::Zero(weight.rows(), static_cast<Eigen::Index>(batch) * out_width);
  for (int j = 0; j < spec.kernel; ++j) {
    const Mat z = weight.middleCols(j * cin, cin) * x;
    gather_tap(z, out, j, spec, batch, width, out_width);
  }
  out.colwise() += bias;
  return out;
}

ConvGrads conv1d_backward(const Mat& x, const Mat& weight, const Mat& grad_out,
                          const ConvSpec& spec, int batch, bool need_input) {
  const int width = width_of(x, batch, "conv1d_backward");
  const int out_width = conv_output_length(width, spec);
  OVC_REQUIRE(grad_out.rows() == weight.rows() && grad_out.cols() == static_cast<Eigen::Index>(batch) * out_width,
          "conv1d_backward: gradient shape mismatch");
  const Eigen::Index cin = x.rows();
  ConvGrads g;
  g.weight.resize(weight.rows(), weight.cols());
  g.bias = grad_out.rowwise().sum();
  if (need_input) g.input = Mat::Zero(x.rows(), x.cols());
  Mat shifted(grad_out.rows(), x.cols());
  for (int j = 0; j < spec.kernel; ++j) {
    shifted.setZero();
    scatter_tap(grad_out, shifted, j, spec, batch, width, out_width);
    g.weight.middleCols(j * cin, cin).noalias() = shifted * x.transpose();
    if (need_input) g.input.noalias() += weight.middleCols(j * cin, cin).transpose() * shifted;
  }
  return g;
}

Mat conv_bank(const Mat& x, const std::vector<ConvWeights>& branches, double slope,
              Padding padding, int batch) {
  OVC_REQUIRE(!branches.empty(), "conv_bank: no branches");
  Eigen::Index channels = 0;
  for (const auto& b : branches) channels += b.weight.rows();
  Mat out(channels, x.cols());
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    const ConvSpec spec{static_cast<int>(k) + 1, 1, padding};
    const Mat y = leaky_relu(conv1d(x, branches[k].weight, branches[k].bias, spec, batch), slope);
    out.middleRows(row, y.rows()) = y;
    row += y.rows();
  }
  return out;
}

Mat leaky_relu(const Mat& x, double slope) {
  return x.unaryExpr([slope](double v) { return v > 0 ? v : slope * v; });
}

Mat leaky_relu_backward(const Mat& x, const Mat& grad_out, double slope) {
  return grad_out.binaryExpr(x, [slope](double g, double v) { return v > 0 ? g : slope * g; });
}

Mat instance_norm(const Mat& m, double eps, int batch) {
  check_finite(m, "instance_norm");
  const int width = width_of(m, batch, "instance_norm");
  OVC_REQUIRE(width >= 1, "instance_norm: empty time axis");
  Mat out(m.rows(), m.cols());
  for (int b = 0; b < batch; ++b) {
    const auto x = m.middleCols(static_cast<Eigen::Index>(b) * width, width);
    const Vec mu = x.rowwise().mean();
    const Mat centered = x.colwise() - mu;
    const Vec sigma = (centered.array().square().rowwise().mean() + eps).sqrt().matrix();
    auto y = out.middleCols(static_cast<Eigen::Index>(b) * width, width);
    for (Eigen::Index c = 0; c < m.rows(); ++c) {
      if (sigma(c) > 0)
        y.row(c) = centered.row(c) / sigma(c);
      else
        y.row(c).setZero();
    }
  }
  return out;
}

Mat instance_norm_backward(const Mat& m, const Mat& grad_out, double eps, int batch) {
  const int width = width_of(m, batch, "instance_norm_backward");
  OVC_REQUIRE(grad_out.rows() == m.rows() && grad_out.cols() == m.cols(),
          "instance_norm_backward: gradient shape mismatch");
  Mat dx(m.rows(), m.cols());
  for (int b = 0; b < batch; ++b) {
    const Eigen::Index off = static_cast<Eigen::Index>(b) * width;
    const auto x = m.middleCols(off, width);
    const auto g = grad_out.middleCols(off, width);
    const Vec mu = x.rowwise().mean();
    const Mat centered = x.colwise() - mu;
    const Vec sigma = (centered.array().square().rowwise().mean() + eps).sqrt().matrix();
    for (Eigen::Index c = 0; c < m.rows(); ++c) {
      if (!(sigma(c) > 0)) {
        dx.row(c).segment(off, width).setZero();
        continue;
      }
      const Eigen::RowVectorXd y = centered.row(c) / sigma(c);
      const double g_mean = g.row(c).mean();
      const double gy_mean = g.row(c).cwiseProduct(y).mean();
      dx.row(c).segment(off, width) =
          (g.row(c).array() - g_mean - y.array() * gy_mean).matrix() / sigma(c);
    }
  }
  return dx;
}

Mat adaptive_instance_norm(const Mat& m, const ChannelAffine& affine, double eps) {
  OVC_REQUIRE(affine.gamma.size() == m.rows() && affine.beta.size() == m.rows(),
          "adaptive_instance_norm: affine has " + std::to_string(affine.gamma.size()) +
              " channels, feature map has " + std::to_string(m.rows()));
  Mat y = instance_norm(m, eps);
  y = affine.gamma.asDiagonal() * y;
  y.colwise() += affine.beta;
  return y;
}

AdaInGrads adaptive_instance_norm_backward(const Mat& m, const ChannelAffine& affine,
                                           const Mat& grad_out, double eps) {
  OVC_REQUIRE(affine.gamma.size() == m.rows(), "adaptive_instance_norm_backward: channel mismatch");
  const Mat y = instance_norm(m, eps);
  AdaInGrads g;
  g.gamma = grad_out.cwiseProduct(y).rowwise().sum();
  g.beta = grad_out.rowwise().sum();
  g.input = instance_norm_backward(m, affine.gamma.asDiagonal() * grad_out, eps);
  return g;
}

Mat pixel_shuffle_1d(const Mat& m, int r, int batch) {
  OVC_REQUIRE(r >= 1 && m.rows() % r == 0,
          "pixel_shuffle_1d: " + std::to_string(m.rows()) + " channels not divisible by " +
              std::to_string(r));
  const int width = width_of(m, batch, "pixel_shuffle_1d");
  const Eigen::Index out_c = m.rows() / r;
  Mat out(out_c, m.cols() * r);
  for (int b = 0; b < batch; ++b)
    for (Eigen::Index c = 0; c < out_c; ++c)
      for (int w = 0; w < width; ++w)
        for (int k = 0; k < r; ++k)
          out(c, (static_cast<Eigen::Index>(b) * width + w) * r + k) =
              m(c * r + k, static_cast<Eigen::Index>(b) * width + w);
  return out;
}

Mat pixel_unshuffle_1d(const Mat& m, int r, int batch) {
  const int width = width_of(m, batch, "pixel_unshuffle_1d");
  OVC_REQUIRE(r >= 1 && width % r == 0, "pixel_unshuffle_1d: time axis not divisible by factor");
  const int in_w = width / r;
  Mat out(m.rows() * r, m.cols() / r);
  for (int b = 0; b < batch; ++b)
    for (Eigen::Index c = 0; c < m.rows(); ++c)
      for (int w = 0; w < in_w; ++w)
        for (int k = 0; k < r; ++k)
          out(c * r + k, static_cast<Eigen::Index>(b) * in_w + w) =
              m(c, (static_cast<Eigen::Index>(b) * in_w + w) * r + k);
  return out;
}

Mat avg_pool_over_time(const Mat& m, int batch) {
  const int width = width_of(m, batch, "avg_pool_over_time");
  OVC_REQUIRE(width >= 1, "avg_pool_over_time: empty time axis");
  Mat out(m.rows(), batch);
  for (int b = 0; b < batch; ++b)
    out.col(b) = m.middleCols(static_cast<Eigen::Index>(b) * width, width).rowwise().mean();
  return out;
}

Mat avg_pool_over_time_backward(const Mat& grad_out, int width) {
  Mat dx(grad_out.rows(), grad_out.cols() * width);
  for (Eigen::Index b = 0; b < grad_out.cols(); ++b)
    dx.middleCols(b * width, width) = (grad_out.col(b) / width).replicate(1, width);
  return dx;
}

Mat dense(const Mat& x, const Mat& weight, const Vec& bias) {
  OVC_REQUIRE(weight.cols() == x.rows(),
          "dense: weight expects " + std::to_string(weight.cols()) + " inputs, got " +
              std::to_string(x.rows()));
  OVC_REQUIRE(bias.size() == weight.rows(), "dense: bias size mismatch");
  Mat y = weight * x;
  y.colwise() += bias;
  return y;
}

DenseGrads dense_backward(const Mat& x, const Mat& weight, const Mat& grad_out) {
  OVC_REQUIRE(grad_out.rows() == weight.rows() && grad_out.cols() == x.cols(),
          "dense_backward: gradient shape mismatch");
  return {weight.transpose() * grad_out, grad_out * x.transpose(), grad_out.rowwise().sum()};
}

Mat residual_block(const Mat& x, const Mat& weight, const Vec& bias, double slope) {
  OVC_REQUIRE(weight.rows() == x.rows(), "residual_block: inner layer must preserve width");
  return x + leaky_relu(dense(x, weight, bias), slope);
}

Mat dropout(const Mat& x, double rate, Rng& rng, bool train, Mat* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
  if (!train || rate == 0.0) {
    if (mask) *mask = Mat::Ones(x.rows(), x.cols());
    return x;
  }
  const double scale = 1.0 / (1.0 - rate);
  Mat m(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() < rate ? 0.0 : scale;
  Mat y = x.cwiseProduct(m);
  if (mask) *mask = std::move(m);
  return y;
}

}  // namespace ovc::layers
