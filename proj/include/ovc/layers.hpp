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

#include <vector>

// Forward and backward kernels for every building block of the networks.
// A feature map is a channels x time matrix; several examples of equal
// length can be laid side by side along the time axis (`batch` argument),
// in which case per-example operations never mix across the seams.
namespace ovc::layers {

using FeatureMap = Mat;

constexpr double kNormEps = 1e-5;
constexpr double kLeakySlope = 0.2;

/// Per-channel (gamma, beta) for adaptive instance normalization.
struct ChannelAffine {
  Vec gamma;
  Vec beta;
};

enum class Padding { zero, circular };

/// 'same' padding: for stride 1 the output keeps the input length, for
/// stride s it is ceil(W / s). Left pad is (kernel - 1) / 2.
struct ConvSpec {
  int kernel = 1;
  int stride = 1;
  Padding padding = Padding::zero;
};

struct ConvWeights {
  Mat weight;  // C_out x (kernel * C_in); column j * C_in + c is tap j of channel c
  Vec bias;    // C_out
};

struct ConvGrads {
  Mat input;
  Mat weight;
  Vec bias;
};

int conv_output_length(int width, const ConvSpec& spec);

Mat conv1d(const Mat& x, const Mat& weight, const Vec& bias, const ConvSpec& spec, int batch = 1);
ConvGrads conv1d_backward(const Mat& x, const Mat& weight, const Mat& grad_out,
                          const ConvSpec& spec, int batch = 1, bool need_input = true);

/// Branch k (1-based) has kernel size k. Output is the channel concatenation
/// of leaky_relu(conv_k(x)), time length preserved.
Mat conv_bank(const Mat& x, const std::vector<ConvWeights>& branches, double slope,
              Padding padding = Padding::zero, int batch = 1);

Mat leaky_relu(const Mat& x, double slope);
Mat leaky_relu_backward(const Mat& x, const Mat& grad_out, double slope);

/// Per channel: (M_c - mean) / sqrt(population variance + eps). A channel
/// whose denominator is exactly zero maps to zeros.
Mat instance_norm(const Mat& m, double eps, int batch = 1);
Mat instance_norm_backward(const Mat& m, const Mat& grad_out, double eps, int batch = 1);

/// gamma_c * IN(M)_c + beta_c.
Mat adaptive_instance_norm(const Mat& m, const ChannelAffine& affine, double eps);

struct AdaInGrads {
  Mat input;
  Vec gamma;
  Vec beta;
};
AdaInGrads adaptive_instance_norm_backward(const Mat& m, const ChannelAffine& affine,
                                           const Mat& grad_out, double eps);

/// (C x W) -> (C/r x W*r) with out[c][w*r + k] = in[c*r + k][w].
Mat pixel_shuffle_1d(const Mat& m, int r, int batch = 1);
/// Exact inverse of pixel_shuffle_1d; also its backward pass.
Mat pixel_unshuffle_1d(const Mat& m, int r, int batch = 1);

/// Time average per channel; columns of the result are examples.
Mat avg_pool_over_time(const Mat& m, int batch = 1);
Mat avg_pool_over_time_backward(const Mat& grad_out, int width);

/// x is D_in x batch.
Mat dense(const Mat& x, const Mat& weight, const Vec& bias);
struct DenseGrads {
  Mat input;
  Mat weight;
  Vec bias;
};
DenseGrads dense_backward(const Mat& x, const Mat& weight, const Mat& grad_out);

/// x + leaky_relu(dense(x)).
Mat residual_block(const Mat& x, const Mat& weight, const Vec& bias, double slope);

/// Inverted dropout: kept entries are scaled by 1/(1 - rate). Identity when
/// !train or rate == 0. The mask (0 or the scale) is written to *mask if given.
Mat dropout(const Mat& x, double rate, Rng& rng, bool train, Mat* mask = nullptr);

}  // namespace ovc::layers
