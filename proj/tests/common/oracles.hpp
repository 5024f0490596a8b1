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

#include <unistd.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ovc/common.hpp"
#include "ovc/rng.hpp"

namespace ovc::test {

inline Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

/// Channels rescaled to an exact sample std drawn from [lo, hi] (W >= 2).
inline Mat map_with_channel_std(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Mat m = random_mat(rng, rows, cols);
  if (cols < 2) return m;
  for (Eigen::Index c = 0; c < rows; ++c) {
    const double mu = m.row(c).mean();
    m.row(c).array() -= mu;
    const double sd = std::sqrt(m.row(c).squaredNorm() / static_cast<double>(cols));
    m.row(c) *= (lo + (hi - lo) * rng.uniform()) / sd;
    m.row(c).array() += 5 * rng.normal();
  }
  return m;
}

struct ChannelStats {
  Vec mean;
  Vec std;
};

/// Two-pass population mean and std per row.
inline ChannelStats two_pass_stats(const Mat& m) {
  ChannelStats s{Vec(m.rows()), Vec(m.rows())};
  for (Eigen::Index c = 0; c < m.rows(); ++c) {
    double mu = 0;
    for (Eigen::Index w = 0; w < m.cols(); ++w) mu += m(c, w);
    mu /= static_cast<double>(m.cols());
    double v = 0;
    for (Eigen::Index w = 0; w < m.cols(); ++w) v += (m(c, w) - mu) * (m(c, w) - mu);
    s.mean(c) = mu;
    s.std(c) = std::sqrt(v / static_cast<double>(m.cols()));
  }
  return s;
}

inline int random_int(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

/// |X[k]| of a windowed frame by the O(N^2) definition.
inline std::vector<double> brute_dft_magnitude(const std::vector<double>& frame, int n_fft) {
  std::vector<double> out(n_fft / 2 + 1);
  for (int k = 0; k <= n_fft / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n)
      acc += frame[n] * std::polar(1.0, -2.0 * M_PI * k * static_cast<double>(n) / n_fft);
    out[static_cast<std::size_t>(k)] = std::abs(acc);
  }
  return out;
}

inline std::vector<double> sine(double hz, double seconds, int rate, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2 * M_PI * hz * i / rate);
  return x;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ovc_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

/// Central finite difference of f along every entry of x, restoring x after.
inline Mat numeric_gradient(const std::function<double()>& f, Mat& x, double h) {
  Mat g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f();
    x.data()[i] = keep - h;
    const double down = f();
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double relative_error(const Mat& a, const Mat& b) {
  const double denom = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / denom;
}

// Block-wise least-squares fit of a sinusoid at hz; returns fitted/residual energy in dB
// and the mean fitted amplitude.
inline std::pair<double, double> tone_fit_snr(const std::vector<double>& y, double hz, int rate,
                                              int lo, int hi, int block) {
  double fit = 0, resid = 0, amp = 0;
  int blocks = 0;
  for (int st = lo; st + block <= hi; st += block, ++blocks) {
    Eigen::MatrixXd a(block, 2);
    Eigen::VectorXd b(block);
    for (int i = 0; i < block; ++i) {
      const double ph = 2 * M_PI * hz * (st + i) / rate;
      a(i, 0) = std::sin(ph);
      a(i, 1) = std::cos(ph);
      b(i) = y[static_cast<std::size_t>(st + i)];
    }
    Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);
    fit += (a * x).squaredNorm();
    resid += (b - a * x).squaredNorm();
    amp += x.norm();
  }
  return {10 * std::log10(fit / resid), amp / blocks};
}

}  // namespace ovc::test
