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

#include "ovc/dsp.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

#include "ovc/rng.hpp"

namespace ovc {
namespace {

// The FFTW planner is not reentrant; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Owns one real-to-complex and one complex-to-real plan of a fixed size.
class FftPair {
 public:
  explicit FftPair(int n) : n_(n) {
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    std::lock_guard<std::mutex> lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~FftPair() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;

  double* real() { return real_; }
  fftw_complex* spec() { return spec_; }
  void forward() { fftw_execute(forward_); }
  // Unnormalized; the caller divides by n.
  void inverse() { fftw_execute(inverse_); }
  int size() const { return n_; }

 private:
  int n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

using ComplexSpec = Eigen::MatrixXcd;  // frames x bins

ComplexSpec stft_complex(const std::vector<double>& x, const DspConfig& cfg, FftPair& fft,
                         const std::vector<double>& window) {
  const int win = cfg.win_length();
  const int hop = cfg.hop_length();
  const int frames = frame_count(x.size(), cfg);
  const int bins = cfg.n_bins();
  ComplexSpec out(frames, bins);
  double* buf = fft.real();
  for (int f = 0; f < frames; ++f) {
    const std::size_t start = static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < win; ++i) buf[i] = x[start + i] * window[i];
    std::fill(buf + win, buf + fft.size(), 0.0);
    fft.forward();
    for (int k = 0; k < bins; ++k) out(f, k) = {fft.spec()[k][0], fft.spec()[k][1]};
  }
  return out;
}

/// Least-squares inverse STFT: sum_m w * frame_m / sum_m w^2.
std::vector<double> istft(const ComplexSpec& spec, const DspConfig& cfg, FftPair& fft,
                          const std::vector<double>& window) {
  const int win = cfg.win_length();
  const int hop = cfg.hop_length();
  const int frames = static_cast<int>(spec.rows());
  const int bins = static_cast<int>(spec.cols());
  const std::size_t length = static_cast<std::size_t>(frames - 1) * hop + win;
  std::vector<double> num(length, 0.0), den(length, 0.0);
  const double scale = 1.0 / fft.size();
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < bins; ++k) {
      fft.spec()[k][0] = spec(f, k).real();
      fft.spec()[k][1] = spec(f, k).imag();
    }
    fft.inverse();
    const std::size_t start = static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < win; ++i) {
      num[start + i] += window[i] * fft.real()[i] * scale;
      den[start + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < length; ++i) num[i] = den[i] > 1e-12 ? num[i] / den[i] : 0.0;
  return num;
}

// Antiderivative of the unit-peak triangle (lo, mid, hi).
double triangle_integral(double f, double lo, double mid, double hi) {
  if (f <= lo) return 0.0;
  if (f <= mid) return (f - lo) * (f - lo) / (2.0 * (mid - lo));
  if (f <= hi) return (mid - lo) / 2.0 + (hi - mid) / 2.0 - (hi - f) * (hi - f) / (2.0 * (hi - mid));
  return (hi - lo) / 2.0;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

int DspConfig::win_length() const {
  return static_cast<int>(std::lround(sample_rate_hz * win_length_ms / 1000.0));
}

int DspConfig::hop_length() const {
  return static_cast<int>(std::lround(sample_rate_hz * hop_length_ms / 1000.0));
}

void DspConfig::validate() const {
  auto bad = [](const std::string& why) { return ConfigError("dsp: " + why); };
  if (sample_rate_hz <= 0) throw bad("sample_rate_hz must be positive");
  if (hop_length() < 1) throw bad("hop length rounds to zero samples");
  if (hop_length() > win_length()) throw bad("hop must not exceed window");
  if (fft_size < win_length()) throw bad("fft_size smaller than window length in samples");
  if (n_mels < 1 || n_mels >= n_bins()) throw bad("n_mels must be in [1, fft_size/2 + 1)");
  if (fmin_hz < 0 || fmax_hz <= fmin_hz || fmax_hz > sample_rate_hz / 2.0 + 1e-9)
    throw bad("need 0 <= fmin < fmax <= Nyquist");
  if (!(log_floor > 0)) throw bad("log_floor must be positive");
  if (griffin_lim_iters < 0) throw bad("griffin_lim_iters must be >= 0");
}

std::string DspConfig::fingerprint() const {
  std::ostringstream os;
  os.precision(17);
  os << "sr=" << sample_rate_hz << ";win=" << win_length_ms << ";hop=" << hop_length_ms
     << ";fft=" << fft_size << ";mels=" << n_mels << ";fmin=" << fmin_hz << ";fmax=" << fmax_hz
     << ";floor=" << log_floor << ";trim=" << trim_threshold_db << ";peak=" << peak_dbfs;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
  return hex;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> hann_window(int length) {
  std::vector<double> w(length);
  for (int i = 0; i < length; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / length);
  return w;
}

int frame_count(std::size_t n_samples, const DspConfig& cfg) {
  const std::size_t win = cfg.win_length();
  if (n_samples < win) return 0;
  return static_cast<int>((n_samples - win) / cfg.hop_length() + 1);
}

MelFilterbank::MelFilterbank(const DspConfig& cfg) {
  cfg.validate();
  const int bins = cfg.n_bins();
  const double df = static_cast<double>(cfg.sample_rate_hz) / cfg.fft_size;
  const double mlo = hz_to_mel(cfg.fmin_hz);
  const double mhi = hz_to_mel(cfg.fmax_hz);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edges[i] = mel_to_hz(mlo + (mhi - mlo) * i / (cfg.n_mels + 1));

  // Each weight is the triangle averaged over the bin's frequency interval,
  // so filters narrower than a bin still land on the bin they overlap.
  weights_ = Mat::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double a = (k - 0.5) * df, b = (k + 0.5) * df;
      if (b <= lo || a >= hi) continue;
      weights_(m, k) = (triangle_integral(b, lo, mid, hi) - triangle_integral(a, lo, mid, hi)) / df;
    }
    if (!(weights_.row(m).sum() > 0))
      throw ConfigError("dsp: mel filter " + std::to_string(m) + " is empty at this FFT resolution");
  }
  pinv_ = Eigen::CompleteOrthogonalDecomposition<Mat>(weights_).pseudoInverse();
}

LinearSpectrogram stft_magnitude(const Waveform& w, const DspConfig& cfg) {
  cfg.validate();
  if (w.samples.size() < static_cast<std::size_t>(cfg.win_length()))
    throw SizeError("stft: waveform has " + std::to_string(w.samples.size()) +
                    " samples, window needs " + std::to_string(cfg.win_length()));
  FftPair fft(cfg.fft_size);
  return stft_complex(w.samples, cfg, fft, hann_window(cfg.win_length())).cwiseAbs();
}

MelSpectrogram linear_to_mel(const LinearSpectrogram& s, const MelFilterbank& fb,
                             double log_floor) {
  if (s.cols() != fb.n_bins())
    throw SizeError("linear_to_mel: spectrogram has " + std::to_string(s.cols()) +
                    " bins, filterbank expects " + std::to_string(fb.n_bins()));
  Mat mel = s * fb.weights().transpose();
  return mel.array().max(log_floor).log().matrix();
}

LinearSpectrogram mel_to_linear_approx(const MelSpectrogram& m, const MelFilterbank& fb) {
  if (m.cols() != fb.n_mels())
    throw SizeError("mel_to_linear_approx: expected " + std::to_string(fb.n_mels()) +
                    " mel bins, got " + std::to_string(m.cols()));
  Mat lin = m.array().exp().matrix() * fb.pseudo_inverse().transpose();
  return lin.cwiseMax(0.0);
}

double spectral_convergence(const Waveform& w, const LinearSpectrogram& s, const DspConfig& cfg) {
  LinearSpectrogram est = stft_magnitude(w, cfg);
  const double ref = s.norm();
  if (ref == 0.0) return est.norm();
  return (est.topRows(s.rows()) - s).norm() / ref;
}

Waveform griffin_lim(const LinearSpectrogram& s, const DspConfig& cfg, GriffinLimTrace* trace) {
  cfg.validate();
  if (!s.allFinite()) throw NumericError("griffin_lim: non-finite magnitude");
  if (s.cols() != cfg.n_bins()) throw SizeError("griffin_lim: bin count mismatch");
  if (s.rows() < 1) throw SizeError("griffin_lim: empty spectrogram");
  if ((s.array() < 0).any()) throw NumericError("griffin_lim: negative magnitude");

  FftPair fft(cfg.fft_size);
  const std::vector<double> window = hann_window(cfg.win_length());
  const double ref = s.norm();

  ComplexSpec target(s.rows(), s.cols());
  if (cfg.griffin_lim_random_phase) {
    Rng rng(cfg.griffin_lim_seed);
    for (Eigen::Index f = 0; f < s.rows(); ++f)
      for (Eigen::Index k = 0; k < s.cols(); ++k)
        target(f, k) = std::polar(s(f, k), 2.0 * std::numbers::pi * rng.uniform());
  } else {
    target = s.cast<std::complex<double>>();
  }

  auto convergence = [&](const ComplexSpec& est) {
    return ref > 0 ? (est.cwiseAbs() - s).norm() / ref : est.cwiseAbs().norm();
  };

  std::vector<double> x = istft(target, cfg, fft, window);
  for (int it = 0; it < cfg.griffin_lim_iters; ++it) {
    ComplexSpec est = stft_complex(x, cfg, fft, window);
    if (trace) trace->spectral_convergence.push_back(convergence(est));
    for (Eigen::Index f = 0; f < s.rows(); ++f) {
      for (Eigen::Index k = 0; k < s.cols(); ++k) {
        const std::complex<double> c = est(f, k);
        const double mag = std::abs(c);
        target(f, k) = mag > 0 ? s(f, k) * (c / mag) : std::complex<double>(s(f, k), 0.0);
      }
    }
    x = istft(target, cfg, fft, window);
  }
  if (trace) trace->spectral_convergence.push_back(convergence(stft_complex(x, cfg, fft, window)));
  return Waveform{std::move(x), cfg.sample_rate_hz};
}

Waveform trim_silence(const Waveform& w, double threshold_db) {
  const std::size_t frame = std::max(1, w.sample_rate / 100);
  const std::size_t n_frames = (w.samples.size() + frame - 1) / frame;
  if (n_frames == 0) return w;
  std::vector<double> rms(n_frames, 0.0);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t a = f * frame, b = std::min(w.samples.size(), a + frame);
    double acc = 0.0;
    for (std::size_t i = a; i < b; ++i) acc += w.samples[i] * w.samples[i];
    rms[f] = std::sqrt(acc / static_cast<double>(b - a));
  }
  const double peak = *std::max_element(rms.begin(), rms.end());
  if (peak <= 0.0) return w;
  const double thr = peak * std::pow(10.0, threshold_db / 20.0);
  std::size_t first = 0, last = n_frames - 1;
  while (first < n_frames && rms[first] < thr) ++first;
  while (last > first && rms[last] < thr) --last;
  const std::size_t a = first * frame;
  const std::size_t b = std::min(w.samples.size(), (last + 1) * frame);
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(a),
                     w.samples.begin() + static_cast<std::ptrdiff_t>(b));
  return out;
}

Waveform normalize_peak(const Waveform& w, double peak_dbfs) {
  double peak = 0.0;
  for (double s : w.samples) peak = std::max(peak, std::abs(s));
  if (peak <= 0.0) return w;
  const double gain = std::pow(10.0, peak_dbfs / 20.0) / peak;
  Waveform out = w;
  for (double& s : out.samples) s *= gain;
  return out;
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0 || w.sample_rate <= 0) throw ConfigError("resample: rates must be positive");
  if (w.sample_rate == target_rate) return w;
  const long g = std::gcd(static_cast<long>(w.sample_rate), static_cast<long>(target_rate));
  const long up = target_rate / g;     // L
  const long down = w.sample_rate / g; // M
  const double cutoff = std::min(1.0, static_cast<double>(up) / down);
  constexpr int kZeroCrossings = 16;
  constexpr double kBeta = 8.6;
  const double half_width = kZeroCrossings / cutoff;
  const long taps = static_cast<long>(std::ceil(half_width));
  const double i0_beta = std::cyl_bessel_i(0.0, kBeta);

  auto kernel = [&](double tau) {
    const double r = tau / half_width;
    if (std::abs(r) >= 1.0) return 0.0;
    const double x = cutoff * tau;
    const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    return cutoff * sinc * std::cyl_bessel_i(0.0, kBeta * std::sqrt(1.0 - r * r)) / i0_beta;
  };

  const std::size_t n_in = w.samples.size();
  const std::size_t n_out = static_cast<std::size_t>(
      (static_cast<unsigned long long>(n_in) * up) / down);
  // Polyphase table: phase p holds taps for offsets base-taps+1 .. base+taps.
  const bool tabulate = up <= 4096;
  std::vector<std::vector<double>> table;
  if (tabulate) {
    table.resize(up);
    for (long p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / up;
      table[p].resize(2 * taps);
      for (long j = 0; j < 2 * taps; ++j) table[p][j] = kernel(frac - (j - taps + 1));
    }
  }

  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(n_out);
  for (std::size_t n = 0; n < n_out; ++n) {
    const long long pos = static_cast<long long>(n) * down;
    const long long base = pos / up;
    const long phase = static_cast<long>(pos % up);
    const double frac = static_cast<double>(phase) / up;
    double acc = 0.0;
    for (long j = 0; j < 2 * taps; ++j) {
      const long long k = base + j - taps + 1;
      if (k < 0 || k >= static_cast<long long>(n_in)) continue;
      const double h = tabulate ? table[phase][j] : kernel(frac - (j - taps + 1));
      acc += w.samples[static_cast<std::size_t>(k)] * h;
    }
    out.samples[n] = acc;
  }
  return out;
}

Waveform condition_waveform(const Waveform& w, const DspConfig& cfg) {
  Waveform t = trim_silence(w, cfg.trim_threshold_db);
  t = normalize_peak(t, cfg.peak_dbfs);
  return resample(t, cfg.sample_rate_hz);
}

MelSpectrogram extract_log_mel(const Waveform& conditioned, const DspConfig& cfg,
                               const MelFilterbank& fb) {
  return linear_to_mel(stft_magnitude(conditioned, cfg), fb, cfg.log_floor);
}

}  // namespace ovc
