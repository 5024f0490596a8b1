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
#include "ovc/wav.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ovc {

/// Feature-extraction and vocoder settings. Defaults: 24 kHz audio, 50 ms
/// Hann window, 12.5 ms hop, 2048-point FFT, 512 mel bins, 100 Griffin-Lim
/// iterations.
struct DspConfig {
  int sample_rate_hz = 24000;
  double win_length_ms = 50.0;
  double hop_length_ms = 12.5;
  int fft_size = 2048;
  int n_mels = 512;
  double fmin_hz = 0.0;
  double fmax_hz = 12000.0;
  double log_floor = 1e-5;
  int griffin_lim_iters = 100;
  bool griffin_lim_random_phase = false;
  std::uint64_t griffin_lim_seed = 0;
  double trim_threshold_db = -40.0;  // relative to the loudest 10 ms frame
  double peak_dbfs = -3.0;

  int win_length() const;
  int hop_length() const;
  int n_bins() const { return fft_size / 2 + 1; }

  /// Throws ConfigError when the invariants (hop <= win <= fft,
  /// n_mels < bins, 0 <= fmin < fmax <= Nyquist) do not hold.
  void validate() const;

  /// Hash over every field that changes the extracted features.
  std::string fingerprint() const;
};

/// n_mels x bins triangular filters plus their Moore-Penrose pseudo-inverse
/// (bins x n_mels).
class MelFilterbank {
 public:
  explicit MelFilterbank(const DspConfig& cfg);

  const Mat& weights() const { return weights_; }
  const Mat& pseudo_inverse() const { return pinv_; }
  int n_mels() const { return static_cast<int>(weights_.rows()); }
  int n_bins() const { return static_cast<int>(weights_.cols()); }

 private:
  Mat weights_;
  Mat pinv_;
};

inline MelFilterbank build_mel_filterbank(const DspConfig& cfg) { return MelFilterbank(cfg); }

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// Periodic Hann window.
std::vector<double> hann_window(int length);

/// Left-aligned framing: frames = floor((n - win) / hop) + 1.
int frame_count(std::size_t n_samples, const DspConfig& cfg);

LinearSpectrogram stft_magnitude(const Waveform& w, const DspConfig& cfg);

/// log(max(fb * |S|^T, log_floor)), returned as frames x n_mels.
MelSpectrogram linear_to_mel(const LinearSpectrogram& s, const MelFilterbank& fb,
                             double log_floor);

/// exp(m) projected through the pseudo-inverse, negatives clamped to zero.
LinearSpectrogram mel_to_linear_approx(const MelSpectrogram& m, const MelFilterbank& fb);

/// Per-iteration spectral convergence ||  |STFT(x_i)| - S || / ||S||, for
/// x_0 (initial phase) through x_n.
struct GriffinLimTrace {
  std::vector<double> spectral_convergence;
};

/// Plain Griffin-Lim: exactly cfg.griffin_lim_iters magnitude projections.
/// Output length is (frames - 1) * hop + win.
Waveform griffin_lim(const LinearSpectrogram& s, const DspConfig& cfg,
                     GriffinLimTrace* trace = nullptr);

double spectral_convergence(const Waveform& w, const LinearSpectrogram& s, const DspConfig& cfg);

// Waveform conditioning applied before feature extraction.

/// Drops leading/trailing 10 ms frames whose RMS is below threshold_db
/// relative to the loudest frame. Internal pauses are kept.
Waveform trim_silence(const Waveform& w, double threshold_db);

/// Scales so the absolute sample peak sits at peak_dbfs. Silence is returned unchanged.
Waveform normalize_peak(const Waveform& w, double peak_dbfs);

/// Windowed-sinc (Kaiser) band-limited resampling.
Waveform resample(const Waveform& w, int target_rate);

/// trim -> peak-normalize -> resample to cfg.sample_rate_hz.
Waveform condition_waveform(const Waveform& w, const DspConfig& cfg);

/// Full feature path from conditioned audio: STFT -> mel -> log.
MelSpectrogram extract_log_mel(const Waveform& conditioned, const DspConfig& cfg,
                               const MelFilterbank& fb);

}  // namespace ovc
