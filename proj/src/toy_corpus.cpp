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

#include "ovc/toy_corpus.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <fstream>

#include "ovc/common.hpp"
#include "ovc/rng.hpp"
#include "ovc/wav.hpp"

namespace fs = std::filesystem;

namespace ovc {
namespace {

constexpr double kPi = 3.14159265358979323846;

// F1, F2, F3 (Hz) of an adult reference voice.
constexpr std::array<std::array<double, 3>, 10> kVowels = {{
    {730, 1090, 2440}, {270, 2290, 3010}, {530, 1840, 2480}, {660, 1720, 2410},
    {300, 870, 2240}, {640, 1190, 2390}, {490, 1350, 1690}, {570, 840, 2410},
    {440, 1020, 2240}, {390, 1990, 2550},
}};
constexpr std::array<double, 3> kBandwidth = {90, 110, 170};
constexpr std::array<double, 3> kFormantGain = {1.0, 0.6, 0.35};

double envelope(double f, const std::array<double, 3>& formants, const ToySpeaker& s) {
  double e = 0.02;
  for (int i = 0; i < 3; ++i) {
    const double d = (f - formants[i] * s.tract_scale) / (0.5 * kBandwidth[i] * s.tract_scale);
    e += kFormantGain[i] / (1.0 + d * d);
  }
  return e * std::pow(1.0 + f / 300.0, -s.tilt);
}

}  // namespace

std::vector<ToySpeaker> toy_speakers(const ToyCorpusConfig& cfg) {
  if (cfg.n_speakers < 1) throw ConfigError("toy corpus: n_speakers must be >= 1");
  Rng rng(cfg.seed);
  std::vector<double> scales, tilts;
  for (int i = 0; i < cfg.n_speakers; ++i) {
    const double u = cfg.n_speakers > 1 ? static_cast<double>(i) / (cfg.n_speakers - 1) : 0.5;
    scales.push_back(0.8 + 0.45 * u);
    tilts.push_back(0.6 + 1.0 * u);
  }
  // Decorrelate the timbre axes from pitch.
  shuffle(scales, rng);
  shuffle(tilts, rng);
  std::vector<ToySpeaker> out;
  for (int i = 0; i < cfg.n_speakers; ++i) {
    const double u = cfg.n_speakers > 1 ? static_cast<double>(i) / (cfg.n_speakers - 1) : 0.5;
    ToySpeaker s;
    char id[16];
    std::snprintf(id, sizeof id, "spk%02d", i);
    s.id = id;
    s.f0_hz = 90.0 * std::pow(270.0 / 90.0, u) * (1.0 + 0.04 * (rng.uniform() - 0.5));
    s.tract_scale = scales[static_cast<std::size_t>(i)];
    s.tilt = tilts[static_cast<std::size_t>(i)];
    s.breath = 0.02 + 0.1 * rng.uniform();
    s.gender = s.f0_hz < 160.0 ? "M" : "F";
    out.push_back(s);
  }
  return out;
}

std::vector<double> synthesize_toy_utterance(const ToySpeaker& spk, const ToyCorpusConfig& cfg,
                                             std::uint64_t utterance_seed) {
  Rng rng(utterance_seed);
  const double sr = cfg.sample_rate;
  const double voiced_s =
      cfg.min_duration_s + (cfg.max_duration_s - cfg.min_duration_s) * rng.uniform();

  struct Phone {
    std::array<double, 3> formants;
    std::size_t samples;
  };
  std::vector<Phone> phones;
  std::size_t total = 0;
  const auto target = static_cast<std::size_t>(voiced_s * sr);
  while (total < target) {
    Phone p{kVowels[rng.below(kVowels.size())], static_cast<std::size_t>((0.08 + 0.12 * rng.uniform()) * sr)};
    p.samples = std::min(p.samples, target - total);
    total += p.samples;
    phones.push_back(p);
  }

  const auto pad = static_cast<std::size_t>(cfg.silence_s * sr);
  std::vector<double> out(pad + total + pad, 0.0);
  const int max_harmonics = static_cast<int>(0.45 * sr / (spk.f0_hz * 0.8));
  // Harmonic k has phase k * theta + offset_k; powers of e^{i theta} by recurrence.
  std::vector<std::complex<double>> offset(static_cast<std::size_t>(max_harmonics));
  for (auto& o : offset) o = std::polar(1.0, 2 * kPi * rng.uniform());
  double theta = 0.0;
  const double declination = 0.85 + 0.1 * rng.uniform();
  const double vibrato_hz = 4.0 + 2.0 * rng.uniform();

  std::size_t pos = 0;
  std::vector<double> amp(static_cast<std::size_t>(max_harmonics)), prev_amp;
  for (std::size_t p = 0; p < phones.size(); ++p) {
    const auto& ph = phones[p];
    const double f0_mid = spk.f0_hz * (1.0 + (declination - 1.0) * (pos + 0.5 * ph.samples) / total);
    for (int k = 1; k <= max_harmonics; ++k)
      amp[static_cast<std::size_t>(k - 1)] =
          k * f0_mid < 0.45 * sr ? envelope(k * f0_mid, ph.formants, spk) : 0.0;
    if (prev_amp.empty()) prev_amp = amp;
    // Cross-fade harmonic amplitudes over the first 30 ms of each phone.
    const double fade = 0.03 * sr;
    for (std::size_t n = 0; n < ph.samples; ++n, ++pos) {
      const double t = static_cast<double>(pos) / sr;
      const double f0 = spk.f0_hz * (1.0 + (declination - 1.0) * static_cast<double>(pos) / total) *
                        (1.0 + 0.01 * std::sin(2 * kPi * vibrato_hz * t));
      theta = std::fmod(theta + 2 * kPi * f0 / sr, 2 * kPi);
      const std::complex<double> step = std::polar(1.0, theta);
      const int audible = std::min(max_harmonics, static_cast<int>(0.45 * sr / f0));
      const double w = std::min(1.0, static_cast<double>(n) / fade);
      std::complex<double> z = 1.0;
      double s = 0.0;
      for (int k = 1; k <= audible; ++k) {
        const auto i = static_cast<std::size_t>(k - 1);
        z *= step;
        s += ((1 - w) * prev_amp[i] + w * amp[i]) * (z * offset[i]).imag();
      }
      out[pad + pos] = s + spk.breath * 0.3 * rng.normal();
    }
    prev_amp = amp;
  }

  // Attack/release ramps, then a faint noise floor so silence is not exact zero.
  const auto ramp = static_cast<std::size_t>(0.02 * sr);
  for (std::size_t n = 0; n < ramp && n < total; ++n) {
    const double g = static_cast<double>(n) / ramp;
    out[pad + n] *= g;
    out[pad + total - 1 - n] *= g;
  }
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  for (double& v : out) v = 0.5 * v / std::max(peak, 1e-12) + 1e-4 * rng.normal();
  return out;
}

std::vector<ToySpeaker> write_toy_corpus(const fs::path& root, const ToyCorpusConfig& cfg) {
  if (cfg.utterances_per_speaker < 1) throw ConfigError("toy corpus: utterances_per_speaker must be >= 1");
  const auto speakers = toy_speakers(cfg);
  fs::create_directories(root);
  std::ofstream info(root / "speaker-info.txt");
  info << "ID  AGE  GENDER  F0\n";
  for (std::size_t s = 0; s < speakers.size(); ++s) {
    const auto& spk = speakers[s];
    info << spk.id << "  0  " << spk.gender << "  " << std::lround(spk.f0_hz) << "\n";
    fs::create_directories(root / spk.id);
    for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
      Waveform w;
      w.sample_rate = cfg.sample_rate;
      w.samples = synthesize_toy_utterance(spk, cfg, cfg.seed * 1000003ULL + s * 10007ULL + u + 1);
      char name[64];
      std::snprintf(name, sizeof name, "%s_%03d.wav", spk.id.c_str(), u + 1);
      write_wav(root / spk.id / name, w);
    }
  }
  return speakers;
}

}  // namespace ovc
