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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ovc {

/// Synthetic multi-speaker corpus: vowel sequences from a shared inventory
/// rendered with per-speaker pitch, vocal-tract scaling, spectral tilt and
/// breathiness.
struct ToyCorpusConfig {
  int n_speakers = 8;
  int utterances_per_speaker = 50;
  int sample_rate = 24000;
  double min_duration_s = 1.9;  // voiced part, silence padding excluded
  double max_duration_s = 2.8;
  double silence_s = 0.2;
  std::uint64_t seed = 0;
};

struct ToySpeaker {
  std::string id;
  double f0_hz = 0.0;
  double tract_scale = 1.0;  // formant frequency multiplier
  double tilt = 1.0;         // spectral slope exponent
  double breath = 0.0;       // aspiration noise level relative to voicing
  std::string gender;        // "M" below 160 Hz, else "F"
};

std::vector<ToySpeaker> toy_speakers(const ToyCorpusConfig& cfg);

/// One utterance as samples in [-1, 1].
std::vector<double> synthesize_toy_utterance(const ToySpeaker& spk, const ToyCorpusConfig& cfg,
                                             std::uint64_t utterance_seed);

/// Writes <root>/<speaker>/<speaker>_<nnn>.wav and <root>/speaker-info.txt.
std::vector<ToySpeaker> write_toy_corpus(const std::filesystem::path& root,
                                         const ToyCorpusConfig& cfg);

}  // namespace ovc
