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

#include "ovc/checkpoint.hpp"
#include "ovc/dsp.hpp"
#include "ovc/model.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace ovc {

/// Drops trailing frames so the count is a multiple of the downsample factor.
MelSpectrogram crop_to_factor(const MelSpectrogram& m, int factor);

/// Inputs and output are normalized log-mel. The speaker code is the mean of
/// the codes of all target utterances.
MelSpectrogram convert_mel(const Model& model, const MelSpectrogram& source,
                           const std::vector<MelSpectrogram>& targets);

struct ConversionRequest {
  std::filesystem::path source_audio;
  std::vector<std::filesystem::path> target_audio;
  std::filesystem::path checkpoint;
  std::filesystem::path output;
  std::filesystem::path dump_dir;  // empty: no intermediate dumps
  /// When set, must match the checkpoint's dsp fingerprint.
  std::optional<DspConfig> expected_dsp;
};

struct ConversionResult {
  Waveform waveform;
  MelSpectrogram source_mel;     // log-mel, cropped
  MelSpectrogram converted_mel;  // log-mel, denormalized
  std::vector<MelSpectrogram> target_mels;
  GriffinLimTrace trace;
};

/// Full chain on already-loaded pieces; writes nothing.
ConversionResult convert_waveforms(const Checkpoint& ckpt, const Waveform& source,
                                   const std::vector<Waveform>& targets);

/// Loads, converts and writes the WAV atomically; on failure no output file
/// is left behind.
ConversionResult convert(const ConversionRequest& req);

}  // namespace ovc
