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

#include "ovc/conversion.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

#include "ovc/corpus.hpp"

namespace fs = std::filesystem;

namespace ovc {

MelSpectrogram crop_to_factor(const MelSpectrogram& m, int factor) {
  const Eigen::Index frames = m.rows() - m.rows() % factor;
  if (frames < factor)
    throw SizeError("need at least " + std::to_string(factor) + " frames, got " +
                    std::to_string(m.rows()));
  return m.topRows(frames);
}

MelSpectrogram convert_mel(const Model& model, const MelSpectrogram& source,
                           const std::vector<MelSpectrogram>& targets) {
  if (targets.empty()) throw SizeError("convert_mel: no target utterance");
  Vec z_s = Vec::Zero(model.arch().speaker_dim);
  for (const auto& t : targets) z_s += model.speaker_encode(t);
  z_s /= static_cast<double>(targets.size());
  const MelSpectrogram src = crop_to_factor(source, model.arch().downsample_factor);
  return model.decode(z_s, model.content_encode(src));
}

ConversionResult convert_waveforms(const Checkpoint& ckpt, const Waveform& source,
                                   const std::vector<Waveform>& targets) {
  const DspConfig& dsp = ckpt.dsp;
  const MelFilterbank fb(dsp);
  const Model model = ckpt.model();
  ConversionResult r;
  const Waveform src = condition_waveform(source, dsp);
  r.source_mel = crop_to_factor(extract_log_mel(src, dsp, fb), model.arch().downsample_factor);
  std::vector<MelSpectrogram> normalized_targets;
  for (const auto& t : targets) {
    r.target_mels.push_back(extract_log_mel(condition_waveform(t, dsp), dsp, fb));
    normalized_targets.push_back(ckpt.norm.normalize(r.target_mels.back()));
  }
  const MelSpectrogram out =
      convert_mel(model, ckpt.norm.normalize(r.source_mel), normalized_targets);
  r.converted_mel = ckpt.norm.denormalize(out);
  if (!r.converted_mel.allFinite()) throw NumericError("conversion produced non-finite mel values");
  r.waveform = griffin_lim(mel_to_linear_approx(r.converted_mel, fb), dsp, &r.trace);
  // Match the conditioned source length; cropping removed < factor frames.
  r.waveform.samples.resize(src.samples.size(), 0.0);
  return r;
}

namespace {

void dump(const fs::path& dir, const ConversionResult& r) {
  fs::create_directories(dir);
  write_matrix(dir / "source_mel.ovcm", r.source_mel.cast<float>());
  write_matrix(dir / "converted_mel.ovcm", r.converted_mel.cast<float>());
  for (std::size_t i = 0; i < r.target_mels.size(); ++i)
    write_matrix(dir / ("target_mel_" + std::to_string(i) + ".ovcm"), r.target_mels[i].cast<float>());
  std::ofstream gl(dir / "griffin_lim.tsv");
  gl << "iter\tspectral_convergence\n";
  for (std::size_t i = 0; i < r.trace.spectral_convergence.size(); ++i)
    gl << i << "\t" << r.trace.spectral_convergence[i] << "\n";
}

}  // namespace

ConversionResult convert(const ConversionRequest& req) {
  if (req.target_audio.empty()) throw ConfigError("convert: no target audio given");
  Checkpoint ckpt = load_checkpoint(req.checkpoint);
  if (req.expected_dsp && req.expected_dsp->fingerprint() != ckpt.dsp.fingerprint())
    throw ConfigError("convert: dsp settings (" + req.expected_dsp->fingerprint() +
                      ") differ from the checkpoint's (" + ckpt.dsp.fingerprint() + ")");
  const Waveform source = read_wav(req.source_audio);
  std::vector<Waveform> targets;
  for (const auto& p : req.target_audio) targets.push_back(read_wav(p));
  ConversionResult r = convert_waveforms(ckpt, source, targets);

  if (!req.dump_dir.empty()) dump(req.dump_dir, r);
  if (!req.output.empty()) {
    if (req.output.has_parent_path()) fs::create_directories(req.output.parent_path());
    fs::path tmp = req.output;
    tmp += ".partial";
    try {
      write_wav(tmp, r.waveform);
      fs::rename(tmp, req.output);
    } catch (...) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw;
    }
  }
  spdlog::info("converted {} frames ({:.2f} s)", r.converted_mel.rows(), r.waveform.duration_s());
  return r;
}

}  // namespace ovc
