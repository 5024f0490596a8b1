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

#include "support.hpp"

#include "ovc/conversion.hpp"
#include "ovc/corpus.hpp"

#include <fstream>

using namespace ovc;
using ovc::test::random_mat;
using ovc::test::TempDir;

namespace {

DspConfig small_dsp() {
  DspConfig c;
  c.sample_rate_hz = 8000;
  c.win_length_ms = 32.0;
  c.hop_length_ms = 8.0;
  c.fft_size = 256;
  c.n_mels = 40;
  c.fmax_hz = 4000.0;
  c.griffin_lim_iters = 8;
  return c;
}

Checkpoint small_checkpoint(std::uint64_t seed = 2) {
  Checkpoint c;
  c.dsp = small_dsp();
  c.arch = ArchConfig::tiny();
  c.arch.n_mels = 40;
  c.params = init_params(c.arch, seed);
  ovc::Rng rng(seed);
  for (auto& [name, w] : c.params.tensors)
    if (name.find(".affine.") != std::string::npos) w = random_mat(rng, w.rows(), w.cols());
  c.norm = {Vec::Constant(40, -4.0), Vec::Constant(40, 2.0)};
  return c;
}

Waveform voice(double f0, double seconds) {
  Waveform w{std::vector<double>(static_cast<std::size_t>(seconds * 8000)), 8000};
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    for (int h = 1; h <= 6; ++h) w.samples[i] += 0.1 / h * std::sin(2 * M_PI * f0 * h * i / 8000.0);
  return w;
}

}  // namespace

TEST_CASE("cropping to the downsample factor") {
  ovc::Rng rng(1);
  Mat m = random_mat(rng, 130, 3);
  Mat c = crop_to_factor(m, 4);
  CHECK(c.rows() == 128);
  CHECK(c == m.topRows(128));
  CHECK(crop_to_factor(m.topRows(128), 4).rows() == 128);
  CHECK_THROWS_AS(crop_to_factor(m.topRows(3), 4), SizeError);
}

TEST_CASE("mel conversion shapes and degenerate cases") {
  Checkpoint ck = small_checkpoint();
  Model model = ck.model();
  ovc::Rng rng(2);
  Mat target = random_mat(rng, 90, 40);
  for (int frames : {128, 256, 130}) {
    Mat src = random_mat(rng, frames, 40);
    Mat out = convert_mel(model, src, {target});
    CHECK(out.rows() == frames / 4 * 4);
    CHECK(out.cols() == 40);
  }
  Mat src = random_mat(rng, 64, 40);
  CHECK(convert_mel(model, src, {src}) == model.autoencode(src));
  CHECK(convert_mel(model, src, {target}) != convert_mel(model, target.topRows(64), {src}));
  CHECK(convert_mel(model, src, {target}) == convert_mel(model, src, {target}));
  CHECK_THROWS_AS(convert_mel(model, src.topRows(2), {target}), SizeError);
}

TEST_CASE("several targets average their speaker codes") {
  Checkpoint ck = small_checkpoint();
  Model model = ck.model();
  ovc::Rng rng(3);
  Mat src = random_mat(rng, 32, 40), a = random_mat(rng, 40, 40), b = random_mat(rng, 24, 40);
  Vec zs = 0.5 * (model.speaker_encode(a) + model.speaker_encode(b));
  Mat expect = model.decode(zs, model.content_encode(src));
  CHECK((convert_mel(model, src, {a, b}) - expect).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("file conversion writes a deterministic waveform and dumps") {
  TempDir dir("convert");
  Checkpoint ck = small_checkpoint();
  save_checkpoint(ck, dir / "m.ovck");
  write_wav(dir / "src.wav", voice(120, 0.9));
  write_wav(dir / "tgt.wav", voice(220, 0.7));

  ConversionRequest req;
  req.source_audio = dir / "src.wav";
  req.target_audio = {dir / "tgt.wav"};
  req.checkpoint = dir / "m.ovck";
  req.output = dir / "out" / "o.wav";
  req.dump_dir = dir / "dump";
  ConversionResult r = convert(req);
  Waveform out = read_wav(req.output);
  CHECK(out.sample_rate == 8000);
  const Waveform src = condition_waveform(read_wav(dir / "src.wav"), ck.dsp);
  CHECK(std::abs(out.duration_s() - src.duration_s()) <= ck.dsp.hop_length_ms / 1000.0);
  CHECK(r.converted_mel.rows() == frame_count(src.samples.size(), ck.dsp) / 4 * 4);
  CHECK(r.trace.spectral_convergence.size() == 9);
  for (const char* f : {"source_mel.ovcm", "converted_mel.ovcm", "target_mel_0.ovcm", "griffin_lim.tsv"})
    CHECK(std::filesystem::exists(dir / "dump" / f));
  CHECK(read_matrix(dir / "dump" / "converted_mel.ovcm") == r.converted_mel.cast<float>());

  std::ifstream a(req.output, std::ios::binary);
  std::string first((std::istreambuf_iterator<char>(a)), {});
  req.output = dir / "o2.wav";
  convert(req);
  std::ifstream b(req.output, std::ios::binary);
  std::string second((std::istreambuf_iterator<char>(b)), {});
  CHECK(first == second);
  CHECK(convert_waveforms(ck, voice(120, 0.9), {voice(220, 0.7)}).waveform.samples ==
        convert_waveforms(ck, voice(120, 0.9), {voice(220, 0.7)}).waveform.samples);
}

TEST_CASE("conversion failures leave no output") {
  TempDir dir("convfail");
  Checkpoint ck = small_checkpoint();
  save_checkpoint(ck, dir / "m.ovck");
  write_wav(dir / "tgt.wav", voice(220, 0.5));
  ConversionRequest req;
  req.source_audio = dir / "missing.wav";
  req.target_audio = {dir / "tgt.wav"};
  req.checkpoint = dir / "m.ovck";
  req.output = dir / "o.wav";
  CHECK_THROWS_AS(convert(req), IngestionError);
  CHECK_FALSE(std::filesystem::exists(req.output));

  req.source_audio = dir / "tgt.wav";
  DspConfig other = small_dsp();
  other.n_mels = 30;
  req.expected_dsp = other;
  CHECK_THROWS_AS(convert(req), ConfigError);
  req.expected_dsp = small_dsp();
  CHECK_NOTHROW(convert(req));
  CHECK(std::filesystem::exists(req.output));

  req.output = dir / "o3.wav";
  req.checkpoint = dir / "tgt.wav";
  CHECK_THROWS_AS(convert(req), LoadError);
  CHECK_FALSE(std::filesystem::exists(req.output));
  req.checkpoint = dir / "m.ovck";
  req.target_audio.clear();
  CHECK_THROWS_AS(convert(req), ConfigError);

  write_wav(dir / "tiny.wav", voice(200, 0.02));
  req.target_audio = {dir / "tgt.wav"};
  req.source_audio = dir / "tiny.wav";
  CHECK_THROWS_AS(convert(req), SizeError);
  CHECK_FALSE(std::filesystem::exists(req.output));
}
