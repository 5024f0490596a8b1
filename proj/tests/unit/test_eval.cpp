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

#include "ovc/eval.hpp"
#include "ovc/plot.hpp"

#include <algorithm>
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

Checkpoint small_checkpoint() {
  Checkpoint c;
  c.dsp = small_dsp();
  c.arch = ArchConfig::tiny();
  c.arch.n_mels = 40;
  c.params = init_params(c.arch, 3);
  c.norm = {Vec::Constant(40, -4.0), Vec::Constant(40, 2.0)};
  return c;
}

// Speakers s0..s(n-1), `per` utterances each, with per-speaker offsets.
struct Fixture {
  FeatureCache cache{small_dsp().fingerprint(), 40};
  Manifest manifest;
};

Fixture fixture(int speakers, int per, int frames) {
  Fixture f;
  ovc::Rng rng(9);
  for (int s = 0; s < speakers; ++s)
    for (int u = 0; u < per; ++u) {
      const std::string id = "s" + std::to_string(s) + "_" + std::to_string(u);
      f.manifest.records.push_back({id, "s" + std::to_string(s), id + ".wav", 1.0});
      f.cache.insert(id, (random_mat(rng, frames, 40) + Mat::Constant(frames, 40, -4.0 + s)).cast<float>());
    }
  return f;
}

Vec gv_oracle(const std::vector<MelSpectrogram>& mels) {
  const Eigen::Index bins = mels.front().cols();
  Vec mean = Vec::Zero(bins), var = Vec::Zero(bins);
  double n = 0;
  for (const auto& m : mels) {
    for (Eigen::Index t = 0; t < m.rows(); ++t) mean += m.row(t).transpose();
    n += static_cast<double>(m.rows());
  }
  mean /= n;
  for (const auto& m : mels)
    for (Eigen::Index t = 0; t < m.rows(); ++t) var += (m.row(t).transpose() - mean).array().square().matrix();
  return var / n;
}

std::pair<std::uint32_t, std::uint32_t> png_size(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  unsigned char h[24];
  in.read(reinterpret_cast<char*>(h), 24);
  auto be = [&](int o) {
    return (std::uint32_t(h[o]) << 24) | (std::uint32_t(h[o + 1]) << 16) | (std::uint32_t(h[o + 2]) << 8) | h[o + 3];
  };
  return {be(16), be(20)};
}

}  // namespace

TEST_CASE("global variance matches a two-pass oracle") {
  ovc::Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MelSpectrogram> mels;
    const int n = ovc::test::random_int(rng, 1, 4);
    for (int i = 0; i < n; ++i) mels.push_back(random_mat(rng, ovc::test::random_int(rng, 1, 50), 7, 3.0));
    const Vec gv = global_variance(mels);
    CHECK((gv - gv_oracle(mels)).cwiseAbs().maxCoeff() <= 1e-8);
    std::reverse(mels.begin(), mels.end());
    CHECK((global_variance(mels) - gv).cwiseAbs().maxCoeff() <= 1e-10);
  }
  CHECK(global_variance({Mat::Constant(10, 4, 2.5)}).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(global_variance({}), SizeError);
  CHECK_THROWS_AS(global_variance({Mat(0, 4)}), SizeError);
  CHECK_THROWS_AS(global_variance({Mat::Zero(3, 4), Mat::Zero(3, 5)}), SizeError);

  Vec a(3), b(3);
  a << 1, 2, 3;
  b << 1, 2, 5;
  CHECK(gv_distance(a, b) == Catch::Approx(2.0));
  CHECK(gv_distance(a, a) == 0.0);
  CHECK_THROWS_AS(gv_distance(a, Vec::Zero(2)), SizeError);
}

TEST_CASE("PCA projection") {
  ovc::Rng rng(2);
  Mat x = random_mat(rng, 30, 5);
  Mat p = pca_project(x, 2);
  CHECK(p.rows() == 30);
  CHECK(p.cols() == 2);
  CHECK(p.colwise().mean().cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(p == pca_project(x, 2));
  CHECK(p.col(0).squaredNorm() >= p.col(1).squaredNorm());

  // Points on a line project onto the first axis with their spread preserved.
  Vec dir = Vec::Zero(5);
  dir << 1, 2, 0, -1, 3;
  dir.normalize();
  Mat line(10, 5);
  for (int i = 0; i < 10; ++i) line.row(i) = (i - 4.5) * dir.transpose();
  Mat q = pca_project(line, 2);
  CHECK(q.col(1).cwiseAbs().maxCoeff() <= 1e-9);
  for (int i = 0; i < 10; ++i) CHECK(std::abs(q(i, 0)) == Catch::Approx(std::abs(i - 4.5)).margin(1e-9));
  CHECK(pca_project(Mat(0, 5), 2).rows() == 0);
}

TEST_CASE("projection and speaker info files") {
  TempDir dir("proj");
  std::vector<ProjectionPoint> pts{{"u1", "p225", 0.5, -1.25}, {"u2", "p226", 1e-3, 7.0}};
  write_projection(dir / "sub" / "p.tsv", pts);
  auto back = read_projection(dir / "sub" / "p.tsv");
  REQUIRE(back.size() == 2);
  CHECK(back[1].speaker_id == "p226");
  CHECK(back[0].x == 0.5);
  CHECK(back[1].x == Catch::Approx(1e-3));
  CHECK_THROWS_AS(read_projection(dir / "none.tsv"), IngestionError);

  std::ofstream(dir / "spk.txt") << "ID  AGE  GENDER  ACCENTS\n# comment\np225  23  F  English\np226  22  M  English\n";
  auto info = load_speaker_info(dir / "spk.txt");
  CHECK(info.size() == 2);
  CHECK(info.at("p225") == "F");
  CHECK(info.at("p226") == "M");
  CHECK_THROWS_AS(load_speaker_info(dir / "nope.txt"), IngestionError);
}

TEST_CASE("representation extraction") {
  Fixture f = fixture(3, 2, 70);
  Checkpoint ck = small_checkpoint();
  RepOptions opts;
  opts.segment_len = 32;
  LabeledDataset d = extract_content_reps(f.cache, f.manifest, ck, opts);
  CHECK(d.size() == 6 * 2);
  CHECK(d.features.cols() == ck.arch.content_channels);
  CHECK(d.n_classes() == 3);
  opts.frame_level = true;
  LabeledDataset frames = extract_content_reps(f.cache, f.manifest, ck, opts);
  CHECK(frames.size() == 6 * 2 * (32 / ck.arch.downsample_factor));
  opts.frame_level = false;
  opts.shuffled_labels = true;
  opts.shuffle_seed = 1;
  LabeledDataset sh = extract_content_reps(f.cache, f.manifest, ck, opts);
  CHECK(sh.features == d.features);
  opts.segment_len = 30;
  CHECK_THROWS_AS(extract_content_reps(f.cache, f.manifest, ck, opts), ConfigError);

  LabeledDataset s = extract_speaker_reps(f.cache, f.manifest, ck);
  CHECK(s.size() == 6);
  CHECK(s.features.cols() == ck.arch.speaker_dim);

  Checkpoint other = ck;
  other.dsp.n_mels = 41;
  CHECK_THROWS_AS(extract_speaker_reps(f.cache, f.manifest, other), ConfigError);
  CHECK_THROWS_AS(extract_content_reps(f.cache, f.manifest, other), ConfigError);

  Manifest half;
  half.records = {f.manifest.records[0], f.manifest.records[3]};
  CHECK(subset_cache(f.cache, half).size() == 2);
}

TEST_CASE("reports and degenerate evaluations") {
  CHECK(run_ablation({}, {}, small_dsp(), ArchConfig::tiny(), TrainConfig{}, ProbeConfig{}, {}).empty());
  std::vector<AblationRow> rows(3);
  rows[0].setting = AblationSetting::content_with_in;
  rows[1].setting = AblationSetting::content_without_in;
  rows[2].setting = AblationSetting::content_without_in_speaker_with_in;
  rows[0].probe.held_out_accuracy = 0.25;
  const std::string rep = format_ablation_report(rows);
  CHECK(std::count(rep.begin(), rep.end(), '\n') == 5);
  CHECK(rep.find("0.2500") != std::string::npos);

  // One test speaker: the unseen probe is not applicable.
  Fixture f = fixture(3, 4, 40);
  SplitManifests split;
  for (const auto& r : f.manifest.records) (r.speaker_id == "s2" ? split.test : split.train).records.push_back(r);
  ProbeConfig pc;
  pc.hidden_layers = 1;
  pc.hidden_units = 16;
  pc.iters = 50;
  EmbeddingEvalResult e = speaker_embedding_eval(f.cache, split, small_checkpoint(), pc);
  CHECK(e.seen.has_value());
  CHECK_FALSE(e.unseen.has_value());
  CHECK(e.projection.size() == 12);
  CHECK(format_embedding_report(e).find("unseen\tn/a") != std::string::npos);
}

TEST_CASE("GV pair evaluation") {
  Fixture f = fixture(2, 3, 48);
  Checkpoint ck = small_checkpoint();
  GvPairResult r = gv_pair(f.cache, f.manifest, ck, "s0", "s1", 2, 5);
  CHECK(r.n_converted == 2);
  CHECK(r.source_gv.size() == 40);
  CHECK(r.converted_gv.size() == 40);
  CHECK(r.converted_gv.allFinite());
  GvPairResult again = gv_pair(f.cache, f.manifest, ck, "s0", "s1", 2, 5);
  CHECK(again.converted_gv == r.converted_gv);
  CHECK_THROWS_AS(gv_pair(f.cache, f.manifest, ck, "s0", "nobody", 2, 5), SizeError);
  const std::string rep = format_gv_report({r, again});
  CHECK(std::count(rep.begin(), rep.end(), '\n') == 4);

  TempDir dir("gv");
  write_gv_profile(dir / "gv.tsv", r);
  ConversionArtifacts c = load_gv_profile(dir / "gv.tsv");
  REQUIRE(c.target_gv.has_value());
  CHECK((*c.target_gv - r.target_gv).cwiseAbs().maxCoeff() <= 1e-6 * (1 + r.target_gv.cwiseAbs().maxCoeff()));
}

TEST_CASE("plot export") {
  TempDir dir("plots");
  PlotReport empty = export_plots({}, dir / "a");
  CHECK(empty.files.empty());
  CHECK(empty.warnings.size() >= 1);

  ovc::Rng rng(4);
  PlotArtifacts art;
  for (int i = 0; i < 4; ++i) {
    ConversionArtifacts c;
    c.name = "pair" + std::to_string(i);
    c.source_mel = random_mat(rng, 12, 8);
    c.converted_mel = random_mat(rng, 12, 8);
    c.target_gv = random_mat(rng, 8, 1).cwiseAbs();
    c.converted_gv = random_mat(rng, 8, 1).cwiseAbs();
    art.conversions.push_back(c);
  }
  art.conversions[3].converted_mel.reset();
  art.projection = std::vector<ProjectionPoint>{{"u", "a", 0, 0}, {"v", "b", 1, 1}};
  art.gender = {{"a", "F"}};
  PlotReport rep = export_plots(art, dir / "b");
  int svgs = 0;
  for (const auto& p : rep.files) {
    CHECK(std::filesystem::exists(p));
    if (p.filename().string().find("_gv.svg") != std::string::npos) ++svgs;
  }
  CHECK(svgs == 4);
  CHECK(std::filesystem::exists(dir / "b" / "speaker_embedding.svg"));
  CHECK_FALSE(std::filesystem::exists(dir / "b" / "pair3_source.png"));
  CHECK(rep.warnings.size() == 1);

  write_heatmap_png(dir / "h.png", random_mat(rng, 20, 6), 3);
  auto [w, h] = png_size(dir / "h.png");
  CHECK(w == 60);
  CHECK(h == 18);
}
