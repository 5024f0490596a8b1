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

// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]; no arguments runs all of them.

#include "oracles.hpp"

#include "ovc/checkpoint.hpp"
#include "ovc/conversion.hpp"
#include "ovc/corpus.hpp"
#include "ovc/dsp.hpp"
#include "ovc/eval.hpp"
#include "ovc/layers.hpp"
#include "ovc/toy_corpus.hpp"
#include "ovc/training.hpp"
#include "ovc/wav.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

using namespace ovc;
namespace L = ovc::layers;
namespace fs = std::filesystem;
using ovc::test::random_int;
using ovc::test::random_mat;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------
// Shared desk-scale setup: synthetic 8-speaker corpus and the three trained
// ablation models, built on first use.

struct Desk {
  fs::path dir;
  DspConfig dsp;
  SplitManifests split;
  FeatureCache cache;
  std::vector<AblationRow> rows;
  std::optional<Checkpoint> with_in;
};

Manifest concat(std::initializer_list<const Manifest*> parts) {
  Manifest m;
  for (const auto* p : parts) m.records.insert(m.records.end(), p->records.begin(), p->records.end());
  return m;
}

Desk& desk_corpus(const fs::path& work) {
  static std::optional<Desk> d;
  if (d) return *d;
  d.emplace();
  d->dir = work / "desk";
  ToyCorpusConfig tc;
  tc.n_speakers = 8;
  tc.utterances_per_speaker = 50;
  tc.seed = 1;
  write_toy_corpus(d->dir / "corpus", tc);
  d->split = build_manifest(d->dir / "corpus", 2, 0.1, 0);
  d->cache = preprocess_corpus(concat({&d->split.train, &d->split.valid, &d->split.test}), d->dsp, 128);
  spdlog::info("desk corpus: {} utterances cached", d->cache.size());
  return *d;
}

ProbeConfig desk_probe() {
  ProbeConfig pc;
  pc.iters = 1000;
  return pc;
}

Desk& desk_models(const fs::path& work) {
  Desk& d = desk_corpus(work);
  if (!d.rows.empty()) return d;
  TrainConfig tcfg;
  tcfg.batch_size = 16;
  tcfg.total_iters = 1000;
  tcfg.log_every = 100;
  tcfg.seed = 1;
  AblationOptions ao;
  ao.checkpoint_dir = d.dir / "ablation";
  ao.on_log = [](AblationSetting s, const TrainMetrics& m) {
    spdlog::info("{} iter {} l_rec {:.4f} l_kl {:.4f}", to_string(s), m.iteration, m.l_rec, m.l_kl);
  };
  d.rows = run_ablation(d.cache, d.split, d.dsp, ArchConfig::tiny(), tcfg, desk_probe(),
                        {AblationSetting::content_with_in, AblationSetting::content_without_in,
                         AblationSetting::content_without_in_speaker_with_in},
                        ao);
  d.with_in = load_checkpoint(ao.checkpoint_dir / "content_with_in" / "latest.ovck");
  return d;
}

// ---------------------------------------------------------------------------

Outcome c1_instance_norm() {
  Outcome o;
  Rng rng(101);
  double worst_mean = 0, worst_std = 0, worst_inv = 0;
  for (int i = 0; i < 1000; ++i) {
    const int c = random_int(rng, 1, 8), w = random_int(rng, 2, 256);
    Mat m = random_mat(rng, c, w);
    for (int r = 0; r < c; ++r) m.row(r) = m.row(r) * std::exp(rng.uniform() * 8 - 5) + Mat::Constant(1, w, rng.normal() * 3);
    const Mat y = L::instance_norm(m, L::kNormEps);
    const auto in = ovc::test::two_pass_stats(m), out = ovc::test::two_pass_stats(y);
    for (int r = 0; r < c; ++r) {
      const double v = in.std(r) * in.std(r);
      worst_mean = std::max(worst_mean, std::abs(out.mean(r)));
      worst_std = std::max(worst_std, std::abs(out.std(r) - std::sqrt(v / (v + L::kNormEps))));
    }
    Mat base = ovc::test::map_with_channel_std(rng, c, w, 5.0, 20.0);
    Mat shifted = base;
    for (int r = 0; r < c; ++r) shifted.row(r) = shifted.row(r) * (1.0 + 3.0 * rng.uniform()) + Mat::Constant(1, w, 10.0 * rng.normal());
    worst_inv = std::max(worst_inv, (L::instance_norm(shifted, L::kNormEps) - L::instance_norm(base, L::kNormEps))
                                        .cwiseAbs()
                                        .maxCoeff());
  }
  o.pass = worst_mean <= 1e-6 && worst_std <= 1e-3 && worst_inv <= 1e-5;
  o.detail = "max |mean| " + fmt("%.2e", worst_mean) + ", max std dev " + fmt("%.2e", worst_std) +
             ", max invariance dev " + fmt("%.2e", worst_inv);
  return o;
}

Outcome c2_adain() {
  Outcome o;
  Rng rng(102);
  double worst = 0;
  bool identity = true;
  for (int i = 0; i < 1000; ++i) {
    const int c = random_int(rng, 1, 8), w = random_int(rng, 2, 256);
    const Mat m = random_mat(rng, c, w, 1.0 + 4.0 * rng.uniform());
    L::ChannelAffine a{random_mat(rng, c, 1, 2.0), random_mat(rng, c, 1, 2.0)};
    const Mat y = L::adaptive_instance_norm(m, a, L::kNormEps);
    const auto in = ovc::test::two_pass_stats(m), out = ovc::test::two_pass_stats(y);
    for (int r = 0; r < c; ++r) {
      const double v = in.std(r) * in.std(r);
      const double std_in = std::sqrt(v / (v + L::kNormEps));
      worst = std::max({worst, std::abs(out.mean(r) - a.beta(r)),
                        std::abs(out.std(r) - std::abs(a.gamma(r)) * std_in)});
    }
    const L::ChannelAffine unit{Vec::Ones(c), Vec::Zero(c)};
    identity = identity && L::adaptive_instance_norm(m, unit, L::kNormEps) == L::instance_norm(m, L::kNormEps);
  }
  o.pass = worst <= 1e-5 && identity;
  o.detail = "max stat dev " + fmt("%.2e", worst) + ", unit affine identical to IN: " + (identity ? "yes" : "no");
  return o;
}

Outcome c3_zero_vector() {
  Rng rng(103);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const int c = random_int(rng, 1, 8), w = random_int(rng, 2, 256), b = random_int(rng, 1, 3);
    const Mat m = random_mat(rng, c, w * b, 1.0 + 9.0 * rng.uniform()).array() + 5.0 * rng.normal();
    worst = std::max(worst, L::avg_pool_over_time(L::instance_norm(m, L::kNormEps, b), b).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6, "max |entry| " + fmt("%.2e", worst)};
}

Outcome c4_gradients() {
  const ArchConfig arch = ArchConfig::tiny();
  const ModelParams params = init_params(arch, 104);
  TrainConfig cfg;
  const int batch = 2, frames = 32;
  Rng data_rng(5);
  const Mat x = random_mat(data_rng, arch.n_mels, batch * frames);
  const Rng noise(6);
  auto loss = [&](const ModelParams& p) {
    Rng r = noise;
    return evaluate_objective(arch, p, x, batch, r, cfg, Mode::train, false).total;
  };
  Rng r = noise;
  const LossBreakdown analytic = evaluate_objective(arch, params, x, batch, r, cfg, Mode::train, true);
  ModelParams probe = params;
  Rng pick(7);
  double worst = 0;
  std::string worst_name;
  std::size_t checked = 0, vanishing = 0;
  const double h = 1e-5;
  constexpr double kGradFloor = 1e-5;
  for (auto& [name, w] : probe.tensors) {
    const Mat& g = analytic.grads.at(name);
    std::vector<Eigen::Index> idx;
    Eigen::Index top;
    g.reshaped().cwiseAbs().maxCoeff(&top);
    idx.push_back(top);
    for (int k = 0; k < 4; ++k) idx.push_back(static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(w.size()))));
    Vec a(static_cast<Eigen::Index>(idx.size())), n(a.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double& v = w.data()[idx[k]];
      const double keep = v;
      v = keep + h;
      const double up = loss(probe);
      v = keep - h;
      const double down = loss(probe);
      v = keep;
      a(static_cast<Eigen::Index>(k)) = g.data()[idx[k]];
      n(static_cast<Eigen::Index>(k)) = (up - down) / (2 * h);
    }
    // Biases feeding an instance norm have an exactly zero gradient; the floor
    // keeps finite-difference round-off from reading as a relative error of 1.
    const double err = (a - n).norm() / std::max({a.norm(), n.norm(), kGradFloor});
    vanishing += a.norm() < kGradFloor;
    checked += idx.size();
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  }
  return {worst <= 1e-4, std::to_string(probe.tensors.size()) + " tensors, " + std::to_string(checked) +
                             " entries (" + std::to_string(vanishing) +
                             " tensors with vanishing gradient), worst relative error " + fmt("%.2e", worst) + " (" + worst_name + ")"};
}

Outcome c5_loss_oracles() {
  Rng rng(105);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const int b = random_int(rng, 1, 4), bins = random_int(rng, 1, 20);
    std::vector<MelSpectrogram> x, y, gvin;
    std::vector<Mat> z;
    double rec = 0, kl = 0;
    for (int k = 0; k < b; ++k) {
      const int t = random_int(rng, 1, 40);
      x.push_back(random_mat(rng, t, bins));
      y.push_back(random_mat(rng, t, bins));
      z.push_back(random_mat(rng, random_int(rng, 1, 8), random_int(rng, 1, 10)));
      double s = 0;
      for (Eigen::Index e = 0; e < x.back().size(); ++e) s += std::abs(x.back().data()[e] - y.back().data()[e]);
      rec += s / static_cast<double>(x.back().size());
      double q = 0;
      for (Eigen::Index e = 0; e < z.back().size(); ++e) q += z.back().data()[e] * z.back().data()[e];
      kl += q / static_cast<double>(z.back().size());
      gvin.push_back(random_mat(rng, t, bins, 3.0));
    }
    worst = std::max({worst, std::abs(reconstruction_loss(x, y) - rec / b), std::abs(kl_loss(z) - kl / b)});
    // Two-pass variance per bin over all frames.
    Vec mean = Vec::Zero(bins), var = Vec::Zero(bins);
    double n = 0;
    for (const auto& m : gvin) {
      mean += m.colwise().sum().transpose();
      n += static_cast<double>(m.rows());
    }
    mean /= n;
    for (const auto& m : gvin) var += (m.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
    var /= n;
    worst = std::max(worst, (global_variance(gvin) - var).cwiseAbs().maxCoeff());
  }
  const TrainConfig cfg;
  bool weights = cfg.lambda_rec == 10.0 && cfg.lambda_kl == 0.01;
  for (int i = 0; i < 100; ++i) {
    const double a = rng.uniform() * 5, b = rng.uniform() * 5;
    weights = weights && total_loss(a, b, cfg) == 10.0 * a + 0.01 * b;
  }
  return {worst <= 1e-7 && weights,
          "max oracle dev " + fmt("%.2e", worst) + ", weighting 10 / 0.01 exact: " + (weights ? "yes" : "no")};
}

Outcome c6_overfit(const fs::path& work) {
  Desk& d = desk_corpus(work);
  Manifest four;
  std::set<std::string> seen;
  for (const auto& r : d.split.train.records)
    if (seen.insert(r.speaker_id).second && four.records.size() < 4) four.records.push_back(r);
  const FeatureCache cache = subset_cache(d.cache, four);
  const NormStats norm = compute_norm_stats(cache, four);
  // Regularization off: this checks that the model can fit, not that it generalizes.
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.dropout = 0.0;
  cfg.total_iters = 2000;
  cfg.log_every = 1;
  cfg.seed = 6;
  TrainOptions to;
  to.dsp = d.dsp;
  to.on_log = [](const TrainMetrics& m) {
    if (m.iteration % 200 == 0) spdlog::info("overfit iter {} l_rec {:.4f}", m.iteration, m.l_rec);
  };
  const TrainResult r = train(cache, norm, ArchConfig::tiny(), cfg, to);
  bool finite = r.final.params.all_finite();
  for (const auto& m : r.metrics) finite = finite && std::isfinite(m.l_rec) && std::isfinite(m.total);
  auto window = [&](std::size_t end) {
    double s = 0;
    for (std::size_t i = end - 10; i < end; ++i) s += r.metrics[i].l_rec;
    return s / 10.0;
  };
  if (r.metrics.size() != 2000) return {false, "expected 2000 metric records"};
  const double start = window(10), end = window(2000);
  return {finite && end <= 0.5 * start, "l_rec moving average " + fmt("%.4f", start) + " at iter 10 -> " +
                                            fmt("%.4f", end) + " at iter 2000 (" +
                                            fmt("%.1f", 100.0 * (1.0 - end / start)) + "% drop), finite: " +
                                            (finite ? "yes" : "no")};
}

Outcome c7_ablation_ordering(const fs::path& work) {
  Desk& d = desk_models(work);
  const double with_in = d.rows[0].probe.held_out_accuracy;
  const double without = d.rows[1].probe.held_out_accuracy;
  const double spk_in = d.rows[2].probe.held_out_accuracy;
  std::istringstream report(format_ablation_report(d.rows));
  for (std::string line; std::getline(report, line);) spdlog::info("{}", line);
  return {with_in + 0.10 <= without && without <= spk_in + 0.05,
          "with IN " + fmt("%.4f", with_in) + ", without IN " + fmt("%.4f", without) +
              ", without IN + speaker IN " + fmt("%.4f", spk_in) + " over " +
              std::to_string(d.rows[0].probe.n_classes) + " speakers"};
}

Outcome c8_embedding(const fs::path& work) {
  Desk& d = desk_models(work);
  const EmbeddingEvalResult r = speaker_embedding_eval(d.cache, d.split, *d.with_in, desk_probe());
  if (!r.seen) return {false, "seen probe not applicable"};
  std::string detail = "seen " + fmt("%.4f", r.seen->held_out_accuracy) + " (" +
                       std::to_string(r.seen->n_held_out) + " held-out utterances)";
  if (r.unseen) detail += ", unseen " + fmt("%.4f", r.unseen->held_out_accuracy);
  return {r.seen->held_out_accuracy >= 0.9, detail};
}

Outcome c9_dsp() {
  const DspConfig c;
  const MelFilterbank fb(c);
  const Mat& a = fb.weights();
  const Mat& p = fb.pseudo_inverse();
  const Mat ap = a * p, pa = p * a;
  const double mp = std::max({(ap * a - a).norm() / a.norm(), (pa * p - p).norm() / p.norm(),
                              (ap - ap.transpose()).norm() / ap.norm(), (pa - pa.transpose()).norm() / pa.norm()});

  Rng rng(109);
  Waveform w{std::vector<double>(12000), c.sample_rate_hz};
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = 0.3 * std::sin(2 * M_PI * 220 * i / 24000.0) + 0.05 * rng.normal();
  GriffinLimTrace trace;
  griffin_lim(stft_magnitude(w, c), c, &trace);
  double rise = 0;
  for (std::size_t i = 1; i < trace.spectral_convergence.size(); ++i)
    rise = std::max(rise, trace.spectral_convergence[i] - trace.spectral_convergence[i - 1]);
  const bool hundred = trace.spectral_convergence.size() == 101;

  constexpr double kMinSnrDb = 15.0;
  const Waveform tone{ovc::test::sine(440.0, 2.0, c.sample_rate_hz), c.sample_rate_hz};
  const Waveform y = griffin_lim(stft_magnitude(tone, c), c);
  const auto [snr, amp] = ovc::test::tone_fit_snr(y.samples, 440.0, c.sample_rate_hz, c.win_length(),
                                                  static_cast<int>(y.samples.size()) - c.win_length(),
                                                  c.win_length());
  return {mp <= 1e-4 && hundred && rise <= 1e-6 && snr >= kMinSnrDb,
          "Moore-Penrose residual " + fmt("%.2e", mp) + ", max GL convergence rise " + fmt("%.2e", rise) +
              " over " + std::to_string(trace.spectral_convergence.size() - 1) + " iterations, tone SNR " +
              fmt("%.2f", snr) + " dB (threshold 15)"};
}

Outcome c10_conversion(const fs::path& work) {
  Desk& d = desk_models(work);
  const Checkpoint& ck = *d.with_in;
  const Model model = ck.model();
  const auto test_spk = d.split.test.speakers();
  const auto valid_spk = d.split.valid.speakers();

  // Sources of 128, 256 and 512 frames cut from concatenated utterances of one speaker.
  Mat long_src(0, ck.arch.n_mels);
  for (const auto& r : d.split.test.records) {
    if (r.speaker_id != test_spk[0] || !d.cache.contains(r.utterance_id)) continue;
    const Mat m = ck.norm.normalize(d.cache.at(r.utterance_id).cast<double>());
    Mat joined(long_src.rows() + m.rows(), m.cols());
    joined << long_src, m;
    long_src = joined;
    if (long_src.rows() >= 512) break;
  }
  const Mat target = ck.norm.normalize(d.cache.at(d.split.test.records.back().utterance_id).cast<double>());
  bool lengths = true, repeat = true;
  for (int frames : {128, 256, 512}) {
    const Mat src = long_src.topRows(frames);
    const Mat a = convert_mel(model, src, {target});
    const Mat b = convert_mel(model, src, {target});
    lengths = lengths && a.rows() == frames && a.cols() == ck.arch.n_mels;
    repeat = repeat && a == b;
  }
  const Waveform wav_src = read_wav(d.split.test.records.front().audio_path);
  const Waveform wav_tgt = read_wav(d.split.test.records.back().audio_path);
  repeat = repeat && convert_waveforms(ck, wav_src, {wav_tgt}).waveform.samples ==
                         convert_waveforms(ck, wav_src, {wav_tgt}).waveform.samples;

  // Both directions between the two unseen speakers, plus two disjoint pairs of training speakers.
  const Manifest seen = concat({&d.split.train, &d.split.valid});
  std::vector<GvPairResult> pairs;
  pairs.push_back(gv_pair(d.cache, d.split.test, ck, test_spk[0], test_spk[1], 100, 0));
  pairs.push_back(gv_pair(d.cache, d.split.test, ck, test_spk[1], test_spk[0], 100, 0));
  pairs.push_back(gv_pair(d.cache, seen, ck, valid_spk[0], valid_spk[1], 100, 0));
  pairs.push_back(gv_pair(d.cache, seen, ck, valid_spk[2], valid_spk[3], 100, 0));
  int closer = 0;
  std::string per_pair;
  for (const auto& p : pairs) {
    closer += p.to_target() < p.to_source();
    per_pair += " " + p.source_speaker + "->" + p.target_speaker + " " + fmt("%.2f", p.to_target()) + "/" +
                fmt("%.2f", p.to_source());
  }
  return {lengths && repeat && closer >= 3,
          std::string("frame counts exact: ") + (lengths ? "yes" : "no") + ", bit-identical: " +
              (repeat ? "yes" : "no") + ", GV closer to target in " + std::to_string(closer) +
              "/4 pairs (to target/to source:" + per_pair + ")"};
}

Outcome c11_checkpoint(const fs::path& work) {
  const fs::path dir = work / "c11";
  DspConfig dsp;
  const ArchConfig arch = ArchConfig::tiny();
  FeatureCache cache(dsp.fingerprint(), dsp.n_mels);
  Manifest m;
  Rng rng(111);
  for (int u = 0; u < 3; ++u) {
    const std::string id = "u" + std::to_string(u);
    cache.insert(id, (random_mat(rng, 160 + 8 * u, dsp.n_mels, 2.0).array() - 5.0).matrix().cast<float>());
    m.records.push_back({id, "s", "", 0});
  }
  const NormStats norm = compute_norm_stats(cache, m);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.total_iters = 8;
  cfg.log_every = 2;
  cfg.checkpoint_every = 4;
  cfg.seed = 11;
  TrainOptions o;
  o.dsp = dsp;
  o.checkpoint_dir = dir / "full";
  o.metrics_log = dir / "full" / "metrics.tsv";
  const TrainResult full = train(cache, norm, arch, cfg, o);

  save_checkpoint(full.final, dir / "a.ovck");
  const Checkpoint loaded = load_checkpoint(dir / "a.ovck");
  save_checkpoint(loaded, dir / "b.ovck");
  const bool bytes = read_file(dir / "a.ovck") == read_file(dir / "b.ovck");
  const Mat x = norm.normalize(cache.at("u0").cast<double>()).topRows(128);
  const Model ma = full.final.model(), mb = loaded.model();
  const bool decode = ma.decode(ma.speaker_encode(x), ma.content_encode(x)) ==
                      mb.decode(mb.speaker_encode(x), mb.content_encode(x));

  TrainConfig first = cfg;
  first.total_iters = 4;
  o.checkpoint_dir = dir / "part";
  o.metrics_log = dir / "part" / "metrics.tsv";
  train(cache, norm, arch, first, o);
  o.resume_from = load_checkpoint(dir / "part" / "latest.ovck");
  const TrainResult resumed = train(cache, norm, arch, cfg, o);
  const bool metrics = read_file(dir / "part" / "metrics.tsv") == read_file(dir / "full" / "metrics.tsv");
  bool params = true;
  for (const auto& [name, w] : full.final.params.tensors) params = params && resumed.final.params.at(name) == w;
  return {bytes && decode && metrics && params,
          std::string("re-save byte-identical: ") + (bytes ? "yes" : "no") + ", decode bit-exact: " +
              (decode ? "yes" : "no") + ", resumed metrics log identical: " + (metrics ? "yes" : "no") +
              ", resumed parameters identical: " + (params ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  spdlog::set_pattern("[%l] %v");
  ovc::test::TempDir work("acceptance");

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, c1_instance_norm},
      {2, c2_adain},
      {3, c3_zero_vector},
      {4, c4_gradients},
      {5, c5_loss_oracles},
      {9, c9_dsp},
      {11, [&] { return c11_checkpoint(work.path()); }},
      {6, [&] { return c6_overfit(work.path()); }},
      {7, [&] { return c7_ablation_ordering(work.path()); }},
      {8, [&] { return c8_embedding(work.path()); }},
      {10, [&] { return c10_conversion(work.path()); }},
  };
  static const char* names[] = {"",
                                "instance norm statistics",
                                "adaptive instance norm contract",
                                "zero-vector pooling",
                                "gradient correctness",
                                "loss oracles",
                                "overfit sanity",
                                "ablation ordering",
                                "speaker embedding quality",
                                "dsp round trips",
                                "variable-length conversion",
                                "checkpoint round trip"};
  std::map<int, std::pair<Outcome, double>> results;
  for (const auto& [id, run] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    spdlog::info("criterion {}: {}", id, names[id]);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s: %s (%.1fs)\n", id, o.pass ? "PASS" : "FAIL", names[id], secs);
    std::fflush(stdout);
    results[id] = {o, secs};
  }
  std::printf("\nsummary\n");
  int failed = 0;
  for (const auto& [id, r] : results) {
    std::printf("%2d %s  %-32s %s\n", id, r.first.pass ? "PASS" : "FAIL", names[id], r.first.detail.c_str());
    failed += !r.first.pass;
  }
  return failed == 0 ? 0 : 1;
}
