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

#include "ovc/eval.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ovc/conversion.hpp"

namespace fs = std::filesystem;

namespace ovc {
namespace {

void check_fingerprint(const FeatureCache& cache, const Checkpoint& ckpt) {
  if (cache.fingerprint() != ckpt.dsp.fingerprint())
    throw ConfigError("feature cache fingerprint " + cache.fingerprint() +
                      " does not match the checkpoint's " + ckpt.dsp.fingerprint());
}

Manifest merge(const Manifest& a, const Manifest& b) {
  Manifest m = a;
  m.records.insert(m.records.end(), b.records.begin(), b.records.end());
  return m;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> load_speaker_info(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read speaker info " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("ID", 0) == 0) continue;
    std::istringstream is(line);
    std::string id, age, gender;
    if (!(is >> id >> age >> gender)) continue;
    out[id] = gender;
  }
  return out;
}

FeatureCache subset_cache(const FeatureCache& cache, const Manifest& manifest) {
  FeatureCache out(cache.fingerprint(), cache.n_mels());
  for (const auto& r : manifest.records)
    if (cache.contains(r.utterance_id)) out.insert(r.utterance_id, cache.at(r.utterance_id));
  return out;
}

LabeledDataset extract_content_reps(const FeatureCache& cache, const Manifest& manifest,
                                    const Checkpoint& ckpt, const RepOptions& opts) {
  check_fingerprint(cache, ckpt);
  const Model model = ckpt.model();
  const int factor = model.arch().downsample_factor;
  if (opts.segment_len < factor || opts.segment_len % factor != 0)
    throw ConfigError("probe segment length must be a positive multiple of " + std::to_string(factor));
  LabeledDataset data;
  for (const auto& rec : manifest.records) {
    if (!cache.contains(rec.utterance_id)) continue;
    const MelSpectrogram mel = ckpt.norm.normalize(cache.at(rec.utterance_id).cast<double>());
    for (Eigen::Index s = 0; s + opts.segment_len <= mel.rows(); s += opts.segment_len) {
      const Mat z = model.content_encode(mel.middleRows(s, opts.segment_len));
      if (opts.frame_level) {
        for (Eigen::Index t = 0; t < z.cols(); ++t)
          data.add(z.col(t).cast<float>(), rec.speaker_id, rec.utterance_id);
      } else {
        data.add(z.rowwise().mean().cast<float>(), rec.speaker_id, rec.utterance_id);
      }
    }
  }
  if (opts.shuffled_labels) data.shuffle_labels(opts.shuffle_seed);
  return data;
}

LabeledDataset extract_speaker_reps(const FeatureCache& cache, const Manifest& manifest,
                                    const Checkpoint& ckpt) {
  check_fingerprint(cache, ckpt);
  const Model model = ckpt.model();
  LabeledDataset data;
  for (const auto& rec : manifest.records) {
    if (!cache.contains(rec.utterance_id)) continue;
    const MelSpectrogram mel = ckpt.norm.normalize(cache.at(rec.utterance_id).cast<double>());
    data.add(model.speaker_encode(mel).cast<float>(), rec.speaker_id, rec.utterance_id);
  }
  return data;
}

AblationRow probe_setting(const FeatureCache& cache, const SplitManifests& split,
                          const Checkpoint& ckpt, AblationSetting setting,
                          const ProbeConfig& probe_cfg, const RepOptions& reps) {
  const LabeledDataset data = extract_content_reps(cache, merge(split.train, split.valid), ckpt, reps);
  AblationRow row{setting, train_probe(data, probe_cfg), 0.0};
  return row;
}

std::vector<AblationRow> run_ablation(const FeatureCache& cache, const SplitManifests& split,
                                      const DspConfig& dsp, const ArchConfig& arch,
                                      const TrainConfig& train_cfg, const ProbeConfig& probe_cfg,
                                      const std::vector<AblationSetting>& settings,
                                      const AblationOptions& opts) {
  std::vector<AblationRow> rows;
  if (settings.empty()) return rows;
  const FeatureCache train_cache = subset_cache(cache, split.train);
  const NormStats norm = compute_norm_stats(cache, split.train);
  for (const AblationSetting s : settings) {
    spdlog::info("ablation: training {}", to_string(s));
    TrainOptions to;
    to.dsp = dsp;
    if (!opts.checkpoint_dir.empty()) to.checkpoint_dir = opts.checkpoint_dir / to_string(s);
    if (opts.on_log) to.on_log = [&, s](const TrainMetrics& m) { opts.on_log(s, m); };
    TrainResult tr = train(train_cache, norm, apply_ablation(arch, s), train_cfg, to);
    AblationRow row = probe_setting(cache, split, tr.final, s, probe_cfg, opts.reps);
    if (!tr.metrics.empty()) row.final_l_rec = tr.metrics.back().l_rec;
    spdlog::info("ablation: {} probe accuracy {:.4f}", to_string(s), row.probe.held_out_accuracy);
    rows.push_back(row);
  }
  return rows;
}

std::string format_ablation_report(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "# speaker identity probe on content codes\n";
  os << "setting\tcontent_in\tspeaker_in\taccuracy\ttrain_accuracy\tn_train\tn_held_out\tn_speakers\n";
  for (const auto& r : rows) {
    const ArchConfig a = apply_ablation(ArchConfig{}, r.setting);
    os << to_string(r.setting) << "\t" << (a.content_in ? "yes" : "no") << "\t"
       << (a.speaker_in ? "yes" : "no") << "\t" << pct(r.probe.held_out_accuracy) << "\t"
       << pct(r.probe.train_accuracy) << "\t" << r.probe.n_train << "\t" << r.probe.n_held_out
       << "\t" << r.probe.n_classes << "\n";
  }
  return os.str();
}

Mat pca_project(const Mat& features, int dims) {
  if (features.rows() == 0) return Mat(0, dims);
  const Mat centered = features.rowwise() - features.colwise().mean();
  const Mat cov = centered.transpose() * centered / std::max<double>(1.0, features.rows() - 1.0);
  Eigen::SelfAdjointEigenSolver<Mat> eig(cov);
  Mat axes = Mat::Zero(features.cols(), dims);
  const Eigen::Index n = features.cols();
  for (int d = 0; d < dims && d < n; ++d) {
    Vec v = eig.eigenvectors().col(n - 1 - d);
    Eigen::Index k;
    v.cwiseAbs().maxCoeff(&k);
    if (v(k) < 0) v = -v;
    axes.col(d) = v;
  }
  return centered * axes;
}

void write_projection(const fs::path& path, const std::vector<ProjectionPoint>& pts) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write projection " + path.string());
  char buf[64];
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "%.9g\t%.9g", p.x, p.y);
    out << p.utterance_id << "\t" << p.speaker_id << "\t" << buf << "\n";
  }
}

std::vector<ProjectionPoint> read_projection(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read projection " + path.string());
  std::vector<ProjectionPoint> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    ProjectionPoint p;
    if (!(is >> p.utterance_id >> p.speaker_id >> p.x >> p.y))
      throw IngestionError("malformed projection line: " + line);
    pts.push_back(p);
  }
  return pts;
}

EmbeddingEvalResult speaker_embedding_eval(const FeatureCache& cache, const SplitManifests& split,
                                           const Checkpoint& ckpt, const ProbeConfig& probe_cfg) {
  EmbeddingEvalResult r;
  const LabeledDataset seen = extract_speaker_reps(cache, merge(split.train, split.valid), ckpt);
  const LabeledDataset unseen = extract_speaker_reps(cache, split.test, ckpt);
  if (seen.n_classes() >= 2) r.seen = train_probe(seen, probe_cfg);
  if (unseen.n_classes() >= 2) r.unseen = train_probe(unseen, probe_cfg);

  const Eigen::Index n = static_cast<Eigen::Index>(seen.size() + unseen.size());
  if (n == 0) return r;
  Mat all(n, std::max(seen.features.cols(), unseen.features.cols()));
  if (seen.size()) all.topRows(static_cast<Eigen::Index>(seen.size())) = seen.features.cast<double>();
  if (unseen.size()) all.bottomRows(static_cast<Eigen::Index>(unseen.size())) = unseen.features.cast<double>();
  const Mat xy = pca_project(all, 2);
  auto emit = [&](const LabeledDataset& d, Eigen::Index offset) {
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Eigen::Index row = offset + static_cast<Eigen::Index>(i);
      r.projection.push_back({d.groups[i], d.label_names[static_cast<std::size_t>(d.labels[i])],
                              xy(row, 0), xy(row, 1)});
    }
  };
  emit(seen, 0);
  emit(unseen, static_cast<Eigen::Index>(seen.size()));
  return r;
}

std::string format_embedding_report(const EmbeddingEvalResult& r) {
  auto line = [](const char* name, const std::optional<ProbeResult>& p) {
    std::string s = std::string(name) + "\t";
    if (!p) return s + "n/a\tn/a\t0\t0\n";
    return s + pct(p->held_out_accuracy) + "\t" + std::to_string(p->n_classes) + "\t" +
           std::to_string(p->n_train) + "\t" + std::to_string(p->n_held_out) + "\n";
  };
  return "# speaker identity probe on speaker codes\nsplit\taccuracy\tn_speakers\tn_train\tn_held_out\n" +
         line("seen", r.seen) + line("unseen", r.unseen);
}

Vec global_variance(const std::vector<MelSpectrogram>& mels) {
  if (mels.empty()) throw SizeError("global_variance: no utterances");
  const Eigen::Index bins = mels.front().cols();
  Vec sum = Vec::Zero(bins);
  double n = 0.0;
  for (const auto& m : mels) {
    if (m.cols() != bins) throw SizeError("global_variance: utterances differ in bin count");
    sum += m.colwise().sum().transpose();
    n += static_cast<double>(m.rows());
  }
  if (n == 0.0) throw SizeError("global_variance: no frames");
  const Vec mean = sum / n;
  Vec var = Vec::Zero(bins);
  for (const auto& m : mels) var += (m.rowwise() - mean.transpose()).cwiseAbs2().colwise().sum().transpose();
  return var / n;
}

double gv_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw SizeError("gv_distance: length mismatch");
  return (a - b).norm();
}

GvPairResult gv_pair(const FeatureCache& cache, const Manifest& manifest, const Checkpoint& ckpt,
                     const std::string& source_speaker, const std::string& target_speaker,
                     int max_utterances, std::uint64_t seed) {
  check_fingerprint(cache, ckpt);
  std::vector<std::string> src_ids, tgt_ids;
  for (const auto& r : manifest.records) {
    if (!cache.contains(r.utterance_id)) continue;
    if (r.speaker_id == source_speaker) src_ids.push_back(r.utterance_id);
    if (r.speaker_id == target_speaker) tgt_ids.push_back(r.utterance_id);
  }
  if (src_ids.empty() || tgt_ids.empty())
    throw SizeError("gv: no cached utterances for " + (src_ids.empty() ? source_speaker : target_speaker));
  Rng rng(seed);
  shuffle(src_ids, rng);
  shuffle(tgt_ids, rng);
  const auto limit = static_cast<std::size_t>(std::max(1, max_utterances));
  if (src_ids.size() > limit) src_ids.resize(limit);
  if (tgt_ids.size() > limit) tgt_ids.resize(limit);

  const Model model = ckpt.model();
  auto mel = [&](const std::string& id) { return MelSpectrogram(cache.at(id).cast<double>()); };
  std::vector<MelSpectrogram> src, tgt, converted;
  for (const auto& id : tgt_ids) tgt.push_back(mel(id));
  for (const auto& id : src_ids) {
    src.push_back(mel(id));
    const MelSpectrogram& ref = tgt[rng.below(tgt.size())];
    converted.push_back(ckpt.norm.denormalize(
        convert_mel(model, ckpt.norm.normalize(src.back()), {ckpt.norm.normalize(ref)})));
  }
  GvPairResult r;
  r.source_speaker = source_speaker;
  r.target_speaker = target_speaker;
  r.source_gv = global_variance(src);
  r.target_gv = global_variance(tgt);
  r.converted_gv = global_variance(converted);
  r.n_converted = converted.size();
  return r;
}

std::string format_gv_report(const std::vector<GvPairResult>& pairs) {
  std::ostringstream os;
  os << "# global variance of converted speech\n";
  os << "source\ttarget\tn_converted\tdist_to_target\tdist_to_source\tcloser_to_target\n";
  for (const auto& p : pairs)
    os << p.source_speaker << "\t" << p.target_speaker << "\t" << p.n_converted << "\t"
       << pct(p.to_target()) << "\t" << pct(p.to_source()) << "\t"
       << (p.to_target() < p.to_source() ? "yes" : "no") << "\n";
  return os.str();
}

void write_gv_profile(const fs::path& path, const GvPairResult& r) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "bin\ttarget\tconverted\tsource\n";
  char buf[96];
  for (Eigen::Index i = 0; i < r.target_gv.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g\t%.9g\t%.9g", r.target_gv(i), r.converted_gv(i), r.source_gv(i));
    out << i << "\t" << buf << "\n";
  }
}

}  // namespace ovc
