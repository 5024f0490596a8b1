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

#include "ovc/training.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ovc/config.hpp"

namespace fs = std::filesystem;

namespace ovc {

void TrainConfig::validate(const ArchConfig& arch) const {
  auto bad = [](const std::string& why) { return ConfigError("train: " + why); };
  if (!(lambda_rec >= 0.0) || !(lambda_kl >= 0.0)) throw bad("loss weights must be non-negative");
  if (!(lr > 0.0)) throw bad("lr must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw bad("adam betas must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw bad("adam_eps must be positive");
  if (!(weight_decay >= 0.0)) throw bad("weight_decay must be non-negative");
  if (batch_size < 1) throw bad("batch_size must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw bad("dropout must be in [0, 1)");
  if (segment_len < arch.downsample_factor || segment_len % arch.downsample_factor != 0)
    throw bad("segment_len " + std::to_string(segment_len) + " must be a positive multiple of " +
              std::to_string(arch.downsample_factor));
  if (total_iters < 0) throw bad("total_iters must be non-negative");
  if (checkpoint_every < 0) throw bad("checkpoint_every must be non-negative");
  if (log_every < 1) throw bad("log_every must be at least 1");
}

std::string format_metrics(const TrainMetrics& m) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld\t%.17g\t%.17g\t%.17g\t%.3f",
                static_cast<long long>(m.iteration), m.l_rec, m.l_kl, m.total, m.seconds);
  return buf;
}

std::vector<TrainMetrics> read_metrics_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read metrics log " + path.string());
  std::vector<TrainMetrics> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("iter", 0) == 0) continue;
    std::istringstream is(line);
    TrainMetrics m;
    if (!(is >> m.iteration >> m.l_rec >> m.l_kl >> m.total >> m.seconds))
      throw IngestionError("malformed metrics line in " + path.string() + ": " + line);
    out.push_back(m);
  }
  return out;
}

double reconstruction_loss(const std::vector<MelSpectrogram>& x,
                           const std::vector<MelSpectrogram>& x_hat) {
  if (x.size() != x_hat.size() || x.empty()) throw SizeError("reconstruction_loss: batch mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].rows() != x_hat[i].rows() || x[i].cols() != x_hat[i].cols() || x[i].size() == 0)
      throw SizeError("reconstruction_loss: shape mismatch at item " + std::to_string(i));
    sum += (x[i] - x_hat[i]).cwiseAbs().mean();
  }
  return sum / static_cast<double>(x.size());
}

double kl_loss(const std::vector<Mat>& z_c_mean) {
  if (z_c_mean.empty()) throw SizeError("kl_loss: empty batch");
  double sum = 0.0;
  for (const Mat& z : z_c_mean) {
    if (z.size() == 0) throw SizeError("kl_loss: empty content code");
    sum += z.squaredNorm() / static_cast<double>(z.size());
  }
  return sum / static_cast<double>(z_c_mean.size());
}

double total_loss(double l_rec, double l_kl, const TrainConfig& cfg) {
  return cfg.lambda_rec * l_rec + cfg.lambda_kl * l_kl;
}

SegmentSampler::SegmentSampler(const FeatureCache& cache, const NormStats& norm, int segment_len)
    : cache_(cache), norm_(norm), segment_len_(segment_len) {
  if (norm.mean.size() != cache.n_mels() || norm.std.size() != cache.n_mels())
    throw SizeError("normalization stats do not match the cache mel count");
  for (const auto& [id, mel] : cache.entries())
    if (mel.rows() >= segment_len) ids_.push_back(id);
  if (ids_.empty())
    throw SizeError("no cached utterance has at least " + std::to_string(segment_len) + " frames");
}

MelSpectrogram SegmentSampler::sample(Rng& rng) const { return sample(rng, nullptr); }

MelSpectrogram SegmentSampler::sample(Rng& rng, std::string* utterance_id) const {
  const std::string& id = ids_[rng.below(ids_.size())];
  const MatF& mel = cache_.at(id);
  const auto start = static_cast<Eigen::Index>(rng.below(mel.rows() - segment_len_ + 1));
  if (utterance_id) *utterance_id = id;
  return norm_.normalize(mel.middleRows(start, segment_len_).cast<double>());
}

MelSpectrogram sample_segment(const FeatureCache& cache, const NormStats& norm, Rng& rng,
                              int segment_len) {
  return SegmentSampler(cache, norm, segment_len).sample(rng);
}

void adam_step(ModelParams& params, const std::map<std::string, Mat>& grads, AdamState& state,
               const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (const auto& [name, grad] : grads)
    if (!grad.allFinite()) throw NumericError("non-finite gradient in tensor " + name);
  for (const auto& [name, grad] : grads) {
    Mat& p = params.tensors.at(name);
    Mat& m = state.m[name];
    Mat& v = state.v[name];
    if (m.size() == 0) m = Mat::Zero(p.rows(), p.cols());
    if (v.size() == 0) v = Mat::Zero(p.rows(), p.cols());
    const Mat g = grad + cfg.weight_decay * p;
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseAbs2();
    p.array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
  }
}

LossBreakdown evaluate_objective(const ArchConfig& arch, const ModelParams& params,
                                 const Mat& batch_mels, int batch, Rng& rng,
                                 const TrainConfig& cfg, Mode mode, bool with_grads) {
  Tape t(with_grads);
  ForwardContext ctx{mode, &rng, nullptr};
  Var x = t.constant(batch_mels, batch);
  Var z_s = graph::speaker_encoder(t, arch, params, x, ctx);
  Var mu = graph::content_encoder(t, arch, params, x, ctx);
  Var z_c = mu;
  if (mode == Mode::train) {
    const Mat& m = t.value(mu);
    z_c = ops::add(t, mu, t.constant(sample_content(Mat::Zero(m.rows(), m.cols()), rng), batch));
  }
  Var x_hat = graph::decoder(t, arch, params, z_s, z_c, ctx);
  Var l_rec = ops::l1_loss(t, x_hat, x);
  Var l_kl = ops::mean_square(t, mu);
  Var total = ops::weighted_sum(t, {{cfg.lambda_rec, l_rec}, {cfg.lambda_kl, l_kl}});
  LossBreakdown out;
  out.l_rec = t.value(l_rec)(0, 0);
  out.l_kl = t.value(l_kl)(0, 0);
  out.total = t.value(total)(0, 0);
  if (with_grads) {
    t.backward(total);
    out.grads = t.parameter_grads();
  }
  return out;
}

namespace {

void write_checkpoint_pair(const Checkpoint& c, const fs::path& dir) {
  char name[64];
  std::snprintf(name, sizeof name, "ckpt_%08lld.ovck", static_cast<long long>(c.training->iteration));
  save_checkpoint(c, dir / name);
  save_checkpoint(c, dir / "latest.ovck");
}

}  // namespace

TrainResult train(const FeatureCache& cache, const NormStats& norm, const ArchConfig& arch_in,
                  const TrainConfig& cfg, const TrainOptions& options) {
  ArchConfig arch = arch_in;
  arch.dropout_rate = cfg.dropout;
  arch.validate();
  cfg.validate(arch);
  if (cache.n_mels() != arch.n_mels)
    throw ConfigError("cache has " + std::to_string(cache.n_mels()) + " mel channels, model expects " +
                      std::to_string(arch.n_mels));
  if (cache.fingerprint() != options.dsp.fingerprint())
    throw ConfigError("cache fingerprint " + cache.fingerprint() +
                      " does not match the dsp settings (" + options.dsp.fingerprint() + ")");
  SegmentSampler sampler(cache, norm, cfg.segment_len);

  Checkpoint ckpt;
  ckpt.arch = arch;
  ckpt.norm = norm;
  ckpt.dsp = options.dsp;
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  if (options.resume_from) {
    const Checkpoint& r = *options.resume_from;
    if (!r.training) throw LoadError("resume checkpoint carries no optimizer state");
    if (fields_to_text(arch_fields(), r.arch, "") != fields_to_text(arch_fields(), arch, ""))
      throw ConfigError("resume checkpoint architecture differs from the configured one");
    ckpt.params = r.params;
    ckpt.training = r.training;
    rng.set_state(r.training->rng_state);
  } else {
    ckpt.params = init_params(arch, cfg.seed);
    ckpt.training.emplace();
  }
  TrainingState& state = *ckpt.training;

  std::ofstream log;
  if (!options.metrics_log.empty()) {
    if (options.metrics_log.has_parent_path()) fs::create_directories(options.metrics_log.parent_path());
    const bool append = options.resume_from && fs::exists(options.metrics_log);
    log.open(options.metrics_log, append ? std::ios::app : std::ios::trunc);
    if (!log) throw IngestionError("cannot write metrics log " + options.metrics_log.string());
    if (!append) log << "iter\tl_rec\tl_kl\ttotal\tseconds\n";
  }
  if (!options.checkpoint_dir.empty()) fs::create_directories(options.checkpoint_dir);

  spdlog::info("training {} parameters from iteration {} to {}", ckpt.params.count(),
               state.iteration, cfg.total_iters);
  const auto t0 = std::chrono::steady_clock::now();
  TrainResult result;
  const int seg = cfg.segment_len;
  Mat batch(arch.n_mels, static_cast<Eigen::Index>(cfg.batch_size) * seg);
  while (state.iteration < cfg.total_iters) {
    for (int b = 0; b < cfg.batch_size; ++b)
      batch.middleCols(static_cast<Eigen::Index>(b) * seg, seg) = sampler.sample(rng).transpose();
    LossBreakdown loss =
        evaluate_objective(arch, ckpt.params, batch, cfg.batch_size, rng, cfg, Mode::train, true);
    ++state.iteration;
    if (!std::isfinite(loss.total))
      throw NumericError("non-finite loss at iteration " + std::to_string(state.iteration));
    adam_step(ckpt.params, loss.grads, state.adam, cfg);
    if (!ckpt.params.all_finite())
      throw NumericError("non-finite parameter after update at iteration " +
                         std::to_string(state.iteration));
    state.rng_state = rng.state();

    if (state.iteration % cfg.log_every == 0 || state.iteration == cfg.total_iters) {
      TrainMetrics m;
      m.iteration = state.iteration;
      m.l_rec = loss.l_rec;
      m.l_kl = loss.l_kl;
      m.total = loss.total;
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      // Wall time would make deterministic logs differ run to run.
      m.seconds = cfg.deterministic ? 0.0 : elapsed;
      result.metrics.push_back(m);
      if (log.is_open()) log << format_metrics(m) << "\n" << std::flush;
      if (options.on_log) options.on_log(m);
      spdlog::debug("iter {} l_rec {:.5f} l_kl {:.5f} total {:.5f} ({:.1f} s)", m.iteration, m.l_rec,
                    m.l_kl, m.total, elapsed);
    }
    if (!options.checkpoint_dir.empty() && cfg.checkpoint_every > 0 &&
        state.iteration % cfg.checkpoint_every == 0)
      write_checkpoint_pair(ckpt, options.checkpoint_dir);
  }
  state.rng_state = rng.state();
  if (!options.checkpoint_dir.empty()) write_checkpoint_pair(ckpt, options.checkpoint_dir);
  result.final = std::move(ckpt);
  return result;
}

}  // namespace ovc
