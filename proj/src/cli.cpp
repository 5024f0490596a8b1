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

#include "ovc/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <fstream>
#include <sstream>

#include "ovc/checkpoint.hpp"
#include "ovc/config.hpp"
#include "ovc/conversion.hpp"
#include "ovc/corpus.hpp"
#include "ovc/eval.hpp"
#include "ovc/plot.hpp"
#include "ovc/toy_corpus.hpp"
#include "ovc/training.hpp"

namespace fs = std::filesystem;

namespace ovc {

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::ingestion: return kExitIngestion;
    case ErrorKind::numeric: return kExitNumeric;
    case ErrorKind::load: return kExitLoad;
    case ErrorKind::size: return kExitSize;
  }
  return kExitFailure;
}

namespace {

struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  bool verbose = false;
  bool quiet = false;
};

struct Paths {
  fs::path cache;
  fs::path features() const { return cache / "features"; }
  fs::path norm() const { return cache / "norm.ovcm"; }
  fs::path manifest(const char* split) const { return cache / (std::string(split) + ".tsv"); }
  fs::path speaker_info() const { return cache / "speaker-info.txt"; }
};

void write_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp);
    if (!out) throw IngestionError("cannot write " + tmp.string());
    out << text;
    if (!out) throw IngestionError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

SplitManifests load_split(const Paths& p) {
  SplitManifests s;
  s.train = Manifest::load(p.manifest("train"));
  s.valid = Manifest::load(p.manifest("valid"));
  s.test = Manifest::load(p.manifest("test"));
  return s;
}

FeatureCache load_cache(const Paths& p, const DspConfig& dsp) {
  FeatureCache cache = FeatureCache::load(p.features());
  if (cache.fingerprint() != dsp.fingerprint())
    throw ConfigError("feature cache " + p.features().string() + " was built with dsp fingerprint " +
                      cache.fingerprint() + ", current settings give " + dsp.fingerprint());
  return cache;
}

std::vector<AblationSetting> parse_settings(const std::string& s) {
  if (s == "all")
    return {AblationSetting::content_with_in, AblationSetting::content_without_in,
            AblationSetting::content_without_in_speaker_with_in};
  std::vector<AblationSetting> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(ablation_from_string(item));
  return out;
}

std::pair<std::string, std::string> split_pair(const std::string& s, char sep, const char* what) {
  const auto pos = s.find(sep);
  if (pos == std::string::npos || pos == 0 || pos + 1 == s.size())
    throw ConfigError(std::string("malformed ") + what + " '" + s + "'");
  return {s.substr(0, pos), s.substr(pos + 1)};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("ovc", sink);
  logger->set_pattern("[%l] %v");
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> l;
    ~Restore() { spdlog::set_default_logger(l); }
  } restore{previous};

  CLI::App app{"ovc: one-shot voice conversion toolkit"};
  app.name("ovc");
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("-c,--config", g.config_file, "key=value config file");
  app.add_option("-s,--set", g.overrides, "override one key, e.g. --set train.lr=0.001")
      ->expected(1)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.add_flag("-v,--verbose", g.verbose, "debug logging");
  app.add_flag("-q,--quiet", g.quiet, "warnings and errors only");

  // Subcommand-specific values.
  std::string root, resume, ablation, source, checkpoint, output, dump_dir, settings = "all";
  std::string projection, speaker_info, out_dir;
  std::vector<std::string> targets, checkpoints, pairs, dumps, gv_files;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> iters;
  bool frame_level = false, shuffled = false;
  int max_utts = 100;
  ToyCorpusConfig toy;

  auto* preprocess = app.add_subcommand("preprocess", "build manifests, feature cache and normalization stats");
  preprocess->add_option("--root", root, "corpus root (speaker subdirectories of .wav files)");

  auto* train_cmd = app.add_subcommand("train", "train a model on the cached training split");
  train_cmd->add_option("--seed", seed, "train.seed");
  train_cmd->add_option("--iters", iters, "train.total_iters");
  train_cmd->add_option("--resume", resume, "checkpoint to resume from");
  train_cmd->add_option("--ablation", ablation, "content_with_in | content_without_in | content_without_in_speaker_with_in");

  auto* convert_cmd = app.add_subcommand("convert", "convert a source utterance to a target voice");
  convert_cmd->add_option("--source", source, "source .wav")->required();
  convert_cmd->add_option("--target", targets, "target .wav (repeatable; codes are averaged)")->required();
  convert_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  convert_cmd->add_option("--out", output, "output .wav")->required();
  convert_cmd->add_option("--dump-dir", dump_dir, "write intermediate mel matrices here");

  auto* probe_cmd = app.add_subcommand("eval-probe", "speaker probe on content codes for ablation settings");
  probe_cmd->add_option("--settings", settings, "all or a comma list of settings");
  probe_cmd->add_option("--checkpoint", checkpoints, "setting=path, skips training that setting");
  probe_cmd->add_flag("--frame-level", frame_level, "one example per content frame");
  probe_cmd->add_flag("--shuffled-labels", shuffled, "chance-level control with permuted labels");
  probe_cmd->add_option("--seed", seed, "train.seed and probe.seed");
  probe_cmd->add_option("--iters", iters, "train.total_iters");

  auto* emb_cmd = app.add_subcommand("eval-embedding", "speaker probe and 2-D projection of speaker codes");
  emb_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();

  auto* gv_cmd = app.add_subcommand("eval-gv", "global variance of converted vs target speech");
  gv_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  gv_cmd->add_option("--pair", pairs, "source_speaker:target_speaker (repeatable)");
  gv_cmd->add_option("--max-utts", max_utts, "utterances per speaker and pair");

  auto* plot_cmd = app.add_subcommand("plot", "heatmaps, GV curves and embedding scatter");
  plot_cmd->add_option("--dump-dir", dumps, "conversion dump directory (repeatable)");
  plot_cmd->add_option("--gv", gv_files, "GV profile written by eval-gv (repeatable)");
  plot_cmd->add_option("--projection", projection, "projection TSV written by eval-embedding");
  plot_cmd->add_option("--speaker-info", speaker_info, "speaker table with gender column");
  plot_cmd->add_option("--out-dir", out_dir, "default: <report_dir>/plots");

  auto* info_cmd = app.add_subcommand("info", "print checkpoint metadata");
  info_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();

  auto* config_cmd = app.add_subcommand("show-config", "print the effective configuration");

  auto* toy_cmd = app.add_subcommand("make-toy", "write a synthetic multi-speaker corpus");
  toy_cmd->add_option("--out", root, "output directory")->required();
  toy_cmd->add_option("--speakers", toy.n_speakers, "number of speakers");
  toy_cmd->add_option("--utts", toy.utterances_per_speaker, "utterances per speaker");
  toy_cmd->add_option("--seed", toy.seed, "random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }
  logger->set_level(g.verbose ? spdlog::level::debug : g.quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    RunConfig rc;
    bool dsp_explicit = false;
    if (!g.config_file.empty()) {
      rc.load_file(g.config_file);
      dsp_explicit = true;
    }
    rc.apply_env();
    for (const auto& o : g.overrides) {
      const auto [k, v] = split_pair(o, '=', "--set value");
      rc.set(k, v);
      if (k.rfind("dsp.", 0) == 0) dsp_explicit = true;
    }
    if (seed) {
      rc.train.seed = *seed;
      if (probe_cmd->parsed()) rc.probe.seed = *seed;
    }
    if (iters) rc.train.total_iters = *iters;
    if (!ablation.empty()) rc.arch = apply_ablation(rc.arch, ablation_from_string(ablation));
    rc.validate();
    const Paths paths{rc.corpus.cache_dir};
    const fs::path report_dir = rc.corpus.report_dir;

    if (config_cmd->parsed()) {
      out << rc.to_text();
    } else if (toy_cmd->parsed()) {
      toy.sample_rate = rc.dsp.sample_rate_hz;
      const auto speakers = write_toy_corpus(root, toy);
      out << "wrote " << speakers.size() << " speakers x " << toy.utterances_per_speaker
          << " utterances to " << root << "\n";
    } else if (preprocess->parsed()) {
      if (root.empty()) root = rc.corpus.root;
      if (root.empty()) throw ConfigError("preprocess: no corpus root (--root or corpus.root)");
      const SplitManifests split =
          build_manifest(root, rc.corpus.test_speakers, rc.corpus.valid_fraction, rc.corpus.split_seed);
      Manifest all = split.train;
      for (const auto* m : {&split.valid, &split.test})
        all.records.insert(all.records.end(), m->records.begin(), m->records.end());
      FeatureCache cache = preprocess_corpus(all, rc.dsp, rc.corpus.min_frames);
      int floored = 0;
      const NormStats norm = compute_norm_stats(cache, split.train, &floored);
      fs::create_directories(paths.cache);
      split.train.save(paths.manifest("train"));
      split.valid.save(paths.manifest("valid"));
      split.test.save(paths.manifest("test"));
      cache.save(paths.features());
      norm.save(paths.norm());
      if (fs::exists(fs::path(root) / "speaker-info.txt"))
        fs::copy_file(fs::path(root) / "speaker-info.txt", paths.speaker_info(),
                      fs::copy_options::overwrite_existing);
      out << "utterances: train " << split.train.size() << ", valid " << split.valid.size() << ", test "
          << split.test.size() << "\ncached " << cache.size() << ", skipped " << cache.skipped().size()
          << ", floored bins " << floored << "\n";
    } else if (train_cmd->parsed()) {
      const SplitManifests split = load_split(paths);
      const FeatureCache cache = load_cache(paths, rc.dsp);
      const NormStats norm = NormStats::load(paths.norm());
      TrainOptions to;
      to.dsp = rc.dsp;
      to.checkpoint_dir = rc.corpus.checkpoint_dir;
      to.metrics_log = fs::path(rc.corpus.checkpoint_dir) / "metrics.tsv";
      if (!resume.empty()) to.resume_from = load_checkpoint(resume);
      TrainResult r = train(subset_cache(cache, split.train), norm, rc.arch, rc.train, to);
      out << "trained to iteration " << r.final.training->iteration << "; checkpoint "
          << (to.checkpoint_dir / "latest.ovck").string() << "\n";
    } else if (convert_cmd->parsed()) {
      ConversionRequest req;
      req.source_audio = source;
      for (const auto& t : targets) req.target_audio.push_back(t);
      req.checkpoint = checkpoint;
      req.output = output;
      req.dump_dir = dump_dir;
      if (dsp_explicit) req.expected_dsp = rc.dsp;
      const ConversionResult r = convert(req);
      out << "wrote " << output << " (" << r.converted_mel.rows() << " frames)\n";
    } else if (probe_cmd->parsed()) {
      const SplitManifests split = load_split(paths);
      const FeatureCache cache = load_cache(paths, rc.dsp);
      RepOptions reps;
      reps.segment_len = rc.train.segment_len;
      reps.frame_level = frame_level;
      reps.shuffled_labels = shuffled;
      reps.shuffle_seed = rc.probe.seed;
      std::map<AblationSetting, fs::path> given;
      for (const auto& c : checkpoints) {
        const auto [s, p] = split_pair(c, '=', "--checkpoint value");
        given[ablation_from_string(s)] = p;
      }
      std::vector<AblationRow> rows;
      for (const AblationSetting s : parse_settings(settings)) {
        if (auto it = given.find(s); it != given.end()) {
          rows.push_back(probe_setting(cache, split, load_checkpoint(it->second), s, rc.probe, reps));
        } else {
          AblationOptions ao;
          ao.reps = reps;
          ao.checkpoint_dir = fs::path(rc.corpus.checkpoint_dir) / "ablation";
          auto r = run_ablation(cache, split, rc.dsp, rc.arch, rc.train, rc.probe, {s}, ao);
          rows.push_back(r.front());
        }
      }
      const std::string report = format_ablation_report(rows);
      write_atomic(report_dir / "probe_report.tsv", report);
      out << report;
    } else if (emb_cmd->parsed()) {
      const SplitManifests split = load_split(paths);
      const FeatureCache cache = load_cache(paths, rc.dsp);
      const EmbeddingEvalResult r = speaker_embedding_eval(cache, split, load_checkpoint(checkpoint), rc.probe);
      const std::string report = format_embedding_report(r);
      write_projection(report_dir / "projection.tsv", r.projection);
      write_atomic(report_dir / "embedding_report.tsv", report);
      out << report;
    } else if (gv_cmd->parsed()) {
      const SplitManifests split = load_split(paths);
      const FeatureCache cache = load_cache(paths, rc.dsp);
      const Checkpoint ckpt = load_checkpoint(checkpoint);
      Manifest all = split.train;
      for (const auto* m : {&split.valid, &split.test})
        all.records.insert(all.records.end(), m->records.begin(), m->records.end());
      std::vector<std::pair<std::string, std::string>> todo;
      for (const auto& p : pairs) todo.push_back(split_pair(p, ':', "--pair value"));
      if (todo.empty()) {
        auto spk = split.test.speakers();
        if (spk.size() < 2) spk = split.valid.speakers();
        for (std::size_t i = 0; i < spk.size() && todo.size() < 4; ++i)
          for (std::size_t j = 0; j < spk.size() && todo.size() < 4; ++j)
            if (i != j) todo.push_back({spk[i], spk[j]});
      }
      if (todo.empty()) throw ConfigError("eval-gv: need at least two speakers or explicit --pair");
      std::vector<GvPairResult> results;
      for (const auto& [s, t] : todo) {
        results.push_back(gv_pair(cache, all, ckpt, s, t, max_utts, rc.probe.seed));
        write_gv_profile(report_dir / ("gv_" + s + "_to_" + t + ".tsv"), results.back());
      }
      const std::string report = format_gv_report(results);
      write_atomic(report_dir / "gv_report.tsv", report);
      out << report;
    } else if (plot_cmd->parsed()) {
      PlotArtifacts a;
      for (const auto& d : dumps) a.conversions.push_back(load_conversion_dump(d));
      for (const auto& f : gv_files) a.conversions.push_back(load_gv_profile(f));
      if (!projection.empty()) a.projection = read_projection(projection);
      if (speaker_info.empty() && fs::exists(paths.speaker_info())) speaker_info = paths.speaker_info().string();
      if (!speaker_info.empty()) a.gender = load_speaker_info(speaker_info);
      const PlotReport r = export_plots(a, out_dir.empty() ? report_dir / "plots" : fs::path(out_dir));
      for (const auto& f : r.files) out << f.string() << "\n";
      out << r.files.size() << " files, " << r.warnings.size() << " warnings\n";
    } else if (info_cmd->parsed()) {
      out << describe_checkpoint(load_checkpoint(checkpoint));
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ovc
