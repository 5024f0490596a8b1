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

#include "ovc/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "ovc/rng.hpp"
#include "ovc/wav.hpp"

namespace fs = std::filesystem;

namespace ovc {
namespace {

bool is_wav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string file_stem_for(const std::string& id, std::size_t index) {
  std::string s;
  for (char c : id) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
  return std::to_string(index) + "_" + s + ".mel";
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw LoadError("truncated matrix header");
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

std::vector<std::string> Manifest::speakers() const {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.speaker_id);
  return {s.begin(), s.end()};
}

void Manifest::save(const fs::path& path) const {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write manifest " + path.string());
  out.precision(9);
  for (const auto& r : records)
    out << r.utterance_id << '\t' << r.speaker_id << '\t' << r.audio_path.string() << '\t'
        << r.duration_s << '\n';
}

Manifest Manifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open manifest " + path.string());
  Manifest m;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 4)
      throw IngestionError(path.string() + ":" + std::to_string(lineno) + ": expected 4 fields");
    if (!seen.insert(f[0]).second)
      throw IngestionError(path.string() + ": duplicate utterance id " + f[0]);
    if (f[1].empty()) throw IngestionError(path.string() + ": empty speaker id for " + f[0]);
    m.records.push_back({f[0], f[1], f[2], std::stod(f[3])});
  }
  return m;
}

SplitManifests build_manifest(const fs::path& root_dir, int test_speaker_count,
                              double valid_fraction, std::uint64_t seed) {
  if (!fs::is_directory(root_dir))
    throw IngestionError("corpus root " + root_dir.string() + " is not a directory");
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0))
    throw ConfigError("valid_fraction must be in [0, 1)");

  std::vector<fs::path> speaker_dirs;
  for (const auto& e : fs::directory_iterator(root_dir))
    if (e.is_directory()) speaker_dirs.push_back(e.path());
  std::sort(speaker_dirs.begin(), speaker_dirs.end());

  std::map<std::string, std::vector<ManifestRecord>> by_speaker;
  std::set<std::string> ids;
  for (const auto& dir : speaker_dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && is_wav(e.path())) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    const std::string speaker = dir.filename().string();
    for (const auto& f : files) {
      std::string id = f.stem().string();
      if (ids.count(id)) id = speaker + "_" + id;
      ids.insert(id);
      double dur = 0.0;
      try {
        dur = read_wav_info(f).duration_s();
      } catch (const IngestionError& e) {
        spdlog::warn("manifest: {}", e.what());
      }
      by_speaker[speaker].push_back({id, speaker, f, dur});
    }
  }
  if (by_speaker.empty())
    throw IngestionError("no speaker directories with .wav files under " + root_dir.string());
  if (test_speaker_count < 0 || test_speaker_count >= static_cast<int>(by_speaker.size()))
    throw ConfigError("test_speaker_count " + std::to_string(test_speaker_count) +
                      " must be in [0, " + std::to_string(by_speaker.size()) + ")");

  Rng rng(seed);
  std::vector<std::string> speakers;
  for (const auto& [s, _] : by_speaker) speakers.push_back(s);
  shuffle(speakers, rng);
  const std::set<std::string> test_set(speakers.begin(), speakers.begin() + test_speaker_count);

  SplitManifests out;
  std::vector<ManifestRecord> rest;
  for (const auto& [s, recs] : by_speaker) {
    auto& dst = test_set.count(s) ? out.test.records : rest;
    dst.insert(dst.end(), recs.begin(), recs.end());
  }
  shuffle(rest, rng);
  const auto n_valid = static_cast<std::size_t>(std::llround(valid_fraction * rest.size()));
  out.valid.records.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_valid));
  out.train.records.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_valid), rest.end());
  auto by_id = [](const ManifestRecord& a, const ManifestRecord& b) {
    return a.utterance_id < b.utterance_id;
  };
  std::sort(out.train.records.begin(), out.train.records.end(), by_id);
  std::sort(out.valid.records.begin(), out.valid.records.end(), by_id);
  return out;
}

void write_matrix(const fs::path& path, const MatF& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  out.write("OVCM", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  std::vector<unsigned char> buf(static_cast<std::size_t>(m.size()) * 4);
  std::size_t o = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::uint32_t u;
      float f = m(r, c);
      std::memcpy(&u, &f, 4);
      for (int b = 0; b < 4; ++b) buf[o++] = static_cast<unsigned char>(u >> (8 * b));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IngestionError("short write to " + path.string());
}

MatF read_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open matrix " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "OVCM", 4) != 0)
    throw LoadError(path.string() + ": bad matrix magic");
  const std::uint32_t version = get_u32(in);
  if (version != 1) throw LoadError(path.string() + ": unsupported matrix version " + std::to_string(version));
  const std::uint32_t rows = get_u32(in), cols = get_u32(in);
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols * 4);
  if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw LoadError(path.string() + ": truncated matrix data");
  MatF m(rows, cols);
  std::size_t o = 0;
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      std::uint32_t u = buf[o] | (buf[o + 1] << 8) | (buf[o + 2] << 16) |
                        (static_cast<std::uint32_t>(buf[o + 3]) << 24);
      o += 4;
      float f;
      std::memcpy(&f, &u, 4);
      m(r, c) = f;
    }
  }
  return m;
}

void FeatureCache::insert(const std::string& utterance_id, MatF mel) {
  if (mel.cols() != n_mels_)
    throw SizeError("cache: " + utterance_id + " has " + std::to_string(mel.cols()) +
                    " mel bins, cache holds " + std::to_string(n_mels_));
  entries_[utterance_id] = std::move(mel);
}

const MatF& FeatureCache::at(const std::string& utterance_id) const {
  auto it = entries_.find(utterance_id);
  if (it == entries_.end()) throw IngestionError("cache has no utterance " + utterance_id);
  return it->second;
}

void FeatureCache::save(const fs::path& dir) const {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.tsv");
  if (!index) throw IngestionError("cannot write cache index in " + dir.string());
  index << "#fingerprint=" << fingerprint_ << "\tn_mels=" << n_mels_ << '\n';
  std::size_t i = 0;
  for (const auto& [id, m] : entries_) {
    const std::string file = file_stem_for(id, i++);
    write_matrix(dir / file, m);
    index << id << '\t' << file << '\t' << m.rows() << '\n';
  }
  std::ofstream skip(dir / "skipped.tsv");
  for (const auto& s : skipped_) skip << s.utterance_id << '\t' << s.reason << '\n';
}

FeatureCache FeatureCache::load(const fs::path& dir) {
  std::ifstream index(dir / "index.tsv");
  if (!index) throw LoadError("no cache index in " + dir.string());
  std::string header;
  std::getline(index, header);
  auto fields = split_tabs(header);
  if (fields.size() != 2 || fields[0].rfind("#fingerprint=", 0) != 0 ||
      fields[1].rfind("n_mels=", 0) != 0)
    throw LoadError(dir.string() + ": malformed cache index header");
  FeatureCache cache(fields[0].substr(13), std::stoi(fields[1].substr(7)));
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    auto f = split_tabs(line);
    if (f.size() != 3) throw LoadError(dir.string() + ": malformed cache index line");
    MatF m = read_matrix(dir / f[1]);
    if (m.rows() != std::stol(f[2])) throw LoadError(dir.string() + ": frame count mismatch for " + f[0]);
    cache.insert(f[0], std::move(m));
  }
  std::ifstream skip(dir / "skipped.tsv");
  while (std::getline(skip, line)) {
    auto f = split_tabs(line);
    if (f.size() == 2) cache.skipped().push_back({f[0], f[1]});
  }
  return cache;
}

FeatureCache preprocess_corpus(const Manifest& manifest, const DspConfig& dsp, int min_frames) {
  dsp.validate();
  if (manifest.empty()) throw IngestionError("preprocess: manifest is empty");
  const MelFilterbank fb(dsp);
  FeatureCache cache(dsp.fingerprint(), dsp.n_mels);
  std::size_t decode_failures = 0;
  for (const auto& rec : manifest.records) {
    Waveform w;
    try {
      w = read_wav(rec.audio_path);
    } catch (const IngestionError& e) {
      ++decode_failures;
      spdlog::warn("preprocess: skipping {}: {}", rec.utterance_id, e.what());
      cache.skipped().push_back({rec.utterance_id, std::string("decode_error: ") + e.what()});
      continue;
    }
    Waveform c = condition_waveform(w, dsp);
    const int frames = frame_count(c.samples.size(), dsp);
    if (frames < std::max(1, min_frames)) {
      cache.skipped().push_back({rec.utterance_id, "too_short: " + std::to_string(frames) + " frames"});
      continue;
    }
    cache.insert(rec.utterance_id, extract_log_mel(c, dsp, fb).cast<float>());
  }
  if (decode_failures == manifest.size())
    throw IngestionError("preprocess: none of the " + std::to_string(manifest.size()) +
                         " files could be decoded");
  return cache;
}

MelSpectrogram NormStats::normalize(const MelSpectrogram& m) const {
  if (m.cols() != mean.size()) throw SizeError("normalize: mel bin count mismatch");
  return ((m.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array()).matrix();
}

MelSpectrogram NormStats::denormalize(const MelSpectrogram& m) const {
  if (m.cols() != mean.size()) throw SizeError("denormalize: mel bin count mismatch");
  return ((m.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose());
}

void NormStats::save(const fs::path& path) const {
  MatF m(2, mean.size());
  m.row(0) = mean.transpose().cast<float>();
  m.row(1) = std.transpose().cast<float>();
  write_matrix(path, m);
}

NormStats NormStats::load(const fs::path& path) {
  MatF m = read_matrix(path);
  if (m.rows() != 2) throw LoadError(path.string() + ": norm stats must have 2 rows");
  return {m.row(0).transpose().cast<double>(), m.row(1).transpose().cast<double>()};
}

NormStats compute_norm_stats(const FeatureCache& cache, const Manifest& train_manifest,
                             int* floored_bins) {
  const int bins = cache.n_mels();
  Vec sum = Vec::Zero(bins);
  std::size_t frames = 0;
  std::vector<const MatF*> mats;
  for (const auto& r : train_manifest.records) {
    if (!cache.contains(r.utterance_id)) continue;
    const MatF& m = cache.at(r.utterance_id);
    mats.push_back(&m);
    sum += m.cast<double>().colwise().sum().transpose();
    frames += m.rows();
  }
  if (frames == 0) throw IngestionError("norm stats: no training frames in cache");
  NormStats st;
  st.mean = sum / static_cast<double>(frames);
  Vec sq = Vec::Zero(bins);
  for (const MatF* m : mats)
    sq += (m->cast<double>().rowwise() - st.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  st.std = (sq / static_cast<double>(frames)).cwiseSqrt();
  int floored = 0;
  for (int b = 0; b < bins; ++b) {
    if (st.std(b) < NormStats::kStdFloor) {
      st.std(b) = NormStats::kStdFloor;
      ++floored;
    }
  }
  if (floored > 0) spdlog::warn("norm stats: {} mel bins have zero variance; std floored", floored);
  if (floored_bins) *floored_bins = floored;
  return st;
}

}  // namespace ovc
