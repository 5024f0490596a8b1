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

#include "ovc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ovc {
namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class N>
N parse_number(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    N v;
    if constexpr (std::is_same_v<N, double>)
      v = std::stod(s, &used);
    else if constexpr (std::is_same_v<N, std::uint64_t>)
      v = std::stoull(s, &used);
    else if constexpr (std::is_same_v<N, std::int64_t>)
      v = std::stoll(s, &used);
    else
      v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::logic_error&) {
    throw ConfigError("config: bad value '" + s + "' for " + key);
  }
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("config: bad boolean '" + s + "' for " + key);
}

// Builds a Field for a data member of any supported scalar type.
template <class T, class M>
Field<T> field(const std::string& key, M T::*member) {
  Field<T> f;
  f.key = key;
  f.get = [member](const T& o) -> std::string {
    const M& v = o.*member;
    if constexpr (std::is_same_v<M, bool>)
      return v ? "true" : "false";
    else if constexpr (std::is_same_v<M, double>)
      return fmt_double(v);
    else if constexpr (std::is_same_v<M, std::string>)
      return v;
    else
      return std::to_string(v);
  };
  f.set = [member, key](T& o, const std::string& s) {
    if constexpr (std::is_same_v<M, bool>)
      o.*member = parse_bool(key, s);
    else if constexpr (std::is_same_v<M, std::string>)
      o.*member = s;
    else
      o.*member = parse_number<M>(key, s);
  };
  return f;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <class T>
bool try_set(const std::vector<Field<T>>& fields, T& obj, const std::string& name,
             const std::string& value) {
  for (const auto& f : fields) {
    if (f.key == name) {
      f.set(obj, value);
      return true;
    }
  }
  return false;
}

template <class T>
bool try_get(const std::vector<Field<T>>& fields, const T& obj, const std::string& name,
             std::string* out) {
  for (const auto& f : fields) {
    if (f.key == name) {
      *out = f.get(obj);
      return true;
    }
  }
  return false;
}

}  // namespace

const std::vector<Field<DspConfig>>& dsp_fields() {
  using D = DspConfig;
  static const std::vector<Field<D>> f = {
      field("sample_rate_hz", &D::sample_rate_hz),
      field("win_length_ms", &D::win_length_ms),
      field("hop_length_ms", &D::hop_length_ms),
      field("fft_size", &D::fft_size),
      field("n_mels", &D::n_mels),
      field("fmin_hz", &D::fmin_hz),
      field("fmax_hz", &D::fmax_hz),
      field("log_floor", &D::log_floor),
      field("griffin_lim_iters", &D::griffin_lim_iters),
      field("griffin_lim_random_phase", &D::griffin_lim_random_phase),
      field("griffin_lim_seed", &D::griffin_lim_seed),
      field("trim_threshold_db", &D::trim_threshold_db),
      field("peak_dbfs", &D::peak_dbfs),
  };
  return f;
}

const std::vector<Field<ArchConfig>>& arch_fields() {
  using A = ArchConfig;
  static const std::vector<Field<A>> f = {
      field("n_mels", &A::n_mels),
      field("convbank_k", &A::convbank_k),
      field("bank_channels", &A::bank_channels),
      field("enc_channels", &A::enc_channels),
      field("n_enc_blocks", &A::n_enc_blocks),
      field("downsample_factor", &A::downsample_factor),
      field("speaker_dim", &A::speaker_dim),
      field("content_channels", &A::content_channels),
      field("dec_channels", &A::dec_channels),
      field("n_dec_blocks", &A::n_dec_blocks),
      field("n_dense_blocks", &A::n_dense_blocks),
      field("kernel_size", &A::kernel_size),
      field("dropout_rate", &A::dropout_rate),
      field("content_in", &A::content_in),
      field("speaker_in", &A::speaker_in),
  };
  return f;
}

const std::vector<Field<TrainConfig>>& train_fields() {
  using T = TrainConfig;
  static const std::vector<Field<T>> f = {
      field("lambda_rec", &T::lambda_rec),
      field("lambda_kl", &T::lambda_kl),
      field("lr", &T::lr),
      field("adam_beta1", &T::adam_beta1),
      field("adam_beta2", &T::adam_beta2),
      field("adam_eps", &T::adam_eps),
      field("batch_size", &T::batch_size),
      field("weight_decay", &T::weight_decay),
      field("dropout", &T::dropout),
      field("segment_len", &T::segment_len),
      field("total_iters", &T::total_iters),
      field("seed", &T::seed),
      field("checkpoint_every", &T::checkpoint_every),
      field("log_every", &T::log_every),
      field("deterministic", &T::deterministic),
  };
  return f;
}

const std::vector<Field<ProbeConfig>>& probe_fields() {
  using P = ProbeConfig;
  static const std::vector<Field<P>> f = {
      field("hidden_layers", &P::hidden_layers),
      field("hidden_units", &P::hidden_units),
      field("iters", &P::iters),
      field("batch", &P::batch),
      field("lr", &P::lr),
      field("beta1", &P::beta1),
      field("beta2", &P::beta2),
      field("held_out_fraction", &P::held_out_fraction),
      field("seed", &P::seed),
  };
  return f;
}

const std::vector<Field<CorpusConfig>>& corpus_fields() {
  using C = CorpusConfig;
  static const std::vector<Field<C>> f = {
      field("root", &C::root),
      field("cache_dir", &C::cache_dir),
      field("checkpoint_dir", &C::checkpoint_dir),
      field("report_dir", &C::report_dir),
      field("test_speakers", &C::test_speakers),
      field("valid_fraction", &C::valid_fraction),
      field("split_seed", &C::split_seed),
      field("min_frames", &C::min_frames),
  };
  return f;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text,
                                                                  const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    const std::string section = key.substr(0, dot), name = key.substr(dot + 1);
    bool ok = false;
    if (section == "dsp") ok = try_set(dsp_fields(), dsp, name, value);
    else if (section == "arch") ok = try_set(arch_fields(), arch, name, value);
    else if (section == "train") ok = try_set(train_fields(), train, name, value);
    else if (section == "probe") ok = try_set(probe_fields(), probe, name, value);
    else if (section == "corpus") ok = try_set(corpus_fields(), corpus, name, value);
    if (ok) return;
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  const auto dot = key.find('.');
  std::string out;
  if (dot != std::string::npos) {
    const std::string section = key.substr(0, dot), name = key.substr(dot + 1);
    bool ok = false;
    if (section == "dsp") ok = try_get(dsp_fields(), dsp, name, &out);
    else if (section == "arch") ok = try_get(arch_fields(), arch, name, &out);
    else if (section == "train") ok = try_get(train_fields(), train, name, &out);
    else if (section == "probe") ok = try_get(probe_fields(), probe, name, &out);
    else if (section == "corpus") ok = try_get(corpus_fields(), corpus, name, &out);
    if (ok) return out;
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> k;
  for (const auto& f : dsp_fields()) k.push_back("dsp." + f.key);
  for (const auto& f : arch_fields()) k.push_back("arch." + f.key);
  for (const auto& f : train_fields()) k.push_back("train." + f.key);
  for (const auto& f : probe_fields()) k.push_back("probe." + f.key);
  for (const auto& f : corpus_fields()) k.push_back("corpus." + f.key);
  return k;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  for (const auto& [k, v] : parse_key_values(ss.str(), path.string())) set(k, v);
}

std::string RunConfig::env_name(const std::string& key) {
  std::string n = "OVC_";
  for (char c : key) n += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return n;
}

void RunConfig::apply_env() {
  for (const auto& k : keys())
    if (const char* v = std::getenv(env_name(k).c_str())) set(k, v);
}

std::string RunConfig::to_text() const {
  return fields_to_text(dsp_fields(), dsp, "dsp.") + fields_to_text(arch_fields(), arch, "arch.") +
         fields_to_text(train_fields(), train, "train.") +
         fields_to_text(probe_fields(), probe, "probe.") +
         fields_to_text(corpus_fields(), corpus, "corpus.");
}

void RunConfig::validate() const {
  dsp.validate();
  arch.validate();
  train.validate(arch);
  probe.validate();
  if (arch.n_mels != dsp.n_mels)
    throw ConfigError("config: arch.n_mels (" + std::to_string(arch.n_mels) +
                      ") must equal dsp.n_mels (" + std::to_string(dsp.n_mels) + ")");
  if (corpus.min_frames < train.segment_len)
    throw ConfigError("config: corpus.min_frames must be >= train.segment_len");
}

}  // namespace ovc
