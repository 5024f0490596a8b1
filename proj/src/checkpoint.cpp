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

#include "ovc/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

#include "ovc/config.hpp"

namespace fs = std::filesystem;

namespace ovc {
namespace {

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f64(double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, 8);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<unsigned char>(u >> (8 * i)));
  }
  void tensor(const std::string& name, const Mat& m) {
    str(name);
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.data()[i]);
  }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& b, std::size_t end) : b_(b), end_(end) {}
  void need(std::size_t n) {
    if (pos_ + n > end_) throw LoadError("checkpoint: truncated at byte " + std::to_string(pos_));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  double f64() {
    need(8);
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b_[pos_ + i]) << (8 * i);
    pos_ += 8;
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
  return static_cast<std::uint32_t>(crc32(crc32(0L, Z_NULL, 0), p, static_cast<uInt>(n)));
}

}  // namespace

std::vector<unsigned char> serialize_checkpoint(const Checkpoint& c) {
  std::string meta = fields_to_text(arch_fields(), c.arch, "arch.") +
                     fields_to_text(dsp_fields(), c.dsp, "dsp.") +
                     "dsp.fingerprint=" + c.dsp.fingerprint() + "\n";
  if (c.training) {
    meta += "state.iteration=" + std::to_string(c.training->iteration) + "\n";
    meta += "state.adam_step=" + std::to_string(c.training->adam.step) + "\n";
    meta += "state.rng=" + c.training->rng_state + "\n";
  }

  std::vector<std::pair<std::string, const Mat*>> tensors;
  for (const auto& [name, m] : c.params.tensors) tensors.push_back({"param/" + name, &m});
  const Mat mean = c.norm.mean, std = c.norm.std;
  tensors.push_back({"norm/mean", &mean});
  tensors.push_back({"norm/std", &std});
  if (c.training) {
    for (const auto& [name, m] : c.training->adam.m) tensors.push_back({"adam_m/" + name, &m});
    for (const auto& [name, m] : c.training->adam.v) tensors.push_back({"adam_v/" + name, &m});
  }

  Writer w;
  w.bytes("OVCK", 4);
  w.u32(kCheckpointVersion);
  w.str(meta);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, m] : tensors) w.tensor(name, *m);
  auto& buf = w.buffer();
  w.u32(crc_of(buf.data(), buf.size()));
  return buf;
}

Checkpoint deserialize_checkpoint(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "OVCK", 4) != 0)
    throw LoadError("checkpoint: missing OVCK magic (not a checkpoint or truncated)");
  Reader r(bytes, bytes.size() - 4);
  r.need(4);
  r.u32();  // magic, already checked
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw LoadError("checkpoint: format version " + std::to_string(version) +
                    ", this build reads version " + std::to_string(kCheckpointVersion));
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
  if (stored != crc_of(bytes.data(), body))
    throw LoadError("checkpoint: checksum mismatch (file corrupted or truncated)");

  Checkpoint c;
  std::string fingerprint;
  std::optional<TrainingState> state;
  for (const auto& [k, v] : parse_key_values(r.str(), "checkpoint")) {
    if (k.rfind("arch.", 0) == 0) {
      bool ok = false;
      for (const auto& f : arch_fields())
        if (f.key == k.substr(5)) f.set(c.arch, v), ok = true;
      if (!ok) throw LoadError("checkpoint: unknown key " + k);
    } else if (k == "dsp.fingerprint") {
      fingerprint = v;
    } else if (k.rfind("dsp.", 0) == 0) {
      bool ok = false;
      for (const auto& f : dsp_fields())
        if (f.key == k.substr(4)) f.set(c.dsp, v), ok = true;
      if (!ok) throw LoadError("checkpoint: unknown key " + k);
    } else if (k.rfind("state.", 0) == 0) {
      if (!state) state.emplace();
      if (k == "state.iteration") state->iteration = std::stoll(v);
      else if (k == "state.adam_step") state->adam.step = std::stoll(v);
      else if (k == "state.rng") state->rng_state = v;
      else throw LoadError("checkpoint: unknown key " + k);
    } else {
      throw LoadError("checkpoint: unknown key " + k);
    }
  }
  if (fingerprint != c.dsp.fingerprint())
    throw LoadError("checkpoint: stored dsp fingerprint does not match its dsp settings");

  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.str();
    const std::uint32_t rows = r.u32(), cols = r.u32();
    r.need(static_cast<std::size_t>(rows) * cols * 8);
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = r.f64();
    if (name.rfind("param/", 0) == 0) {
      c.params.tensors[name.substr(6)] = std::move(m);
    } else if (name == "norm/mean") {
      c.norm.mean = m.col(0);
    } else if (name == "norm/std") {
      c.norm.std = m.col(0);
    } else if (name.rfind("adam_m/", 0) == 0 && state) {
      state->adam.m[name.substr(7)] = std::move(m);
    } else if (name.rfind("adam_v/", 0) == 0 && state) {
      state->adam.v[name.substr(7)] = std::move(m);
    } else {
      throw LoadError("checkpoint: unexpected tensor " + name);
    }
  }
  if (r.pos() != body) throw LoadError("checkpoint: trailing bytes before checksum");
  c.training = std::move(state);
  try {
    Model check(c.arch, c.params);
  } catch (const ConfigError& e) {
    throw LoadError(std::string("checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& c, const fs::path& path) {
  const auto bytes = serialize_checkpoint(c);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IngestionError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IngestionError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

std::string describe_checkpoint(const Checkpoint& c) {
  std::ostringstream os;
  os << "format_version=" << kCheckpointVersion << "\n";
  os << "parameters=" << c.params.count() << "\n";
  os << "tensors=" << c.params.tensors.size() << "\n";
  os << "dsp.fingerprint=" << c.dsp.fingerprint() << "\n";
  os << fields_to_text(arch_fields(), c.arch, "arch.");
  os << fields_to_text(dsp_fields(), c.dsp, "dsp.");
  if (c.training) {
    os << "state.iteration=" << c.training->iteration << "\n";
    os << "state.adam_step=" << c.training->adam.step << "\n";
  }
  return os.str();
}

}  // namespace ovc
