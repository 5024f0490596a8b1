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

#include "ovc/plot.hpp"

#include <png.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace ovc {
namespace {

// Dark blue -> teal -> yellow ramp.
std::array<unsigned char, 3> colormap(double v) {
  static const double stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  v = std::clamp(v, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(v));
  const double f = v - i;
  std::array<unsigned char, 3> c{};
  for (int k = 0; k < 3; ++k)
    c[k] = static_cast<unsigned char>(std::lround(stops[i][k] * (1 - f) + stops[i + 1][k] * f));
  return c;
}

std::string palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& s) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << s;
}

}  // namespace

void write_heatmap_png(const fs::path& path, const Mat& m, int scale) {
  if (m.rows() == 0 || m.cols() == 0) throw SizeError("heatmap: empty matrix");
  if (scale < 1) throw ConfigError("heatmap: scale must be >= 1");
  if (!m.allFinite()) throw NumericError("heatmap: non-finite values");
  const int width = static_cast<int>(m.rows()) * scale;
  const int height = static_cast<int>(m.cols()) * scale;
  const double lo = m.minCoeff(), hi = m.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IngestionError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IngestionError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 3);
  for (int y = 0; y < height; ++y) {
    const Eigen::Index bin = m.cols() - 1 - y / scale;
    for (int x = 0; x < width; ++x) {
      const auto c = colormap((m(x / scale, bin) - lo) / span);
      std::copy(c.begin(), c.end(), row.begin() + 3 * x);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

void write_curves_svg(const fs::path& path, const std::string& title, const std::vector<Curve>& curves) {
  if (curves.empty()) throw SizeError("curves plot: nothing to draw");
  const double W = 720, H = 420, L = 60, R = 20, T = 40, B = 50;
  double lo = INFINITY, hi = -INFINITY;
  Eigen::Index n = 0;
  for (const auto& c : curves) {
    if (c.values.size() == 0) throw SizeError("curves plot: empty curve " + c.label);
    lo = std::min(lo, c.values.minCoeff());
    hi = std::max(hi, c.values.maxCoeff());
    n = std::max(n, c.values.size());
  }
  if (hi <= lo) hi = lo + 1.0;
  auto px = [&](double i) { return L + (W - L - R) * i / std::max<double>(1.0, n - 1.0); };
  auto py = [&](double v) { return H - B - (H - T - B) * (v - lo) / (hi - lo); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" +
                  num(H) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + title + "</text>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(H - B) + "\" x2=\"" + num(W - R) + "\" y2=\"" +
       num(H - B) + "\" stroke=\"black\"/>\n";
  s += "<line x1=\"" + num(L) + "\" y1=\"" + num(T) + "\" x2=\"" + num(L) + "\" y2=\"" + num(H - B) +
       "\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(W / 2) + "\" y=\"" + num(H - 12) + "\" text-anchor=\"middle\" font-size=\"12\">mel bin</text>\n";
  s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(T) + "\" text-anchor=\"end\" font-size=\"10\">" + num(hi) + "</text>\n";
  s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(H - B) + "\" text-anchor=\"end\" font-size=\"10\">" + num(lo) + "</text>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    std::string pts;
    for (Eigen::Index i = 0; i < curves[k].values.size(); ++i)
      pts += num(px(static_cast<double>(i))) + "," + num(py(curves[k].values(i))) + " ";
    s += "<polyline fill=\"none\" stroke=\"" + palette(k) + "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
    s += "<text x=\"" + num(W - R - 150) + "\" y=\"" + num(T + 16 * (k + 1)) + "\" font-size=\"12\" fill=\"" +
         palette(k) + "\">" + curves[k].label + "</text>\n";
  }
  s += "</svg>\n";
  write_text(path, s);
}

void write_scatter_svg(const fs::path& path, const std::vector<ProjectionPoint>& pts,
                       const std::map<std::string, std::string>& gender) {
  if (pts.empty()) throw SizeError("scatter plot: no points");
  const double W = 640, H = 640, M = 40;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  std::map<std::string, std::size_t> speaker_index;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x), x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y), y1 = std::max(y1, p.y);
    speaker_index.emplace(p.speaker_id, speaker_index.size());
  }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  auto px = [&](double x) { return M + (W - 2 * M) * (x - x0) / (x1 - x0); };
  auto py = [&](double y) { return H - M - (H - 2 * M) * (y - y0) / (y1 - y0); };
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" +
                  num(H) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& p : pts) {
    const std::string color = palette(speaker_index[p.speaker_id]);
    const double x = px(p.x), y = py(p.y);
    auto g = gender.find(p.speaker_id);
    const std::string tag = g == gender.end() ? "" : g->second;
    if (tag == "F") {
      s += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"4\" fill=\"" + color + "\"/>\n";
    } else if (tag == "M") {
      s += "<rect x=\"" + num(x - 4) + "\" y=\"" + num(y - 4) + "\" width=\"8\" height=\"8\" fill=\"" + color + "\"/>\n";
    } else {
      s += "<polygon points=\"" + num(x) + "," + num(y - 5) + " " + num(x + 5) + "," + num(y) + " " +
           num(x) + "," + num(y + 5) + " " + num(x - 5) + "," + num(y) + "\" fill=\"" + color + "\"/>\n";
    }
  }
  s += "</svg>\n";
  write_text(path, s);
}

PlotReport export_plots(const PlotArtifacts& a, const fs::path& out_dir) {
  PlotReport rep;
  auto warn = [&](const std::string& w) {
    spdlog::warn("plot: {}", w);
    rep.warnings.push_back(w);
  };
  if (a.conversions.empty() && !a.projection) warn("no artifacts to plot");
  for (const auto& c : a.conversions) {
    if (c.source_mel && c.converted_mel) {
      const fs::path src = out_dir / (c.name + "_source.png");
      const fs::path cvt = out_dir / (c.name + "_converted.png");
      write_heatmap_png(src, *c.source_mel);
      write_heatmap_png(cvt, *c.converted_mel);
      rep.files.push_back(src);
      rep.files.push_back(cvt);
    } else {
      warn(c.name + ": source or converted mel missing, heatmaps skipped");
    }
    if (c.target_gv && c.converted_gv) {
      std::vector<Curve> curves{{"target", *c.target_gv}, {"converted", *c.converted_gv}};
      if (c.source_gv) curves.push_back({"source", *c.source_gv});
      const fs::path p = out_dir / (c.name + "_gv.svg");
      write_curves_svg(p, "global variance: " + c.name, curves);
      rep.files.push_back(p);
    } else {
      warn(c.name + ": target or converted GV missing, GV plot skipped");
    }
  }
  if (a.projection) {
    if (a.projection->empty()) {
      warn("projection has no points, scatter skipped");
    } else {
      const fs::path p = out_dir / "speaker_embedding.svg";
      write_scatter_svg(p, *a.projection, a.gender);
      rep.files.push_back(p);
    }
  }
  return rep;
}

ConversionArtifacts load_conversion_dump(const fs::path& dir) {
  ConversionArtifacts c;
  c.name = dir.filename().string();
  if (c.name.empty()) c.name = dir.parent_path().filename().string();
  auto load = [&](const char* file) -> std::optional<MelSpectrogram> {
    if (!fs::exists(dir / file)) return std::nullopt;
    return read_matrix(dir / file).cast<double>();
  };
  c.source_mel = load("source_mel.ovcm");
  c.converted_mel = load("converted_mel.ovcm");
  std::vector<MelSpectrogram> targets;
  for (int i = 0; fs::exists(dir / ("target_mel_" + std::to_string(i) + ".ovcm")); ++i)
    targets.push_back(read_matrix(dir / ("target_mel_" + std::to_string(i) + ".ovcm")).cast<double>());
  if (!targets.empty()) c.target_gv = global_variance(targets);
  if (c.converted_mel) c.converted_gv = global_variance({*c.converted_mel});
  if (c.source_mel) c.source_gv = global_variance({*c.source_mel});
  return c;
}

ConversionArtifacts load_gv_profile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read GV profile " + path.string());
  ConversionArtifacts c;
  c.name = path.stem().string();
  std::vector<double> cols[3];
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("bin", 0) == 0) continue;
    std::istringstream is(line);
    double bin, t, v, s;
    if (!(is >> bin >> t >> v >> s)) throw IngestionError("malformed GV line: " + line);
    cols[0].push_back(t);
    cols[1].push_back(v);
    cols[2].push_back(s);
  }
  auto vec = [](const std::vector<double>& v) { return Vec(Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()))); };
  if (!cols[0].empty()) {
    c.target_gv = vec(cols[0]);
    c.converted_gv = vec(cols[1]);
    c.source_gv = vec(cols[2]);
  }
  return c;
}

}  // namespace ovc
