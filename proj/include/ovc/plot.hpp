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

#pragma once

#include "ovc/common.hpp"
#include "ovc/eval.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ovc {

/// Frames run left to right, bin 0 at the bottom; each cell is
/// scale x scale pixels, so the image is (frames * scale) x (bins * scale).
void write_heatmap_png(const std::filesystem::path& path, const Mat& frames_by_bins, int scale = 1);

struct Curve {
  std::string label;
  Vec values;
};

void write_curves_svg(const std::filesystem::path& path, const std::string& title,
                      const std::vector<Curve>& curves);

/// Marker shape by gender when known (circle F, square M, diamond unknown),
/// colour by speaker.
void write_scatter_svg(const std::filesystem::path& path, const std::vector<ProjectionPoint>& pts,
                       const std::map<std::string, std::string>& gender);

struct ConversionArtifacts {
  std::string name;
  std::optional<MelSpectrogram> source_mel;
  std::optional<MelSpectrogram> converted_mel;
  std::optional<Vec> target_gv;
  std::optional<Vec> converted_gv;
  std::optional<Vec> source_gv;
};

struct PlotArtifacts {
  std::vector<ConversionArtifacts> conversions;
  std::optional<std::vector<ProjectionPoint>> projection;
  std::map<std::string, std::string> gender;
};

struct PlotReport {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Missing pieces skip the affected plot with a warning instead of failing.
PlotReport export_plots(const PlotArtifacts& artifacts, const std::filesystem::path& out_dir);

/// Reads a conversion dump directory (source/target/converted mel matrices).
ConversionArtifacts load_conversion_dump(const std::filesystem::path& dir);

/// Reads a bin/target/converted/source GV profile table.
ConversionArtifacts load_gv_profile(const std::filesystem::path& path);

}  // namespace ovc
