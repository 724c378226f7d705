#pragma once

#include <filesystem>

#include "scd/geometry.hpp"

namespace scd {

// 16-bit single-channel PNG; stored value * scale = meters, 0 stays invalid.
DepthImage load_depth(const std::filesystem::path& path, double scale);
void save_depth(const std::filesystem::path& path, const DepthImage& depth, double scale);

// 16-bit single-channel PNG holding mask ids verbatim.
LabelImage load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const LabelImage& labels);

// 8-bit RGB PNG.
ColorImage load_color(const std::filesystem::path& path);
void save_color(const std::filesystem::path& path, const ColorImage& color);

}  // namespace scd
