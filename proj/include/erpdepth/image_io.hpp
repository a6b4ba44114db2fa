#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "erpdepth/pose.hpp"
#include "erpdepth/raster.hpp"

namespace erpdepth {

struct GrayImage {
  int height = 0;
  int width = 0;
  std::vector<std::uint16_t> values;  // max over channels for color files
};

// All readers throw InputError for missing or undecodable files.
GrayImage read_png_gray(const std::string& path);

// Interleaved intensities in [0, 1] of any size (cube faces, masks).
struct RasterImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> values;
};

// 8- or 16-bit PNG scaled to [0, 1]; color files come back as RGB.
RasterImage read_png_raster(const std::string& path);
void write_png_raster(const std::string& path, const RasterImage& image, int bit_depth = 8);
// As read_png_raster, additionally requiring width = 2 * height.
ErpImage read_png_image(const std::string& path);
// Values are rounded to the nearest code after clamping to [0, 1].
void write_png_image(const std::string& path, const ErpImage& image, int bit_depth = 8);
// Single-channel 16-bit PNG of values in [0, 1].
void write_png_gray16(const std::string& path, const ScalarMap& values);
void write_png_mask(const std::string& path, const Mask& mask);

// Portable float map, single channel, little-endian (scale -1.0), rows
// stored bottom to top as the format requires. Invalid depth is written
// as 0 and read back as invalid (valid = finite and > 0).
void write_pfm(const std::string& path, const DepthMap& depth);
void write_pfm(const std::string& path, const ScalarMap& values);
DepthMap read_pfm_depth(const std::string& path);
ScalarMap read_pfm(const std::string& path);

// {"rotation": [[r00, r01, r02], ...], "translation": [tx, ty, tz]}; on
// input "axis_angle": [wx, wy, wz] may replace "rotation". Unknown keys
// other than "schema_version" are rejected.
nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);
void write_pose_json(const std::string& path, const Pose& pose);
Pose read_pose_json(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace erpdepth
