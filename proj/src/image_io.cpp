#include "erpdepth/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "erpdepth/errors.hpp"

namespace erpdepth {
namespace {

cv::Mat read_unchanged(const std::string& path) {
  cv::Mat mat;
  try {
    mat = cv::imread(path, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception& e) {
    throw InputError("cannot decode '" + path + "': " + e.what());
  }
  if (mat.empty()) throw InputError("cannot read image '" + path + "'");
  if (mat.depth() != CV_8U && mat.depth() != CV_16U) {
    throw InputError("'" + path + "' is neither 8- nor 16-bit");
  }
  return mat;
}

void write_mat(const std::string& path, const cv::Mat& mat) {
  bool ok = false;
  try {
    ok = cv::imwrite(path, mat);
  } catch (const cv::Exception& e) {
    throw InputError("cannot write '" + path + "': " + e.what());
  }
  if (!ok) throw InputError("cannot write '" + path + "'");
}

double channel_value(const cv::Mat& mat, int row, int col, int c) {
  const int channels = mat.channels();
  if (mat.depth() == CV_8U) return mat.ptr<std::uint8_t>(row)[col * channels + c] / 255.0;
  return mat.ptr<std::uint16_t>(row)[col * channels + c] / 65535.0;
}

static_assert(std::endian::native == std::endian::little,
              "PFM output assumes a little-endian host");

}  // namespace

GrayImage read_png_gray(const std::string& path) {
  const cv::Mat mat = read_unchanged(path);
  GrayImage out{mat.rows, mat.cols, {}};
  out.values.resize(static_cast<std::size_t>(mat.rows) * static_cast<std::size_t>(mat.cols));
  const int channels = mat.channels();
  for (int r = 0; r < mat.rows; ++r) {
    for (int c = 0; c < mat.cols; ++c) {
      std::uint16_t best = 0;
      for (int k = 0; k < channels; ++k) {
        const std::uint16_t v = mat.depth() == CV_8U
                                    ? mat.ptr<std::uint8_t>(r)[c * channels + k]
                                    : mat.ptr<std::uint16_t>(r)[c * channels + k];
        best = std::max(best, v);
      }
      out.values[static_cast<std::size_t>(r) * static_cast<std::size_t>(mat.cols) +
                 static_cast<std::size_t>(c)] = best;
    }
  }
  return out;
}

RasterImage read_png_raster(const std::string& path) {
  const cv::Mat mat = read_unchanged(path);
  // Alpha is dropped; BGR becomes RGB.
  const int channels = mat.channels() >= 3 ? 3 : 1;
  RasterImage image{mat.rows, mat.cols, channels, {}};
  image.values.resize(static_cast<std::size_t>(mat.rows) * static_cast<std::size_t>(mat.cols) *
                      static_cast<std::size_t>(channels));
  std::size_t i = 0;
  for (int v = 0; v < mat.rows; ++v) {
    for (int u = 0; u < mat.cols; ++u) {
      for (int c = 0; c < channels; ++c) {
        image.values[i++] = channel_value(mat, v, u, channels == 3 ? 2 - c : 0);
      }
    }
  }
  return image;
}

void write_png_raster(const std::string& path, const RasterImage& image, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ConfigError("PNG bit depth must be 8 or 16");
  const int channels = image.channels;
  if (channels != 1 && channels != 3) throw ConfigError("PNG output needs 1 or 3 channels");
  if (image.values.size() != static_cast<std::size_t>(image.height) *
                                 static_cast<std::size_t>(image.width) *
                                 static_cast<std::size_t>(channels)) {
    throw ConfigError("raster size does not match its dimensions");
  }
  const int type = (bit_depth == 8 ? CV_8UC(channels) : CV_16UC(channels));
  cv::Mat mat(image.height, image.width, type);
  const double peak = bit_depth == 8 ? 255.0 : 65535.0;
  std::size_t i = 0;
  for (int v = 0; v < image.height; ++v) {
    for (int u = 0; u < image.width; ++u, i += static_cast<std::size_t>(channels)) {
      for (int c = 0; c < channels; ++c) {
        const int src = channels == 3 ? 2 - c : c;
        const double code =
            std::round(std::clamp(image.values[i + static_cast<std::size_t>(src)], 0.0, 1.0) * peak);
        if (bit_depth == 8) {
          mat.ptr<std::uint8_t>(v)[u * channels + c] = static_cast<std::uint8_t>(code);
        } else {
          mat.ptr<std::uint16_t>(v)[u * channels + c] = static_cast<std::uint16_t>(code);
        }
      }
    }
  }
  write_mat(path, mat);
}

ErpImage read_png_image(const std::string& path) {
  RasterImage raster = read_png_raster(path);
  const ErpGrid grid{raster.height, raster.width};
  try {
    grid.validate();
  } catch (const ConfigError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
  ErpImage image(grid, raster.channels);
  std::copy(raster.values.begin(), raster.values.end(), image.values().begin());
  return image;
}

void write_png_image(const std::string& path, const ErpImage& image, int bit_depth) {
  RasterImage raster{image.height(), image.width(), image.channels(),
                     std::vector<double>(image.values().begin(), image.values().end())};
  write_png_raster(path, raster, bit_depth);
}

void write_png_gray16(const std::string& path, const ScalarMap& values) {
  cv::Mat mat(values.height(), values.width(), CV_16UC1);
  for (int v = 0; v < values.height(); ++v) {
    for (int u = 0; u < values.width(); ++u) {
      mat.ptr<std::uint16_t>(v)[u] =
          static_cast<std::uint16_t>(std::round(std::clamp(values(v, u), 0.0, 1.0) * 65535.0));
    }
  }
  write_mat(path, mat);
}

void write_png_mask(const std::string& path, const Mask& mask) {
  cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) mat.ptr<std::uint8_t>(v)[u] = mask(v, u) ? 255 : 0;
  }
  write_mat(path, mat);
}

void write_pfm(const std::string& path, const ScalarMap& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << "Pf\n" << values.width() << " " << values.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(values.width()));
  for (int v = values.height() - 1; v >= 0; --v) {
    for (int u = 0; u < values.width(); ++u) {
      row[static_cast<std::size_t>(u)] = static_cast<float>(values(v, u));
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw InputError("failed writing '" + path + "'");
}

void write_pfm(const std::string& path, const DepthMap& depth) {
  ScalarMap values(depth.grid.height, depth.grid.width);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = depth.valid[i] ? depth.values[i] : 0.0;
  }
  write_pfm(path, values);
}

ScalarMap read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || magic != "Pf" || width <= 0 || height <= 0 || scale == 0.0) {
    throw InputError("'" + path + "' is not a single-channel PFM file");
  }
  in.get();  // single whitespace byte before the raster
  const bool swap = scale > 0.0;  // positive scale means big-endian data
  ScalarMap values(height, width);
  std::vector<float> row(static_cast<std::size_t>(width));
  for (int v = height - 1; v >= 0; --v) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw InputError("'" + path + "' is truncated");
    for (int u = 0; u < width; ++u) {
      float f = row[static_cast<std::size_t>(u)];
      if (swap) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, sizeof(bits));
        bits = __builtin_bswap32(bits);
        std::memcpy(&f, &bits, sizeof(bits));
      }
      values(v, u) = f;
    }
  }
  return values;
}

DepthMap read_pfm_depth(const std::string& path) {
  ScalarMap values = read_pfm(path);
  const ErpGrid grid{values.height(), values.width()};
  try {
    grid.validate();
  } catch (const ConfigError& e) {
    throw InputError("'" + path + "': " + e.what());
  }
  DepthMap depth(grid, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    depth.values[i] = values[i];
    depth.valid[i] = std::isfinite(values[i]) && values[i] > 0.0 ? 1 : 0;
  }
  return depth;
}

nlohmann::json pose_to_json(const Pose& pose) {
  nlohmann::json j;
  j["rotation"] = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    j["rotation"].push_back({pose.rotation(r, 0), pose.rotation(r, 1), pose.rotation(r, 2)});
  }
  j["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  return j;
}

Pose pose_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw InputError("pose must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key != "rotation" && key != "axis_angle" && key != "translation" &&
          key != "schema_version") {
        throw InputError("unknown pose field '" + key + "'");
      }
    }
    if (j.contains("rotation") == j.contains("axis_angle")) {
      throw InputError("pose needs exactly one of 'rotation' or 'axis_angle'");
    }
    const auto t = j.at("translation").get<std::vector<double>>();
    if (t.size() != 3) throw InputError("pose translation must have 3 entries");
    Pose pose;
    pose.translation = Eigen::Vector3d(t[0], t[1], t[2]);
    if (j.contains("axis_angle")) {
      const auto w = j.at("axis_angle").get<std::vector<double>>();
      if (w.size() != 3) throw InputError("axis_angle must have 3 entries");
      pose.rotation = rotation_from_axis_angle(Eigen::Vector3d(w[0], w[1], w[2]));
    } else {
      const auto rows = j.at("rotation").get<std::vector<std::vector<double>>>();
      if (rows.size() != 3) throw InputError("rotation must be 3x3");
      for (int r = 0; r < 3; ++r) {
        if (rows[static_cast<std::size_t>(r)].size() != 3) throw InputError("rotation must be 3x3");
        for (int c = 0; c < 3; ++c) {
          pose.rotation(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
      }
    }
    try {
      pose.validate();
    } catch (const ConfigError& e) {
      throw InputError(e.what());
    }
    return pose;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed pose: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "': " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InputError("failed writing '" + path + "'");
}

void write_pose_json(const std::string& path, const Pose& pose) {
  write_text_file(path, pose_to_json(pose).dump(2) + "\n");
}

Pose read_pose_json(const std::string& path) { return pose_from_json(read_json_file(path)); }

}  // namespace erpdepth
