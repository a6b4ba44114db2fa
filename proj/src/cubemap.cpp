#include "erpdepth/cubemap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "erpdepth/errors.hpp"
#include "erpdepth/parallel.hpp"
#include "erpdepth/reprojection.hpp"

namespace erpdepth {
namespace {

std::size_t face_index(const CubeMap& cube, int row, int col, int c) {
  return (static_cast<std::size_t>(row) * static_cast<std::size_t>(cube.face_size) +
          static_cast<std::size_t>(col)) *
             static_cast<std::size_t>(cube.channels) +
         static_cast<std::size_t>(c);
}

// Bilinear lookup inside one face, clamped at the face border.
void sample_face(const CubeMap& cube, CubeFace face, double col, double row, double* out) {
  const int n = cube.face_size;
  const double x = std::clamp(col, 0.0, static_cast<double>(n - 1));
  const double y = std::clamp(row, 0.0, static_cast<double>(n - 1));
  const int x0 = std::min(static_cast<int>(std::floor(x)), n - 1);
  const int y0 = std::min(static_cast<int>(std::floor(y)), n - 1);
  const int x1 = std::min(x0 + 1, n - 1);
  const int y1 = std::min(y0 + 1, n - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  for (int c = 0; c < cube.channels; ++c) {
    const double top = cube.at(face, y0, x0, c) + fx * (cube.at(face, y0, x1, c) -
                                                        cube.at(face, y0, x0, c));
    const double bottom = cube.at(face, y1, x0, c) + fx * (cube.at(face, y1, x1, c) -
                                                           cube.at(face, y1, x0, c));
    out[c] = top + fy * (bottom - top);
  }
}

}  // namespace

double& CubeMap::at(CubeFace face, int row, int col, int c) {
  return faces[static_cast<std::size_t>(face)][face_index(*this, row, col, c)];
}

double CubeMap::at(CubeFace face, int row, int col, int c) const {
  return faces[static_cast<std::size_t>(face)][face_index(*this, row, col, c)];
}

void CubeMap::validate() const {
  if (face_size < 2 || channels < 1) throw ConfigError("cube map needs face_size >= 2");
  const std::size_t expected = static_cast<std::size_t>(face_size) *
                               static_cast<std::size_t>(face_size) *
                               static_cast<std::size_t>(channels);
  for (const auto& face : faces) {
    if (face.size() != expected) throw ConfigError("cube faces must be equal-sized squares");
  }
}

Eigen::Vector3d cube_face_direction(CubeFace face, double a, double b) {
  switch (face) {
    case CubeFace::kFront: return {a, -b, 1.0};
    case CubeFace::kBack: return {-a, -b, -1.0};
    case CubeFace::kLeft: return {-1.0, -b, a};
    case CubeFace::kRight: return {1.0, -b, -a};
    case CubeFace::kUp: return {a, 1.0, b};
    case CubeFace::kDown: return {a, -1.0, -b};
  }
  return {0.0, 0.0, 1.0};
}

FaceCoord direction_to_face(const Eigen::Vector3d& d) {
  const double ax = std::abs(d.x());
  const double ay = std::abs(d.y());
  const double az = std::abs(d.z());
  if (ax >= ay && ax >= az) {
    if (d.x() >= 0.0) return {CubeFace::kRight, -d.z() / ax, -d.y() / ax};
    return {CubeFace::kLeft, d.z() / ax, -d.y() / ax};
  }
  if (ay >= az) {
    if (d.y() >= 0.0) return {CubeFace::kUp, d.x() / ay, d.z() / ay};
    return {CubeFace::kDown, d.x() / ay, -d.z() / ay};
  }
  if (d.z() >= 0.0) return {CubeFace::kFront, d.x() / az, -d.y() / az};
  return {CubeFace::kBack, -d.x() / az, -d.y() / az};
}

CubeMap erp_to_cubemap(const ErpImage& image, int face_size) {
  if (face_size < 2) throw ConfigError("face_size must be at least 2");
  CubeMap cube;
  cube.face_size = face_size;
  cube.channels = image.channels();
  const ErpGrid grid = image.grid();
  for (int f = 0; f < 6; ++f) {
    const auto face = static_cast<CubeFace>(f);
    auto& data = cube.faces[static_cast<std::size_t>(f)];
    data.assign(static_cast<std::size_t>(face_size) * static_cast<std::size_t>(face_size) *
                    static_cast<std::size_t>(cube.channels),
                0.0);
    for_each_row(face_size, [&](int row) {
      const double b = 2.0 * (row + 0.5) / face_size - 1.0;
      for (int col = 0; col < face_size; ++col) {
        const double a = 2.0 * (col + 0.5) / face_size - 1.0;
        const auto [angles, range] = vector_to_angles(cube_face_direction(face, a, b));
        const PixelCoord uv = angles_to_pixel(angles, grid);
        sample_bilinear_into(image, uv.u, uv.v, &data[face_index(cube, row, col, 0)]);
      }
    });
  }
  return cube;
}

CubeMap constant_cubemap(int face_size, int channels, double value) {
  CubeMap cube;
  cube.face_size = face_size;
  cube.channels = channels;
  for (auto& face : cube.faces) {
    face.assign(static_cast<std::size_t>(face_size) * static_cast<std::size_t>(face_size) *
                    static_cast<std::size_t>(channels),
                value);
  }
  cube.validate();
  return cube;
}

ErpImage cubemap_to_erp(const CubeMap& cube, const ErpGrid& grid) {
  cube.validate();
  ErpImage image(grid, cube.channels);
  const double half = cube.face_size / 2.0;
  for_each_row(grid.height, [&](int v) {
    for (int u = 0; u < grid.width; ++u) {
      const FaceCoord fc = direction_to_face(angles_to_unit_vector(pixel_to_angles(u, v, grid)));
      sample_face(cube, fc.face, (fc.a + 1.0) * half - 0.5, (fc.b + 1.0) * half - 0.5,
                  image.pixel(v, u));
    }
  });
  return image;
}

double psnr(const ErpImage& a, const ErpImage& b) {
  if (!a.same_shape(b)) throw ConfigError("PSNR inputs differ in shape");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    const double d = a.values()[i] - b.values()[i];
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.values().size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

}  // namespace erpdepth
