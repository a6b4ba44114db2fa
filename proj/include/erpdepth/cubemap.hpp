#pragma once

#include <array>
#include <string_view>

#include <Eigen/Core>

#include "erpdepth/raster.hpp"

namespace erpdepth {

// Faces in storage order. Each face is a 90 degree perspective view with
// focal length face_size / 2. With face coordinates a (column, rightward)
// and b (row, downward) in [-1, 1], the ray directions are
//
//             +------+
//             |  U   |   U: ( a,  1,  b)
//      +------+------+------+------+
//      |  L   |  F   |  R   |  B   |   F: ( a, -b,  1)   R: ( 1, -b, -a)
//      +------+------+------+------+   B: (-a, -b, -1)   L: (-1, -b,  a)
//             |  D   |   D: ( a, -1, -b)
//             +------+
//
// so adjacent faces in the cross share their edges.
enum class CubeFace { kFront = 0, kBack = 1, kLeft = 2, kRight = 3, kUp = 4, kDown = 5 };

inline constexpr std::array<std::string_view, 6> kCubeFaceSuffixes = {"_F", "_B", "_L",
                                                                      "_R", "_U", "_D"};

struct CubeMap {
  int face_size = 0;
  int channels = 0;
  // face_size x face_size x channels each, channel-interleaved.
  std::array<std::vector<double>, 6> faces;

  double& at(CubeFace face, int row, int col, int c);
  double at(CubeFace face, int row, int col, int c) const;

  // Throws ConfigError unless all six faces hold face_size^2 * channels values.
  void validate() const;
};

// Ray direction (not normalized) through face coordinates (a, b).
Eigen::Vector3d cube_face_direction(CubeFace face, double a, double b);

struct FaceCoord {
  CubeFace face = CubeFace::kFront;
  double a = 0.0;
  double b = 0.0;
};

// Dominant-axis face of a direction. Ties go to x, then y, then z.
FaceCoord direction_to_face(const Eigen::Vector3d& direction);

// Throws ConfigError for face_size < 2.
CubeMap erp_to_cubemap(const ErpImage& image, int face_size);

CubeMap constant_cubemap(int face_size, int channels, double value);

ErpImage cubemap_to_erp(const CubeMap& cube, const ErpGrid& grid);

// Peak signal-to-noise ratio for peak 1.0; +inf for identical images.
double psnr(const ErpImage& a, const ErpImage& b);

}  // namespace erpdepth
