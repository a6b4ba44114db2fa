#pragma once

#include <cstddef>
#include <numbers>
#include <utility>

#include <Eigen/Core>

namespace erpdepth {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Equirectangular pixel grid covering 360 x 180 degrees. Width is always
// twice the height.
struct ErpGrid {
  int height = 0;
  int width = 0;

  static ErpGrid from_height(int height) { return ErpGrid{height, 2 * height}; }

  // Throws ConfigError unless height >= 1 and width == 2 * height.
  void validate() const;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }

  bool operator==(const ErpGrid&) const = default;
};

// Latitude theta in [-pi/2, pi/2] (up is positive, row 0 is the north pole)
// and longitude phi in [-pi, pi) (zero at the image center column,
// increasing to the right).
struct SphericalPoint {
  double theta = 0.0;
  double phi = 0.0;
};

using CartesianPoint = Eigen::Vector3d;

struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Wraps an angle into [-pi, pi).
double wrap_longitude(double phi);

// Pixel (u, v) samples the direction at its center, hence the half-pixel
// offsets. u may be any real number (longitude wraps).
SphericalPoint pixel_to_angles(double u, double v, const ErpGrid& grid);

PixelCoord angles_to_pixel(const SphericalPoint& p, const ErpGrid& grid);

// Unit-sphere direction scaled by radial depth d:
//   (x, y, z) = d * (cos(theta) sin(phi), sin(theta), cos(theta) cos(phi)).
// Throws DomainError for d <= 0.
CartesianPoint angles_to_vector(const SphericalPoint& p, double d);

// Direction only; never throws.
CartesianPoint angles_to_unit_vector(const SphericalPoint& p);

// Inverse of angles_to_vector. Longitude is taken with the two-argument
// arctangent of (x, z); at the poles (x = z = 0) phi is 0. Throws
// DomainError for the zero vector.
std::pair<SphericalPoint, double> vector_to_angles(const CartesianPoint& point);

}  // namespace erpdepth
