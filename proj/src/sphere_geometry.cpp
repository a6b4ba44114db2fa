#include "erpdepth/sphere_geometry.hpp"

#include <cmath>
#include <string>

#include "erpdepth/errors.hpp"

namespace erpdepth {

void ErpGrid::validate() const {
  if (height < 1 || width != 2 * height) {
    throw ConfigError("invalid ERP grid " + std::to_string(height) + "x" +
                      std::to_string(width) + ": width must be 2 * height");
  }
}

double wrap_longitude(double phi) {
  double wrapped = std::fmod(phi + kPi, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  wrapped -= kPi;
  // fmod can land exactly on +pi after the shift when phi + pi rounds to a
  // multiple of 2 pi from below.
  if (wrapped >= kPi) wrapped -= kTwoPi;
  return wrapped;
}

SphericalPoint pixel_to_angles(double u, double v, const ErpGrid& grid) {
  grid.validate();
  const double phi = ((u + 0.5) / grid.width - 0.5) * kTwoPi;
  const double theta = (0.5 - (v + 0.5) / grid.height) * kPi;
  return {theta, wrap_longitude(phi)};
}

PixelCoord angles_to_pixel(const SphericalPoint& p, const ErpGrid& grid) {
  const double u = (p.phi / kTwoPi + 0.5) * grid.width - 0.5;
  const double v = (0.5 - p.theta / kPi) * grid.height - 0.5;
  return {u, v};
}

CartesianPoint angles_to_unit_vector(const SphericalPoint& p) {
  const double ct = std::cos(p.theta);
  return {ct * std::sin(p.phi), std::sin(p.theta), ct * std::cos(p.phi)};
}

CartesianPoint angles_to_vector(const SphericalPoint& p, double d) {
  if (!(d > 0.0)) {
    throw DomainError("radial depth must be positive, got " + std::to_string(d));
  }
  return d * angles_to_unit_vector(p);
}

std::pair<SphericalPoint, double> vector_to_angles(const CartesianPoint& point) {
  const double r = point.norm();
  if (!(r > 0.0)) throw DomainError("cannot take the direction of a zero vector");
  const double rho = std::hypot(point.x(), point.z());
  SphericalPoint p;
  p.theta = std::atan2(point.y(), rho);
  p.phi = rho > 0.0 ? wrap_longitude(std::atan2(point.x(), point.z())) : 0.0;
  return {p, r};
}

}  // namespace erpdepth
