#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include "erpdepth/raster.hpp"
#include "erpdepth/sphere_geometry.hpp"

namespace erpdepth::testing {

inline ErpImage random_image(const ErpGrid& grid, int channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ErpImage image(grid, channels);
  for (double& x : image.values()) x = unit(rng);
  return image;
}

// Smooth ERP test pattern, periodic in longitude.
inline ErpImage smooth_image(const ErpGrid& grid) {
  ErpImage image(grid, 3);
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const SphericalPoint p = pixel_to_angles(u, v, grid);
      image(v, u, 0) = 0.5 + 0.4 * std::sin(p.theta);
      image(v, u, 1) = 0.5 + 0.3 * std::cos(p.phi) * std::cos(p.theta);
      image(v, u, 2) = 0.5 + 0.3 * std::sin(p.phi) * std::cos(p.theta);
    }
  }
  return image;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative error with an absolute floor so that near-zero entries compare sensibly.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace erpdepth::testing
