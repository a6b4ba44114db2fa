#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "erpdepth/pose.hpp"
#include "erpdepth/raster.hpp"
#include "erpdepth/sphere_geometry.hpp"

namespace erpdepth {

// Maps a target pixel direction p seen at radial depth d into the source
// view: P = d * unit(p), P_hat = R P + t, returns (direction of P_hat,
// |P_hat|). Throws DomainError for d <= 0 and DegeneratePointError when
// P_hat is (numerically) the source camera center.
std::pair<SphericalPoint, double> reproject_point(const SphericalPoint& p, double d,
                                                  const Pose& pose);

// Source-image sampling coordinates for every target pixel.
struct ReprojectionField {
  ErpGrid grid{};
  ScalarMap source_u;
  ScalarMap source_v;
  ScalarMap source_range;
  Mask valid;
};

ReprojectionField reproject_grid(const DepthMap& depth, const Pose& pose);

struct BilinearSample {
  std::vector<double> values;
  bool in_bounds = false;
};

// Bilinear lookup with horizontal wrap (the ERP seam is continuous) and
// vertical clamp to [0, H-1]. in_bounds is false iff v is outside
// [-0.5, H-0.5].
BilinearSample sample_bilinear(const ErpImage& image, double u, double v);

// Allocation-free variant used by the inner loops. Writes C values to out;
// when du/dv are non-null also writes the partial derivatives of each
// channel with respect to u and v (zero in v where the clamp is active).
bool sample_bilinear_into(const ErpImage& image, double u, double v, double* out,
                          double* du = nullptr, double* dv = nullptr);

struct WarpResult {
  ErpImage image;
  ScalarMap source_u;
  ScalarMap source_v;
  Mask valid_mask;
  ScalarMap source_range;
};

// Reconstructs the target view by inverse-warping the source image through
// the target depth and the target-to-source pose. Throws ConfigError when
// the grids differ.
WarpResult warp_image(const ErpImage& source, const DepthMap& target_depth,
                      const Pose& pose);

// d(u, v) / d(P_hat) for the source pixel of a transformed point. Rows are
// (u, v). Undefined on the polar axis (x = z = 0).
Eigen::Matrix<double, 2, 3> source_pixel_jacobian(const Eigen::Vector3d& transformed,
                                                  const ErpGrid& grid);

}  // namespace erpdepth
