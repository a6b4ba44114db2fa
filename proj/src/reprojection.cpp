#include "erpdepth/reprojection.hpp"

#include <algorithm>
#include <cmath>

#include "erpdepth/errors.hpp"
#include "erpdepth/parallel.hpp"

namespace erpdepth {
namespace {

// Relative size below which P_hat is treated as the source camera center.
constexpr double kDegenerateRange = 1e-12;

}  // namespace

std::pair<SphericalPoint, double> reproject_point(const SphericalPoint& p, double d,
                                                  const Pose& pose) {
  const CartesianPoint point = angles_to_vector(p, d);
  if (pose.rotation == Eigen::Matrix3d::Identity() && pose.translation.isZero(0.0)) {
    const double phi = p.phi >= -kPi && p.phi < kPi ? p.phi : wrap_longitude(p.phi);
    return {{p.theta, phi}, d};
  }
  const CartesianPoint transformed = pose.apply(point);
  const double range = transformed.norm();
  if (!(range > kDegenerateRange * (d + pose.translation.norm()))) {
    throw DegeneratePointError("reprojected point coincides with the source camera center");
  }
  return vector_to_angles(transformed);
}

ReprojectionField reproject_grid(const DepthMap& depth, const Pose& pose) {
  depth.validate();
  const ErpGrid grid = depth.grid;
  ReprojectionField field{grid,
                          ScalarMap(grid.height, grid.width),
                          ScalarMap(grid.height, grid.width),
                          ScalarMap(grid.height, grid.width),
                          Mask(grid.height, grid.width, 0)};
  for_each_row(grid.height, [&](int v) {
    for (int u = 0; u < grid.width; ++u) {
      if (!depth.valid(v, u)) continue;
      const SphericalPoint p = pixel_to_angles(u, v, grid);
      try {
        const auto [p_hat, r_hat] = reproject_point(p, depth.values(v, u), pose);
        const PixelCoord uv = angles_to_pixel(p_hat, grid);
        field.source_u(v, u) = uv.u;
        field.source_v(v, u) = uv.v;
        field.source_range(v, u) = r_hat;
        field.valid(v, u) = uv.v >= -0.5 && uv.v <= grid.height - 0.5 && r_hat > 0.0;
      } catch (const DegeneratePointError&) {
        field.valid(v, u) = 0;
      }
    }
  });
  return field;
}

bool sample_bilinear_into(const ErpImage& image, double u, double v, double* out,
                          double* du, double* dv) {
  const int height = image.height();
  const int width = image.width();
  const int channels = image.channels();
  const bool in_bounds = v >= -0.5 && v <= height - 0.5;

  const bool clamped = v < 0.0 || v > height - 1;
  const double vc = std::clamp(v, 0.0, static_cast<double>(height - 1));
  int v0 = static_cast<int>(std::floor(vc));
  if (v0 > height - 1) v0 = height - 1;
  const int v1 = std::min(v0 + 1, height - 1);
  const double fy = vc - v0;

  double uw = u - width * std::floor(u / width);
  int u0 = static_cast<int>(std::floor(uw));
  if (u0 >= width) {
    u0 -= width;
    uw -= width;
  }
  const int u1 = u0 + 1 == width ? 0 : u0 + 1;
  const double fx = uw - u0;

  const double* p00 = image.pixel(v0, u0);
  const double* p01 = image.pixel(v0, u1);
  const double* p10 = image.pixel(v1, u0);
  const double* p11 = image.pixel(v1, u1);
  for (int c = 0; c < channels; ++c) {
    const double top = p00[c] + fx * (p01[c] - p00[c]);
    const double bottom = p10[c] + fx * (p11[c] - p10[c]);
    out[c] = top + fy * (bottom - top);
    if (du != nullptr) {
      du[c] = (1.0 - fy) * (p01[c] - p00[c]) + fy * (p11[c] - p10[c]);
    }
    if (dv != nullptr) dv[c] = clamped ? 0.0 : bottom - top;
  }
  return in_bounds;
}

BilinearSample sample_bilinear(const ErpImage& image, double u, double v) {
  BilinearSample sample;
  sample.values.resize(static_cast<std::size_t>(image.channels()));
  sample.in_bounds = sample_bilinear_into(image, u, v, sample.values.data());
  return sample;
}

WarpResult warp_image(const ErpImage& source, const DepthMap& target_depth,
                      const Pose& pose) {
  if (!(source.grid() == target_depth.grid)) {
    throw ConfigError("source image and target depth grids differ");
  }
  ReprojectionField field = reproject_grid(target_depth, pose);
  const ErpGrid grid = field.grid;
  ErpImage image(grid, source.channels(), 0.0);
  for_each_row(grid.height, [&](int v) {
    for (int u = 0; u < grid.width; ++u) {
      if (!field.valid(v, u)) continue;
      sample_bilinear_into(source, field.source_u(v, u), field.source_v(v, u),
                           image.pixel(v, u));
    }
  });
  return WarpResult{std::move(image), std::move(field.source_u), std::move(field.source_v),
                    std::move(field.valid), std::move(field.source_range)};
}

Eigen::Matrix<double, 2, 3> source_pixel_jacobian(const Eigen::Vector3d& transformed,
                                                  const ErpGrid& grid) {
  const double x = transformed.x();
  const double y = transformed.y();
  const double z = transformed.z();
  const double rho2 = x * x + z * z;
  const double rho = std::sqrt(rho2);
  const double r2 = rho2 + y * y;
  // phi = atan2(x, z), theta = atan2(y, rho).
  const Eigen::RowVector3d dphi(z / rho2, 0.0, -x / rho2);
  const Eigen::RowVector3d dtheta(-y * x / (rho * r2), rho / r2, -y * z / (rho * r2));
  Eigen::Matrix<double, 2, 3> jac;
  jac.row(0) = dphi * (grid.width / kTwoPi);
  jac.row(1) = dtheta * (-grid.height / kPi);
  return jac;
}

}  // namespace erpdepth
