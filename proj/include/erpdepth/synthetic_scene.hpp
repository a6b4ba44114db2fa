#pragma once

#include <array>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "erpdepth/pose.hpp"
#include "erpdepth/raster.hpp"

namespace erpdepth {

enum class TextureKind { kFlat, kChecker, kPlaid };

// Procedural wall pattern evaluated at wall coordinates (s, t) in meters.
//   flat:    color_a
//   checker: color_a / color_b squares of 1/frequency meters
//   plaid:   color_a + (color_b - color_a) *
//            (0.5 + 0.25 sin(2 pi f_s s + phase_s) + 0.25 sin(2 pi f_t t + phase_t))
struct WallTexture {
  TextureKind kind = TextureKind::kPlaid;
  double frequency_s = 1.0;  // cycles (or squares) per meter
  double frequency_t = 1.0;
  double phase_s = 0.0;
  double phase_t = 0.0;
  Eigen::Vector3d color_a = Eigen::Vector3d::Zero();
  Eigen::Vector3d color_b = Eigen::Vector3d::Ones();

  Eigen::Vector3d evaluate(double s, double t) const;
};

// Wall order: +x, -x, +y (ceiling), -y (floor), +z, -z. Wall coordinates
// are the two remaining world axes in (x, y, z) order.
enum class Wall { kPosX = 0, kNegX = 1, kPosY = 2, kNegY = 3, kPosZ = 4, kNegZ = 5 };

// Axis-aligned room centered at the world origin.
struct BoxScene {
  Eigen::Vector3d half_extents = Eigen::Vector3d::Ones();
  std::array<WallTexture, 6> walls{};

  // Plaid walls with distinct colors, frequencies and phases.
  static BoxScene textured_room(const Eigen::Vector3d& half_extents);
  // As textured_room but the ceiling is a single flat color.
  static BoxScene textureless_ceiling(const Eigen::Vector3d& half_extents);

  void validate() const;
  bool contains_strictly(const Eigen::Vector3d& point) const;
};

struct RenderedView {
  ErpImage image;
  DepthMap depth;  // exact radial distances, all valid
  Pose pose;       // world -> camera
};

// Camera center of a world->camera pose.
Eigen::Vector3d camera_center(const Pose& world_to_camera);

// Casts the ray of every pixel center against the box walls. Throws
// ConfigError when the camera is not strictly inside the box.
RenderedView render_erp(const BoxScene& scene, const Pose& camera_pose, const ErpGrid& grid);

// Target view at target_pose and source view at relative_pose * target_pose,
// so relative_pose maps target-frame points into the source frame.
std::pair<RenderedView, RenderedView> render_pair(const BoxScene& scene, const Pose& target_pose,
                                                  const Pose& relative_pose,
                                                  const ErpGrid& grid);

}  // namespace erpdepth
