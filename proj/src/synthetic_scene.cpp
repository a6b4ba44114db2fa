#include "erpdepth/synthetic_scene.hpp"

#include <cmath>
#include <limits>

#include "erpdepth/errors.hpp"
#include "erpdepth/parallel.hpp"
#include "erpdepth/sphere_geometry.hpp"

namespace erpdepth {
namespace {

WallTexture plaid(double fs, double ft, double ps, double pt, Eigen::Vector3d a,
                  Eigen::Vector3d b) {
  WallTexture w;
  w.kind = TextureKind::kPlaid;
  w.frequency_s = fs;
  w.frequency_t = ft;
  w.phase_s = ps;
  w.phase_t = pt;
  w.color_a = a;
  w.color_b = b;
  return w;
}

std::pair<double, double> wall_coordinates(int axis, const Eigen::Vector3d& p) {
  switch (axis) {
    case 0: return {p.y(), p.z()};
    case 1: return {p.x(), p.z()};
    default: return {p.x(), p.y()};
  }
}

}  // namespace

Eigen::Vector3d WallTexture::evaluate(double s, double t) const {
  switch (kind) {
    case TextureKind::kFlat:
      return color_a;
    case TextureKind::kChecker: {
      const auto cell = static_cast<long long>(std::floor(frequency_s * s)) +
                        static_cast<long long>(std::floor(frequency_t * t));
      return (cell & 1LL) == 0 ? color_a : color_b;
    }
    case TextureKind::kPlaid: {
      const double mix = 0.5 + 0.25 * std::sin(kTwoPi * frequency_s * s + phase_s) +
                         0.25 * std::sin(kTwoPi * frequency_t * t + phase_t);
      return color_a + mix * (color_b - color_a);
    }
  }
  return color_a;
}

BoxScene BoxScene::textured_room(const Eigen::Vector3d& half_extents) {
  BoxScene scene;
  scene.half_extents = half_extents;
  scene.walls = {
      plaid(3.9, 2.7, 0.2, 1.1, {0.10, 0.20, 0.60}, {0.90, 0.70, 0.30}),
      plaid(2.4, 4.2, 2.0, 0.4, {0.70, 0.10, 0.20}, {0.20, 0.90, 0.80}),
      plaid(3.3, 3.6, 0.7, 2.5, {0.30, 0.60, 0.10}, {0.80, 0.20, 0.90}),
      plaid(4.5, 2.1, 1.6, 0.3, {0.85, 0.80, 0.15}, {0.10, 0.25, 0.35}),
      plaid(2.7, 3.3, 2.8, 1.9, {0.15, 0.75, 0.55}, {0.95, 0.30, 0.10}),
      plaid(3.6, 4.8, 0.5, 1.3, {0.55, 0.25, 0.85}, {0.25, 0.95, 0.40}),
  };
  return scene;
}

BoxScene BoxScene::textureless_ceiling(const Eigen::Vector3d& half_extents) {
  BoxScene scene = textured_room(half_extents);
  WallTexture flat;
  flat.kind = TextureKind::kFlat;
  flat.color_a = {0.8, 0.85, 0.9};
  scene.walls[static_cast<std::size_t>(Wall::kPosY)] = flat;
  return scene;
}

void BoxScene::validate() const {
  if (!(half_extents.allFinite() && half_extents.minCoeff() > 0.0)) {
    throw ConfigError("box half extents must be positive");
  }
  for (const auto& w : walls) {
    const bool colors_ok = w.color_a.minCoeff() >= 0.0 && w.color_a.maxCoeff() <= 1.0 &&
                           w.color_b.minCoeff() >= 0.0 && w.color_b.maxCoeff() <= 1.0;
    if (!colors_ok) throw ConfigError("wall colors must lie in [0, 1]");
    if (!(std::isfinite(w.frequency_s) && std::isfinite(w.frequency_t))) {
      throw ConfigError("wall frequencies must be finite");
    }
  }
}

bool BoxScene::contains_strictly(const Eigen::Vector3d& p) const {
  return (p.cwiseAbs().array() < half_extents.array()).all();
}

Eigen::Vector3d camera_center(const Pose& world_to_camera) {
  return -(world_to_camera.rotation.transpose() * world_to_camera.translation);
}

RenderedView render_erp(const BoxScene& scene, const Pose& camera_pose, const ErpGrid& grid) {
  scene.validate();
  camera_pose.validate();
  grid.validate();
  const Eigen::Vector3d center = camera_center(camera_pose);
  if (!scene.contains_strictly(center)) {
    throw ConfigError("camera center must lie strictly inside the box");
  }
  const Eigen::Matrix3d camera_to_world = camera_pose.rotation.transpose();

  RenderedView view{ErpImage(grid, 3), DepthMap(grid, 0.0), camera_pose};
  for_each_row(grid.height, [&](int v) {
    for (int u = 0; u < grid.width; ++u) {
      const Eigen::Vector3d dir =
          camera_to_world * angles_to_unit_vector(pixel_to_angles(u, v, grid));
      double depth = std::numeric_limits<double>::infinity();
      int hit_axis = 0;
      for (int axis = 0; axis < 3; ++axis) {
        if (dir[axis] == 0.0) continue;
        const double wall = dir[axis] > 0.0 ? scene.half_extents[axis] : -scene.half_extents[axis];
        const double t = (wall - center[axis]) / dir[axis];
        if (t < depth) {
          depth = t;
          hit_axis = axis;
        }
      }
      const Eigen::Vector3d hit = center + depth * dir;
      const int wall_index = 2 * hit_axis + (dir[hit_axis] > 0.0 ? 0 : 1);
      const auto [s, t] = wall_coordinates(hit_axis, hit);
      const Eigen::Vector3d color = scene.walls[static_cast<std::size_t>(wall_index)].evaluate(s, t);
      double* px = view.image.pixel(v, u);
      for (int c = 0; c < 3; ++c) px[c] = color[c];
      view.depth.values(v, u) = depth;
    }
  });
  return view;
}

std::pair<RenderedView, RenderedView> render_pair(const BoxScene& scene, const Pose& target_pose,
                                                  const Pose& relative_pose,
                                                  const ErpGrid& grid) {
  RenderedView target = render_erp(scene, target_pose, grid);
  RenderedView source = render_erp(scene, relative_pose * target_pose, grid);
  return {std::move(target), std::move(source)};
}

}  // namespace erpdepth
