#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Geometry>

#include "erpdepth/errors.hpp"
#include "erpdepth/reprojection.hpp"
#include "erpdepth/synthetic_scene.hpp"

namespace erpdepth {
namespace {

const BoxScene kRoom = BoxScene::textured_room(Eigen::Vector3d::Ones());

double depth_along(const BoxScene& scene, const SphericalPoint& p) {
  // Analytic nearest-face distance for a camera at the origin.
  const Eigen::Vector3d d = angles_to_unit_vector(p);
  double t = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (d[k] != 0.0) t = std::min(t, scene.half_extents[k] / std::abs(d[k]));
  }
  return t;
}

TEST(RenderErp, CenterCameraDepths) {
  const ErpGrid g = ErpGrid::from_height(64);
  const RenderedView view = render_erp(kRoom, Pose::identity(), g);
  for (int v = 0; v < g.height; ++v) {
    for (int u = 0; u < g.width; ++u) {
      EXPECT_NEAR(view.depth.values(v, u), depth_along(kRoom, pixel_to_angles(u, v, g)), 1e-12);
      EXPECT_TRUE(view.depth.valid(v, u));
    }
  }
}

TEST(RenderErp, ForwardCornerAndCeiling) {
  // Rotate the camera so that the pixel center of (0, 0) on a 2 x 4 grid
  // (theta = pi/4, phi = -3pi/4) points at the requested direction.
  const ErpGrid g = ErpGrid::from_height(2);
  const SphericalPoint c = pixel_to_angles(0, 0, g);
  const Eigen::Vector3d from = angles_to_unit_vector(c);
  const auto aim = [&](const Eigen::Vector3d& to) {
    const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(to, from);
    Pose p = Pose::identity();
    p.rotation = q.toRotationMatrix();  // world -> camera
    return render_erp(kRoom, p, g).depth.values(0, 0);
  };
  EXPECT_NEAR(aim({0, 0, 1}), 1.0, 1e-12);
  EXPECT_NEAR(aim(angles_to_unit_vector({std::atan(1.0 / std::sqrt(2.0)), kPi / 4.0})),
              std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(aim({0, 1, 0}), 1.0, 1e-12);
}

TEST(RenderErp, HitPointsLieOnBoxFaces) {
  const ErpGrid g = ErpGrid::from_height(32);
  const Pose pose = Pose::from_axis_angle({0.1, -0.2, 0.05}, {0.2, -0.1, 0.3});
  const RenderedView view = render_erp(kRoom, pose, g);
  const Eigen::Vector3d center = camera_center(pose);
  const Pose cam_to_world = pose.inverse();
  double min_depth = 1e9;
  for (int v = 0; v < g.height; ++v) {
    for (int u = 0; u < g.width; ++u) {
      const Eigen::Vector3d ray = angles_to_unit_vector(pixel_to_angles(u, v, g));
      const Eigen::Vector3d hit = cam_to_world.rotation * (view.depth.values(v, u) * ray) + center;
      const double on_face = (hit.cwiseAbs() - kRoom.half_extents).cwiseAbs().minCoeff();
      EXPECT_LT(on_face, 1e-9);
      EXPECT_LE(hit.cwiseAbs().maxCoeff(), 1.0 + 1e-9);
      min_depth = std::min(min_depth, view.depth.values(v, u));
    }
  }
  const double nearest_wall = (kRoom.half_extents - center.cwiseAbs()).minCoeff();
  EXPECT_GE(min_depth, nearest_wall - 1e-12);
}

TEST(RenderErp, Deterministic) {
  const ErpGrid g = ErpGrid::from_height(16);
  const RenderedView a = render_erp(kRoom, Pose::identity(), g);
  const RenderedView b = render_erp(kRoom, Pose::identity(), g);
  for (std::size_t i = 0; i < a.image.values().size(); ++i) {
    EXPECT_EQ(a.image.values()[i], b.image.values()[i]);
  }
  for (std::size_t i = 0; i < a.depth.values.size(); ++i) {
    EXPECT_EQ(a.depth.values[i], b.depth.values[i]);
  }
}

TEST(RenderErp, CameraOutsideOrOnBoundaryIsConfigError) {
  const ErpGrid g = ErpGrid::from_height(4);
  EXPECT_THROW(render_erp(kRoom, Pose::from_axis_angle({0, 0, 0}, {0, 0, -1.0}), g), ConfigError);
  EXPECT_THROW(render_erp(kRoom, Pose::from_axis_angle({0, 0, 0}, {2.0, 0, 0}), g), ConfigError);
}

TEST(RenderPair, IdentityRelativePoseGivesSameImage) {
  const auto [t, s] = render_pair(kRoom, Pose::identity(), Pose::identity(), ErpGrid::from_height(16));
  for (std::size_t i = 0; i < t.image.values().size(); ++i) {
    EXPECT_EQ(t.image.values()[i], s.image.values()[i]);
  }
}

TEST(RenderPair, YawRollsImage) {
  const ErpGrid g = ErpGrid::from_height(16);
  const int k = 4;
  const auto [t, s] = render_pair(kRoom, Pose::identity(), Pose::yaw(kTwoPi * k / g.width), g);
  // The source sees target longitude phi at phi + yaw, i.e. k columns to the right.
  for (int v = 0; v < g.height; ++v) {
    for (int u = 0; u < g.width; ++u) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(s.image(v, (u + k) % g.width, c), t.image(v, u, c), 1e-9);
      }
    }
  }
}

TEST(RenderPair, TranslationWarpFidelity) {
  const ErpGrid g = ErpGrid::from_height(64);
  const Pose rel = Pose::from_axis_angle({0, 0, 0}, {0.1, 0, 0});
  const auto [t, s] = render_pair(kRoom, Pose::identity(), rel, g);
  const WarpResult w = warp_image(s.image, t.depth, rel);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.image.values().size(); ++i) {
    sum += std::abs(w.image.values()[i] - t.image.values()[i]);
  }
  EXPECT_LT(sum / static_cast<double>(t.image.values().size()), 0.02);
}

TEST(Textures, PresetsDiffer) {
  const BoxScene ceiling = BoxScene::textureless_ceiling(Eigen::Vector3d::Ones());
  EXPECT_EQ(ceiling.walls[static_cast<int>(Wall::kPosY)].kind, TextureKind::kFlat);
  EXPECT_NE(kRoom.walls[static_cast<int>(Wall::kPosY)].kind, TextureKind::kFlat);
  EXPECT_NO_THROW(kRoom.validate());
  BoxScene bad = kRoom;
  bad.half_extents = {1, -1, 1};
  EXPECT_THROW(bad.validate(), ConfigError);
}

}  // namespace
}  // namespace erpdepth
