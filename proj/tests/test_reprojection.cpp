#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "erpdepth/errors.hpp"
#include "erpdepth/pose.hpp"
#include "erpdepth/reprojection.hpp"
#include "test_support.hpp"

namespace erpdepth {
namespace {

Pose random_pose(std::mt19937& rng, double rot, double trans) {
  std::uniform_real_distribution<double> r(-rot, rot), t(-trans, trans);
  return Pose::from_axis_angle({r(rng), r(rng), r(rng)}, {t(rng), t(rng), t(rng)});
}

TEST(Pose, RotationIsOrthonormal) {
  std::mt19937 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng, 3.0, 1.0);
    EXPECT_NEAR((p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity()).norm(), 0.0,
                1e-9);
    EXPECT_NEAR(p.rotation.determinant(), 1.0, 1e-9);
  }
}

TEST(Pose, AxisAngleRoundTrip) {
  std::mt19937 rng(2);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng, 1.5, 1.0);
    const Pose q = Pose::from_axis_angle(p.axis_angle(), p.translation);
    EXPECT_NEAR((p.rotation - q.rotation).norm(), 0.0, 1e-12);
  }
}

TEST(Pose, LeftJacobianMatchesFiniteDifferences) {
  std::mt19937 rng(3);
  const Eigen::Vector3d w(0.3, -0.2, 0.5);
  const Eigen::Vector3d p(0.7, 1.1, -0.4);
  const Eigen::Matrix3d analytic = rotate_point_jacobian(w, p);
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d e = Eigen::Vector3d::Zero();
    e[k] = 1e-6;
    const Eigen::Vector3d numeric =
        (rotation_from_axis_angle(w + e) * p - rotation_from_axis_angle(w - e) * p) / 2e-6;
    EXPECT_NEAR((analytic.col(k) - numeric).norm(), 0.0, 1e-8);
  }
}

TEST(ReprojectPoint, IdentityPose) {
  const auto [p, r] = reproject_point({0.0, 0.0}, 3.0, Pose::identity());
  EXPECT_EQ(p.theta, 0.0);
  EXPECT_EQ(p.phi, 0.0);
  EXPECT_EQ(r, 3.0);
}

TEST(ReprojectPoint, IdentityIsExactForRandomPoints) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> th(-1.5, 1.5), ph(-kPi, kPi), d(0.1, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const SphericalPoint p{th(rng), ph(rng)};
    const double depth = d(rng);
    const auto [q, r] = reproject_point(p, depth, Pose::identity());
    EXPECT_EQ(q.theta, p.theta);
    EXPECT_EQ(q.phi, p.phi);
    EXPECT_EQ(r, depth);
  }
}

TEST(ReprojectPoint, ForwardTranslation) {
  const auto [p, r] = reproject_point({0.0, 0.0}, 2.0,
                                      Pose::from_axis_angle({0, 0, 0}, {0, 0, -1}));
  EXPECT_NEAR(p.theta, 0.0, 1e-15);
  EXPECT_NEAR(p.phi, 0.0, 1e-15);
  EXPECT_NEAR(r, 1.0, 1e-15);
}

TEST(ReprojectPoint, PureYawShiftsLongitude) {
  const double psi = 0.4;
  for (double phi : {-2.0, 0.0, 1.3}) {
    const auto [p, r] = reproject_point({0.0, phi}, 2.5, Pose::yaw(psi));
    EXPECT_NEAR(p.theta, 0.0, 1e-12);
    EXPECT_NEAR(std::remainder(p.phi - (phi + psi), kTwoPi), 0.0, 1e-12);
    EXPECT_NEAR(r, 2.5, 1e-12);
  }
}

TEST(ReprojectPoint, CameraCenterIsDegenerate) {
  EXPECT_THROW(reproject_point({0.0, 0.0}, 1.0, Pose::from_axis_angle({0, 0, 0}, {0, 0, -1})),
               DegeneratePointError);
}

TEST(ReprojectPoint, ScaleCovariance) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> th(-1.4, 1.4), ph(-kPi, kPi), d(0.5, 5.0);
  for (int i = 0; i < 500; ++i) {
    const Pose pose = random_pose(rng, 0.5, 0.3);
    const SphericalPoint p{th(rng), ph(rng)};
    const double depth = d(rng);
    const auto [q, r] = reproject_point(p, depth, pose);
    for (double s : {0.5, 2.0, 10.0}) {
      Pose scaled = pose;
      scaled.translation *= s;
      const auto [qs, rs] = reproject_point(p, s * depth, scaled);
      EXPECT_NEAR(qs.theta, q.theta, 1e-9);
      EXPECT_NEAR(std::remainder(qs.phi - q.phi, kTwoPi), 0.0, 1e-9);
      EXPECT_NEAR(rs, s * r, 1e-9 * s * r);
    }
  }
}

TEST(ReprojectPoint, CompositionMatchesSequentialApplication) {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> th(-1.3, 1.3), ph(-kPi, kPi), d(1.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const Pose a = random_pose(rng, 0.6, 0.2);
    const Pose b = random_pose(rng, 0.6, 0.2);
    const SphericalPoint p{th(rng), ph(rng)};
    const double depth = d(rng);
    const auto [mid, r_mid] = reproject_point(p, depth, a);
    const auto [seq, r_seq] = reproject_point(mid, r_mid, b);
    const auto [once, r_once] = reproject_point(p, depth, b * a);
    EXPECT_NEAR(once.theta, seq.theta, 1e-9);
    EXPECT_NEAR(std::remainder(once.phi - seq.phi, kTwoPi), 0.0, 1e-9);
    EXPECT_NEAR(r_once, r_seq, 1e-9);
  }
}

TEST(ReprojectGrid, IdentityPoseMapsPixelsToThemselves) {
  const ErpGrid grid = ErpGrid::from_height(16);
  DepthMap depth(grid, 1.0);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> d(0.2, 20.0);
  for (double& x : depth.values.values()) x = d(rng);
  const ReprojectionField f = reproject_grid(depth, Pose::identity());
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      EXPECT_NEAR(f.source_u(v, u), u, 1e-9);
      EXPECT_NEAR(f.source_v(v, u), v, 1e-9);
      EXPECT_TRUE(f.valid(v, u));
    }
  }
}

TEST(ReprojectGrid, YawByWholeColumnsShiftsCoordinates) {
  const ErpGrid grid = ErpGrid::from_height(16);
  const DepthMap depth(grid, 2.0);
  const int k = 3;
  const ReprojectionField f = reproject_grid(depth, Pose::yaw(kTwoPi * k / grid.width));
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      const double expected = (u + k) % grid.width;
      EXPECT_NEAR(std::remainder(f.source_u(v, u) - expected, grid.width), 0.0, 1e-9);
      EXPECT_NEAR(f.source_v(v, u), v, 1e-9);
    }
  }
}

TEST(ReprojectGrid, InvalidDepthPixelIsInvalid) {
  const ErpGrid grid = ErpGrid::from_height(8);
  DepthMap depth(grid, 2.0);
  depth.valid(3, 5) = 0;
  const ReprojectionField f = reproject_grid(depth, Pose::identity());
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      EXPECT_EQ(static_cast<bool>(f.valid(v, u)), !(v == 3 && u == 5));
    }
  }
}

TEST(SampleBilinear, NodesAreExact) {
  const ErpImage image = testing::random_image(ErpGrid::from_height(4), 3, 1);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 8; ++u) {
      const BilinearSample s = sample_bilinear(image, u, v);
      EXPECT_TRUE(s.in_bounds);
      for (int c = 0; c < 3; ++c) EXPECT_EQ(s.values[c], image(v, u, c));
    }
  }
}

TEST(SampleBilinear, SeamInterpolatesAcrossWrap) {
  ErpImage image(ErpGrid{1, 2}, 1);
  image(0, 0, 0) = 0.2;
  image(0, 1, 0) = 0.8;
  const BilinearSample s = sample_bilinear(image, 1.5, 0.0);
  EXPECT_NEAR(s.values[0], 0.5, 1e-15);
}

TEST(SampleBilinear, OutOfRangeRowClampsAndFlags) {
  const ErpImage image = testing::random_image(ErpGrid::from_height(4), 2, 2);
  const BilinearSample s = sample_bilinear(image, 3.0, -2.0);
  EXPECT_FALSE(s.in_bounds);
  EXPECT_EQ(s.values[0], image(0, 3, 0));
  EXPECT_EQ(s.values[1], image(0, 3, 1));
  EXPECT_TRUE(sample_bilinear(image, 3.0, -0.5).in_bounds);
  EXPECT_TRUE(sample_bilinear(image, 3.0, 3.5).in_bounds);
  EXPECT_FALSE(sample_bilinear(image, 3.0, 3.5001).in_bounds);
}

TEST(SampleBilinear, ContinuousAcrossSeam) {
  const ErpImage image = testing::random_image(ErpGrid::from_height(8), 1, 3);
  for (double eps : {1e-3, 1e-6, 1e-9}) {
    const double a = sample_bilinear(image, -eps, 2.3).values[0];
    const double b = sample_bilinear(image, 16.0 - eps, 2.3).values[0];
    EXPECT_NEAR(a, b, 1e-12);
  }
}

TEST(SampleBilinear, DerivativesMatchFiniteDifferences) {
  const ErpImage image = testing::random_image(ErpGrid::from_height(8), 2, 4);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> uu(-0.4, 15.4), vv(0.1, 6.4);
  for (int i = 0; i < 100; ++i) {
    double u = uu(rng), v = vv(rng);
    // Stay away from cell boundaries where the derivative is discontinuous.
    if (std::abs(u - std::round(u)) < 1e-3 || std::abs(v - std::round(v)) < 1e-3) continue;
    double out[2], du[2], dv[2];
    sample_bilinear_into(image, u, v, out, du, dv);
    for (int c = 0; c < 2; ++c) {
      const double nu = (sample_bilinear(image, u + 1e-7, v).values[c] -
                         sample_bilinear(image, u - 1e-7, v).values[c]) / 2e-7;
      const double nv = (sample_bilinear(image, u, v + 1e-7).values[c] -
                         sample_bilinear(image, u, v - 1e-7).values[c]) / 2e-7;
      EXPECT_NEAR(du[c], nu, 1e-6);
      EXPECT_NEAR(dv[c], nv, 1e-6);
    }
  }
}

TEST(WarpImage, IdentityReproducesSource) {
  const ErpImage image = testing::random_image(ErpGrid::from_height(32), 3, 5);
  const WarpResult w = warp_image(image, DepthMap(image.grid(), 3.0), Pose::identity());
  for (std::size_t i = 0; i < image.values().size(); ++i) {
    EXPECT_NEAR(w.image.values()[i], image.values()[i], 1e-6);
  }
  for (std::size_t i = 0; i < w.valid_mask.size(); ++i) EXPECT_TRUE(w.valid_mask[i]);
}

TEST(WarpImage, YawEqualsRoll) {
  const ErpGrid grid = ErpGrid::from_height(32);
  const ErpImage image = testing::random_image(grid, 3, 6);
  const int k = 5;
  const WarpResult w = warp_image(image, DepthMap(grid, 1.0), Pose::yaw(kTwoPi * k / grid.width));
  for (int v = 0; v < grid.height; ++v) {
    for (int u = 0; u < grid.width; ++u) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(w.image(v, u, c), image(v, (u + k) % grid.width, c), 1e-6);
      }
    }
  }
}

TEST(WarpImage, GridMismatchIsConfigError) {
  const ErpImage image = testing::random_image(ErpGrid::from_height(8), 1, 7);
  EXPECT_THROW(warp_image(image, DepthMap(ErpGrid::from_height(4), 1.0), Pose::identity()),
               ConfigError);
}

TEST(SourcePixelJacobian, MatchesFiniteDifferences) {
  const ErpGrid grid = ErpGrid::from_height(64);
  std::mt19937 rng(10);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d p(c(rng), c(rng), c(rng));
    if (std::hypot(p.x(), p.z()) < 0.2) continue;
    // Avoid the longitude seam where u jumps by W.
    if (p.z() < 0 && std::abs(p.x()) < 0.1) continue;
    const Eigen::Matrix<double, 2, 3> j = source_pixel_jacobian(p, grid);
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e[k] = 1e-6;
      const auto [a, ra] = vector_to_angles(p + e);
      const auto [b, rb] = vector_to_angles(p - e);
      const PixelCoord pa = angles_to_pixel(a, grid), pb = angles_to_pixel(b, grid);
      EXPECT_NEAR(j(0, k), (pa.u - pb.u) / 2e-6, 1e-4 * std::max(1.0, std::abs(j(0, k))));
      EXPECT_NEAR(j(1, k), (pa.v - pb.v) / 2e-6, 1e-4 * std::max(1.0, std::abs(j(1, k))));
    }
  }
}

}  // namespace
}  // namespace erpdepth
