#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "erpdepth/cubemap.hpp"
#include "erpdepth/errors.hpp"
#include "test_support.hpp"

namespace erpdepth {
namespace {

TEST(CubeFaces, ForwardAndZenithHitFaceCenters) {
  const FaceCoord f = direction_to_face(angles_to_unit_vector({0.0, 0.0}));
  EXPECT_EQ(f.face, CubeFace::kFront);
  EXPECT_NEAR(f.a, 0.0, 1e-15);
  EXPECT_NEAR(f.b, 0.0, 1e-15);
  const FaceCoord u = direction_to_face(angles_to_unit_vector({kPi / 2.0, 0.3}));
  EXPECT_EQ(u.face, CubeFace::kUp);
  EXPECT_NEAR(u.a, 0.0, 1e-12);
  EXPECT_NEAR(u.b, 0.0, 1e-12);
}

TEST(CubeFaces, EdgeTieBreakPrefersXThenY) {
  EXPECT_EQ(direction_to_face({1, 1, 1}).face, CubeFace::kRight);
  EXPECT_EQ(direction_to_face({-1, 0, 1}).face, CubeFace::kLeft);
  EXPECT_EQ(direction_to_face({0, 1, 1}).face, CubeFace::kUp);
  EXPECT_EQ(direction_to_face({0, -1, -1}).face, CubeFace::kDown);
}

TEST(CubeFaces, DirectionRoundTrip) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  for (int f = 0; f < 6; ++f) {
    for (int i = 0; i < 200; ++i) {
      const double a = c(rng), b = c(rng);
      const FaceCoord fc = direction_to_face(cube_face_direction(static_cast<CubeFace>(f), a, b));
      EXPECT_EQ(static_cast<int>(fc.face), f);
      EXPECT_NEAR(fc.a, a, 1e-12);
      EXPECT_NEAR(fc.b, b, 1e-12);
    }
  }
}

TEST(CubeFaces, EveryDirectionHasExactlyOneFace) {
  std::mt19937 rng(2);
  std::normal_distribution<double> n;
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d d(n(rng), n(rng), n(rng));
    const FaceCoord fc = direction_to_face(d);
    EXPECT_LE(std::abs(fc.a), 1.0);
    EXPECT_LE(std::abs(fc.b), 1.0);
    const Eigen::Vector3d back = cube_face_direction(fc.face, fc.a, fc.b);
    EXPECT_NEAR(back.normalized().dot(d.normalized()), 1.0, 1e-12);
  }
}

TEST(Cubemap, ConstantImageGivesConstantFaces) {
  const CubeMap cube = erp_to_cubemap(ErpImage(ErpGrid::from_height(16), 3, 0.25), 8);
  for (const auto& face : cube.faces) {
    ASSERT_EQ(face.size(), 8u * 8u * 3u);
    for (double x : face) EXPECT_NEAR(x, 0.25, 1e-15);
  }
}

TEST(Cubemap, ConstantCubeGivesConstantErp) {
  const ErpImage e = cubemap_to_erp(constant_cubemap(8, 2, 0.6), ErpGrid::from_height(16));
  for (double x : e.values()) EXPECT_NEAR(x, 0.6, 1e-15);
}

TEST(Cubemap, ConstantRoundTripPsnrIsInfinite) {
  const ErpImage img(ErpGrid::from_height(16), 3, 0.4);
  EXPECT_TRUE(std::isinf(psnr(img, cubemap_to_erp(erp_to_cubemap(img, 16), img.grid()))));
}

TEST(Cubemap, SmoothRoundTripPsnrAndMonotonicity) {
  const ErpGrid g = ErpGrid::from_height(64);
  const ErpImage img = testing::smooth_image(g);
  double prev = 0.0;
  for (int face : {32, 64, 128}) {
    const double p = psnr(img, cubemap_to_erp(erp_to_cubemap(img, face), g));
    if (face == 64) {
      EXPECT_GT(p, 30.0);
    }
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(Cubemap, InvalidFaceSize) {
  EXPECT_THROW(erp_to_cubemap(ErpImage(ErpGrid::from_height(8), 1), 1), ConfigError);
  CubeMap bad = constant_cubemap(4, 1, 0.0);
  bad.faces[3].pop_back();
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Psnr, KnownValue) {
  const ErpGrid g = ErpGrid::from_height(2);
  EXPECT_NEAR(psnr(ErpImage(g, 1, 0.5), ErpImage(g, 1, 0.6)), 20.0, 1e-9);
  EXPECT_THROW(psnr(ErpImage(g, 1), ErpImage(g, 3)), ConfigError);
}

}  // namespace
}  // namespace erpdepth
