#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "erpdepth/errors.hpp"
#include "erpdepth/sphere_geometry.hpp"

namespace erpdepth {
namespace {

const ErpGrid kGrid = ErpGrid::from_height(512);

TEST(PixelToAngles, ImageCenterIsForward) {
  const SphericalPoint p = pixel_to_angles(kGrid.width / 2.0 - 0.5, kGrid.height / 2.0 - 0.5, kGrid);
  EXPECT_NEAR(p.theta, 0.0, 1e-12);
  EXPECT_NEAR(p.phi, 0.0, 1e-12);
}

TEST(PixelToAngles, LeftEdgeIsMinusPi) {
  const SphericalPoint p = pixel_to_angles(-0.5, kGrid.height / 2.0 - 0.5, kGrid);
  EXPECT_NEAR(p.theta, 0.0, 1e-12);
  EXPECT_NEAR(p.phi, -kPi, 1e-12);
}

TEST(PixelToAngles, QuarterPoint) {
  const SphericalPoint p = pixel_to_angles(255.5, 127.5, kGrid);
  EXPECT_NEAR(p.theta, kPi / 4.0, 1e-12);
  EXPECT_NEAR(p.phi, -kPi / 2.0, 1e-12);
}

TEST(PixelToAngles, RejectsInvalidGrid) {
  EXPECT_THROW(pixel_to_angles(0, 0, ErpGrid{4, 7}), ConfigError);
  EXPECT_THROW(pixel_to_angles(0, 0, ErpGrid{0, 0}), ConfigError);
}

TEST(PixelToAngles, LongitudeIsPeriodicInColumns) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, kGrid.width);
  std::uniform_real_distribution<double> v(0.0, kGrid.height - 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double uu = u(rng);
    const double vv = v(rng);
    const SphericalPoint a = pixel_to_angles(uu, vv, kGrid);
    for (int k : {-2, -1, 1, 3}) {
      const SphericalPoint b = pixel_to_angles(uu + k * kGrid.width, vv, kGrid);
      EXPECT_NEAR(a.theta, b.theta, 1e-12);
      EXPECT_NEAR(a.phi, b.phi, 1e-9);
    }
  }
}

TEST(AnglesToPixel, CenterAndPole) {
  const PixelCoord c = angles_to_pixel({0.0, 0.0}, kGrid);
  EXPECT_NEAR(c.u, 511.5, 1e-12);
  EXPECT_NEAR(c.v, 255.5, 1e-12);
  for (double phi : {-3.0, 0.0, 1.0}) {
    EXPECT_NEAR(angles_to_pixel({kPi / 2.0, phi}, kGrid).v, -0.5, 1e-12);
  }
}

TEST(AnglesToPixel, RoundTripWithPixelToAngles) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.5, kGrid.width - 0.5);
  std::uniform_real_distribution<double> v(-0.5, kGrid.height - 0.5);
  for (int i = 0; i < 10000; ++i) {
    const double uu = u(rng);
    const double vv = v(rng);
    const PixelCoord back = angles_to_pixel(pixel_to_angles(uu, vv, kGrid), kGrid);
    EXPECT_NEAR(back.u, uu, 1e-9);
    EXPECT_NEAR(back.v, vv, 1e-9);
  }
}

TEST(AnglesToVector, AxisCases) {
  const CartesianPoint f = angles_to_vector({0.0, 0.0}, 1.0);
  EXPECT_NEAR((f - CartesianPoint(0, 0, 1)).norm(), 0.0, 1e-15);
  const CartesianPoint z = angles_to_vector({kPi / 2.0, 0.0}, 1.0);
  EXPECT_NEAR((z - CartesianPoint(0, 1, 0)).norm(), 0.0, 1e-15);
  const CartesianPoint r = angles_to_vector({0.0, kPi / 2.0}, 2.0);
  EXPECT_NEAR((r - CartesianPoint(2, 0, 0)).norm(), 0.0, 1e-15);
}

TEST(AnglesToVector, RejectsNonpositiveDepth) {
  EXPECT_THROW(angles_to_vector({0.0, 0.0}, 0.0), DomainError);
  EXPECT_THROW(angles_to_vector({0.0, 0.0}, -1.0), DomainError);
}

TEST(AnglesToVector, NormEqualsDepth) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> th(-kPi / 2, kPi / 2), ph(-kPi, kPi), d(0.01, 100.0);
  for (int i = 0; i < 10000; ++i) {
    const double depth = d(rng);
    EXPECT_NEAR(angles_to_vector({th(rng), ph(rng)}, depth).norm(), depth, 1e-12 * depth);
    EXPECT_NEAR(angles_to_unit_vector({th(rng), ph(rng)}).norm(), 1.0, 1e-12);
  }
}

TEST(VectorToAngles, ForwardAndBackQuadrant) {
  const auto [p, r] = vector_to_angles({0, 0, 5});
  EXPECT_NEAR(p.theta, 0.0, 1e-15);
  EXPECT_NEAR(p.phi, 0.0, 1e-15);
  EXPECT_NEAR(r, 5.0, 1e-15);
  const auto [q, s] = vector_to_angles({1, 0, -1});
  EXPECT_NEAR(q.theta, 0.0, 1e-15);
  EXPECT_NEAR(q.phi, 3.0 * kPi / 4.0, 1e-15);
  EXPECT_NEAR(s, std::sqrt(2.0), 1e-15);
}

TEST(VectorToAngles, PoleHasZeroLongitude) {
  const auto [p, r] = vector_to_angles({0, -2, 0});
  EXPECT_NEAR(p.theta, -kPi / 2.0, 1e-15);
  EXPECT_EQ(p.phi, 0.0);
  EXPECT_NEAR(r, 2.0, 1e-15);
}

TEST(VectorToAngles, ZeroVectorIsDomainError) {
  EXPECT_THROW(vector_to_angles({0, 0, 0}), DomainError);
}

TEST(VectorToAngles, RoundTripWithAnglesToVector) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> th(-kPi / 2 + 1e-6, kPi / 2 - 1e-6), ph(-kPi, kPi),
      d(0.1, 50.0);
  for (int i = 0; i < 10000; ++i) {
    const SphericalPoint p{th(rng), ph(rng)};
    const double depth = d(rng);
    const auto [q, r] = vector_to_angles(angles_to_vector(p, depth));
    EXPECT_NEAR(q.theta, p.theta, 1e-9);
    EXPECT_NEAR(std::remainder(q.phi - p.phi, kTwoPi), 0.0, 1e-9);
    EXPECT_NEAR(r, depth, 1e-9 * depth);
    EXPECT_GE(q.phi, -kPi);
    EXPECT_LT(q.phi, kPi);
  }
}

TEST(WrapLongitude, MapsIntoHalfOpenRange) {
  EXPECT_NEAR(wrap_longitude(kPi), -kPi, 1e-15);
  EXPECT_NEAR(wrap_longitude(3.0 * kPi / 2.0), -kPi / 2.0, 1e-12);
  EXPECT_NEAR(wrap_longitude(-3.0 * kPi / 2.0), kPi / 2.0, 1e-12);
  EXPECT_NEAR(wrap_longitude(0.25), 0.25, 0.0);
}

TEST(ErpGrid, OddHeightIsAccepted) {
  EXPECT_NO_THROW(ErpGrid::from_height(5).validate());
}

}  // namespace
}  // namespace erpdepth
