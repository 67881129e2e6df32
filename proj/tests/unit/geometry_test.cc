#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gforge/error.h"
#include "gforge/geometry.h"

namespace gforge {
namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return Pose(q.toRotationMatrix(), Vec3(n(rng), n(rng), n(rng)));
}

TEST(Project, EquirectForwardAxisHitsImageCenter) {
  const auto p = project(CameraModel::equirectangular(1024, 512), Vec3(1, 0, 0));
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->u, 512.0);
  EXPECT_DOUBLE_EQ(p->v, 256.0);
  EXPECT_DOUBLE_EQ(p->depth, 1.0);
}

TEST(Project, PinholePrincipalAxis) {
  const auto p = project(CameraModel::pinhole(128, 128, 100, 100, 64, 64), Vec3(0, 0, 2));
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->u, 64.0);
  EXPECT_DOUBLE_EQ(p->v, 64.0);
  EXPECT_DOUBLE_EQ(p->depth, 2.0);
}

TEST(Project, EquirectNorthPoleUsesZeroAzimuth) {
  const auto p = project(CameraModel::equirectangular(1024, 512), Vec3(0, 0, 5));
  ASSERT_TRUE(p);
  EXPECT_DOUBLE_EQ(p->u, 512.0);
  EXPECT_DOUBLE_EQ(p->v, 0.0);
  EXPECT_DOUBLE_EQ(p->depth, 5.0);
  // The pole is singular; unprojecting the pole row recovers the point.
  const Vec3 back = unproject(CameraModel::equirectangular(1024, 512), 512.0, 0.0, 5.0);
  EXPECT_NEAR((back - Vec3(0, 0, 5)).norm(), 0.0, 1e-12);
}

TEST(Project, EquirectAxisDirections) {
  const CameraModel cam = CameraModel::equirectangular(8, 4);
  // +Y (left) sits a quarter turn counter-clockwise: theta = pi/2.
  EXPECT_DOUBLE_EQ(project(cam, Vec3(0, 1, 0))->u, 6.0);
  EXPECT_DOUBLE_EQ(project(cam, Vec3(0, -1, 0))->u, 2.0);
  EXPECT_DOUBLE_EQ(project(cam, Vec3(0, 0, -1))->v, 4.0);
  // Backward maps to theta = -pi, the left image edge.
  EXPECT_DOUBLE_EQ(project(cam, Vec3(-1, 0, 0))->u, 0.0);
}

TEST(Project, PinholeBehindCameraAndZeroPointFail) {
  const CameraModel cam = CameraModel::pinhole(64, 64, 50, 50, 32, 32);
  EXPECT_FALSE(project(cam, Vec3(0, 0, -1)));
  EXPECT_FALSE(project(cam, Vec3(1, 1, 0)));
  EXPECT_FALSE(project(cam, Vec3(0, 0, 0)));
  EXPECT_FALSE(project(CameraModel::equirectangular(8, 4), Vec3(0, 0, 0)));
}

TEST(Unproject, Examples) {
  const Vec3 e = unproject(CameraModel::equirectangular(1024, 512), 512, 256, 3.0);
  EXPECT_NEAR((e - Vec3(3, 0, 0)).norm(), 0.0, 1e-12);
  const Vec3 p = unproject(CameraModel::pinhole(128, 128, 100, 100, 64, 64), 64, 64, 2.0);
  EXPECT_NEAR((p - Vec3(0, 0, 2)).norm(), 0.0, 1e-12);
}

TEST(Unproject, RejectsBadInput) {
  const CameraModel cam = CameraModel::pinhole(64, 64, 50, 50, 32, 32);
  EXPECT_THROW(unproject(cam, 10, 10, 0.0), Error);
  EXPECT_THROW(unproject(cam, 10, 10, -1.0), Error);
  EXPECT_THROW(unproject(cam, 64, 10, 1.0), Error);
  EXPECT_THROW(unproject(cam, -0.1, 10, 1.0), Error);
}

TEST(CameraModel, Validation) {
  EXPECT_THROW(CameraModel::equirectangular(100, 40), Error);
  EXPECT_THROW(CameraModel::equirectangular(0, 0), Error);
  EXPECT_THROW(CameraModel::pinhole(10, 10, 0, 1, 5, 5), Error);
  EXPECT_NO_THROW(CameraModel::equirectangular(2, 1));
}

class RoundTrip : public ::testing::TestWithParam<int> {};

TEST_P(RoundTrip, RandomPixelsRecoverCoordinates) {
  const CameraModel cam = GetParam() == 0 ? CameraModel::equirectangular(1024, 512)
                                          : CameraModel::pinhole(640, 480, 500, 510, 320.5, 240.25);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uu(0.0, cam.width());
  std::uniform_real_distribution<double> vv(0.5, cam.height() - 0.5);
  std::uniform_real_distribution<double> dd(0.1, 30.0);
  double max_px = 0.0;
  double max_depth = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double u = std::min(uu(rng), std::nextafter(cam.width(), 0.0));
    const double v = vv(rng);
    const double d = dd(rng);
    const Vec3 p = unproject(cam, u, v, d);
    const auto back = project(cam, p);
    ASSERT_TRUE(back);
    double du = std::abs(back->u - u);
    if (cam.type() == CameraType::kEquirectangular) du = std::min(du, cam.width() - du);
    max_px = std::max({max_px, du, std::abs(back->v - v)});
    max_depth = std::max(max_depth, std::abs(back->depth - d));
    if (cam.type() == CameraType::kEquirectangular) {
      EXPECT_NEAR(p.norm(), d, 1e-9);
    } else {
      EXPECT_NEAR(p.z(), d, 1e-9);
    }
  }
  EXPECT_LT(max_px, 1e-4);
  EXPECT_LT(max_depth, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Models, RoundTrip, ::testing::Values(0, 1));

TEST(PixelRay, UnitDirection) {
  const CameraModel cams[] = {CameraModel::equirectangular(64, 32), CameraModel::pinhole(64, 48, 40, 40, 32, 24)};
  for (const CameraModel& cam : cams) {
    for (double u = 0.25; u < cam.width(); u += 3.7) {
      for (double v = 0.25; v < cam.height(); v += 2.9) {
        EXPECT_NEAR(pixel_ray(cam, u, v).direction.norm(), 1.0, 1e-9);
      }
    }
  }
}

TEST(Pose, RejectsNonRotation) {
  Mat3 r = Mat3::Identity();
  r(0, 0) = -1.0;
  EXPECT_THROW(Pose(r, Vec3::Zero()), Error);
  r = Mat3::Identity() * 1.01;
  EXPECT_THROW(Pose(r, Vec3::Zero()), Error);
  Mat4 m = Mat4::Identity();
  m(3, 0) = 1.0;
  EXPECT_THROW(Pose::from_matrix(m), Error);
}

TEST(Pose, InverseAndAssociativity) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose c = random_pose(rng);
    const Mat4 id = (a * a.inverse()).matrix();
    EXPECT_LT((id - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    const Mat4 lhs = ((a * b) * c).matrix();
    const Mat4 rhs = (a * (b * c)).matrix();
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((a.rotation().transpose() * a.rotation() - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(TransformPoints, IdentityAndTranslation) {
  const std::vector<Vec3> pts{{1, 2, 3}, {-4, 0.5, 2}};
  const Pose p = Pose::from_yaw(0.7, Vec3(1, -2, 0.3));
  const auto same = transform_points(p, p, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT((same[i] - pts[i]).norm(), 1e-12);
  const std::vector<Vec3> one{{1, 0, 0}};
  const auto moved = transform_points(Pose::identity(), Pose(Mat3::Identity(), Vec3(1, 0, 0)), one);
  EXPECT_LT(moved[0].norm(), 1e-15);
}

TEST(TransformPoints, ComposesToIdentity) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) pts.emplace_back(n(rng), n(rng), n(rng));
    const auto there = transform_points(a, b, pts);
    const auto back = transform_points(b, a, there);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT((back[i] - pts[i]).norm(), 1e-9);
  }
}

TEST(Pose, RotationAngle) {
  const Pose a = Pose::from_yaw(0.0, Vec3::Zero());
  const Pose b = Pose::from_yaw(30.0 * M_PI / 180.0, Vec3::Zero());
  EXPECT_NEAR(rotation_angle_between(a, b), 30.0 * M_PI / 180.0, 1e-12);
  EXPECT_NEAR(rotation_angle_between(a, a), 0.0, 1e-12);
}

}  // namespace
}  // namespace gforge
