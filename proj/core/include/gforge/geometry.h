#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace gforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Rigid world<-camera transform: p_world = rotation * p_cam + translation.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  // Throws kInvalidArgument unless rotation is orthonormal with det +1
  // (max abs entry of R^T R - I below 1e-9).
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return Pose(); }
  // Reads the upper 3x4 block of a world<-camera homogeneous matrix; the last
  // row must be (0, 0, 0, 1).
  static Pose from_matrix(const Mat4& m);
  // Rotation by `angle_rad` about the world +Z axis.
  static Pose from_yaw(double angle_rad, const Vec3& translation);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Mat4 matrix() const;
  Pose inverse() const;
  // (a * b) maps b's camera frame through b into a's frame.
  Pose operator*(const Pose& other) const;

  Vec3 camera_to_world(const Vec3& p_cam) const { return rotation_ * p_cam + translation_; }
  Vec3 world_to_camera(const Vec3& p_world) const {
    return rotation_.transpose() * (p_world - translation_);
  }

  Pose translated(const Vec3& delta) const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Relative rotation angle between two poses, radians in [0, pi].
double rotation_angle_between(const Pose& a, const Pose& b);

// p_dst = R_dst^T (R_src p_src + t_src - t_dst) for every point.
std::vector<Vec3> transform_points(const Pose& src, const Pose& dst, std::span<const Vec3> points);

enum class CameraType { kEquirectangular, kPinhole };

// Continuous pixel coordinates put pixel (i, j) over [i, i+1) x [j, j+1);
// its center sits at (i + 0.5, j + 0.5).
//
// Equirectangular frame: X forward, Y left, Z up. Azimuth atan2(Y, X) maps to
// u = (theta / 2pi + 0.5) W, elevation asin(Z / |p|) to v = (0.5 - phi / pi) H,
// and depth is Euclidean ray distance. Azimuth at the poles is 0.
// Pinhole frame: X right, Y down, Z forward; depth is Z.
class CameraModel {
 public:
  static CameraModel equirectangular(int width, int height);
  static CameraModel pinhole(int width, int height, double fx, double fy, double cx, double cy);

  CameraType type() const { return type_; }
  int width() const { return width_; }
  int height() const { return height_; }
  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }

  bool operator==(const CameraModel&) const = default;

 private:
  CameraModel() = default;

  CameraType type_ = CameraType::kPinhole;
  int width_ = 1;
  int height_ = 1;
  double fx_ = 1.0;
  double fy_ = 1.0;
  double cx_ = 0.0;
  double cy_ = 0.0;
};

struct Projection {
  double u;
  double v;
  double depth;
};

struct PixelRay {
  double u;
  double v;
  Vec3 direction;  // unit length, camera frame
};

// Returns nullopt for a zero-norm or non-finite point, and for points with
// Z <= 0 under a pinhole model.
std::optional<Projection> project(const CameraModel& model, const Vec3& point_cam);

// Throws kInvalidArgument for depth <= 0 or a pixel outside [0,W) x [0,H).
Vec3 unproject(const CameraModel& model, double u, double v, double depth);

// Unit viewing ray through a continuous pixel coordinate (no bounds check).
PixelRay pixel_ray(const CameraModel& model, double u, double v);

}  // namespace gforge
