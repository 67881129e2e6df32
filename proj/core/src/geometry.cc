#include "gforge/geometry.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "gforge/error.h"

namespace gforge {
namespace {

constexpr double kOrthonormalTolerance = 1e-9;

bool finite(const Vec3& p) { return p.allFinite(); }

}  // namespace

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    fail_invalid("pose contains non-finite values");
  }
  const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err >= kOrthonormalTolerance) {
    fail_invalid("pose rotation is not orthonormal (err " + std::to_string(ortho_err) + ")");
  }
  if (rotation.determinant() <= 0.0) {
    fail_invalid("pose rotation has negative determinant");
  }
}

Pose Pose::from_matrix(const Mat4& m) {
  const Eigen::RowVector4d last = m.row(3);
  if (std::abs(last(0)) > 1e-12 || std::abs(last(1)) > 1e-12 || std::abs(last(2)) > 1e-12 ||
      std::abs(last(3) - 1.0) > 1e-12) {
    fail_invalid("pose matrix last row must be (0, 0, 0, 1)");
  }
  return Pose(m.block<3, 3>(0, 0), m.block<3, 1>(0, 3));
}

Pose Pose::from_yaw(double angle_rad, const Vec3& translation) {
  return Pose(Eigen::AngleAxisd(angle_rad, Vec3::UnitZ()).toRotationMatrix(), translation);
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = rotation_;
  m.block<3, 1>(0, 3) = translation_;
  return m;
}

Pose Pose::inverse() const {
  Pose inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

Pose Pose::translated(const Vec3& delta) const {
  Pose out = *this;
  out.translation_ += delta;
  return out;
}

double rotation_angle_between(const Pose& a, const Pose& b) {
  const Mat3 rel = a.rotation().transpose() * b.rotation();
  const double c = std::clamp((rel.trace() - 1.0) * 0.5, -1.0, 1.0);
  return std::acos(c);
}

std::vector<Vec3> transform_points(const Pose& src, const Pose& dst, std::span<const Vec3> points) {
  const Mat3 rot = dst.rotation().transpose() * src.rotation();
  const Vec3 offset = dst.rotation().transpose() * (src.translation() - dst.translation());
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& p : points) out.push_back(rot * p + offset);
  return out;
}

CameraModel CameraModel::equirectangular(int width, int height) {
  if (width < 1 || height < 1) fail_invalid("camera dimensions must be >= 1");
  if (width != 2 * height) fail_invalid("equirectangular camera requires width == 2 * height");
  CameraModel m;
  m.type_ = CameraType::kEquirectangular;
  m.width_ = width;
  m.height_ = height;
  return m;
}

CameraModel CameraModel::pinhole(int width, int height, double fx, double fy, double cx, double cy) {
  if (width < 1 || height < 1) fail_invalid("camera dimensions must be >= 1");
  if (!(fx > 0.0) || !(fy > 0.0)) fail_invalid("pinhole focal lengths must be positive");
  if (!std::isfinite(cx) || !std::isfinite(cy)) fail_invalid("pinhole principal point must be finite");
  CameraModel m;
  m.type_ = CameraType::kPinhole;
  m.width_ = width;
  m.height_ = height;
  m.fx_ = fx;
  m.fy_ = fy;
  m.cx_ = cx;
  m.cy_ = cy;
  return m;
}

std::optional<Projection> project(const CameraModel& model, const Vec3& p) {
  if (!finite(p)) return std::nullopt;
  if (model.type() == CameraType::kPinhole) {
    if (!(p.z() > 0.0)) return std::nullopt;
    return Projection{model.fx() * p.x() / p.z() + model.cx(), model.fy() * p.y() / p.z() + model.cy(),
                      p.z()};
  }
  const double r = p.norm();
  if (!(r > 0.0)) return std::nullopt;
  double theta = std::atan2(p.y(), p.x());
  if (theta >= std::numbers::pi) theta -= 2.0 * std::numbers::pi;
  const double phi = std::asin(std::clamp(p.z() / r, -1.0, 1.0));
  const double w = model.width();
  const double h = model.height();
  return Projection{(theta / (2.0 * std::numbers::pi) + 0.5) * w, (0.5 - phi / std::numbers::pi) * h, r};
}

PixelRay pixel_ray(const CameraModel& model, double u, double v) {
  if (model.type() == CameraType::kPinhole) {
    Vec3 d((u - model.cx()) / model.fx(), (v - model.cy()) / model.fy(), 1.0);
    return PixelRay{u, v, d.normalized()};
  }
  const double theta = (u / model.width() - 0.5) * 2.0 * std::numbers::pi;
  const double phi = (0.5 - v / model.height()) * std::numbers::pi;
  const double c = std::cos(phi);
  return PixelRay{u, v, Vec3(c * std::cos(theta), c * std::sin(theta), std::sin(phi))};
}

Vec3 unproject(const CameraModel& model, double u, double v, double depth) {
  if (!(depth > 0.0) || !std::isfinite(depth)) fail_invalid("unproject requires positive finite depth");
  if (!(u >= 0.0 && u < model.width() && v >= 0.0 && v < model.height())) {
    fail_invalid("unproject pixel out of bounds");
  }
  if (model.type() == CameraType::kPinhole) {
    return Vec3(depth * (u - model.cx()) / model.fx(), depth * (v - model.cy()) / model.fy(), depth);
  }
  return depth * pixel_ray(model, u, v).direction;
}

}  // namespace gforge
