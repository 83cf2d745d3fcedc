#include "markerplan/geometry.hpp"

#include <algorithm>

namespace markerplan {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 so3_exp(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) return Mat3::Identity() + skew(omega);
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

Vec3 so3_log(const Mat3& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

Pose6D Pose6D::retract(const Vec6& xi) const {
  return {rotation * so3_exp(xi.head<3>()), translation + xi.tail<3>()};
}

bool Pose6D::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Pose6D camera_pose(const Vec2& position, double yaw, double height) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Pose6D pose;
  pose.rotation.col(0) = Vec3(s, -c, 0.0);
  pose.rotation.col(1) = Vec3(0.0, 0.0, -1.0);
  pose.rotation.col(2) = Vec3(c, s, 0.0);
  pose.translation = Vec3(position.x(), position.y(), height);
  return pose;
}

double camera_yaw(const Pose6D& camera) {
  const Vec3 axis = optical_axis(camera);
  return std::atan2(axis.y(), axis.x());
}

Pose6D marker_pose(const Vec3& center, const Vec2& normal) {
  const Vec3 z = Vec3(normal.x(), normal.y(), 0.0).normalized();
  const Vec3 x(-z.y(), z.x(), 0.0);
  Pose6D pose;
  pose.rotation.col(0) = x;
  pose.rotation.col(1) = z.cross(x);
  pose.rotation.col(2) = z;
  pose.translation = center;
  return pose;
}

double wrap_angle(double angle) {
  double a = std::remainder(angle, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

double segment_intersection(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1,
                            double eps) {
  const Vec2 r = a1 - a0;
  const Vec2 s = b1 - b0;
  const double denom = r.x() * s.y() - r.y() * s.x();
  if (std::abs(denom) <= eps * r.norm() * s.norm()) return -1.0;
  const Vec2 d = b0 - a0;
  const double t = (d.x() * s.y() - d.y() * s.x()) / denom;
  const double u = (d.x() * r.y() - d.y() * r.x()) / denom;
  constexpr double kSlack = 1e-12;
  if (t < -kSlack || t > 1.0 + kSlack || u < -kSlack || u > 1.0 + kSlack) return -1.0;
  return std::max(t, 0.0);
}

}  // namespace markerplan
