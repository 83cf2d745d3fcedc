#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

namespace markerplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid transform mapping body coordinates to world coordinates.
///
/// Tangent perturbations use the convention xi = [omega; v]:
///   R' = R * Exp(omega),  t' = t + v
/// i.e. rotation in the body frame, translation in the world frame. Every
/// 6x6 covariance or information matrix in the library is expressed in this
/// ordering.
struct Pose6D {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 transform(const Vec3& body) const { return rotation * body + translation; }
  Vec3 inverse_transform(const Vec3& world) const {
    return rotation.transpose() * (world - translation);
  }
  Pose6D inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }
  Pose6D operator*(const Pose6D& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  /// Applies a tangent perturbation [omega; v].
  Pose6D retract(const Vec6& xi) const;

  bool is_valid(double tol = 1e-9) const;

  bool operator==(const Pose6D&) const = default;
};

Mat3 skew(const Vec3& v);
Mat3 so3_exp(const Vec3& omega);
Vec3 so3_log(const Mat3& rotation);

/// Rotation about the world z axis.
Mat3 rot_z(double angle);

/// Camera at eye level (z = 0 by default) looking horizontally along `yaw`.
/// Camera frame: x right, y down, z forward (optical axis).
Pose6D camera_pose(const Vec2& position, double yaw, double height = 0.0);

/// Yaw of a horizontal camera, i.e. the heading of its optical axis.
double camera_yaw(const Pose6D& camera);

/// Optical axis direction (camera z axis) in world coordinates.
inline Vec3 optical_axis(const Pose6D& camera) { return camera.rotation.col(2); }

/// Marker frame: z along the outward surface normal, x along the wall, y = z cross x.
Pose6D marker_pose(const Vec3& center, const Vec2& normal);

inline Vec3 marker_normal(const Pose6D& marker) { return marker.rotation.col(2); }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Segment/segment intersection in the plane. Returns the parameter along
/// [a0, a1] of the crossing, or a negative value when the segments do not
/// cross. Collinear overlap counts as no crossing.
double segment_intersection(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1,
                            double eps = 1e-12);

}  // namespace markerplan
