#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace wavesync {

// Rigid transform in SE(3). Rotations are Hamilton quaternions, passive
// convention, stored (w, x, y, z); the quaternion is renormalized after
// every construction and composition.
class Pose {
 public:
  Pose() : translation_(Eigen::Vector3d::Zero()), rotation_(Eigen::Quaterniond::Identity()) {}

  Pose(const Eigen::Vector3d& translation, const Eigen::Quaterniond& rotation)
      : translation_(translation), rotation_(rotation.normalized()) {}

  static Pose identity() { return Pose(); }

  static Pose from_translation(const Eigen::Vector3d& t) {
    return Pose(t, Eigen::Quaterniond::Identity());
  }

  // Yaw about +z, radians.
  static Pose from_xy_yaw(double x, double y, double yaw) {
    return Pose(Eigen::Vector3d(x, y, 0.0),
                Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ())));
  }

  const Eigen::Vector3d& translation() const { return translation_; }
  const Eigen::Quaterniond& rotation() const { return rotation_; }

  Pose inverse() const {
    const Eigen::Quaterniond inv = rotation_.conjugate();
    return Pose(inv * -translation_, inv);
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation_ * p + translation_;
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_.toRotationMatrix();
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  bool is_approx(const Pose& other, double tol = 1e-9) const;

 private:
  Eigen::Vector3d translation_;
  Eigen::Quaterniond rotation_;
};

// a then b, i.e. the transform mapping a point through b first: a * b.
Pose compose(const Pose& a, const Pose& b);

Pose operator*(const Pose& a, const Pose& b);

// inverse(a) * b, so that compose(a, relative_pose(a, b)) == b.
Pose relative_pose(const Pose& a, const Pose& b);

// Geodesic rotation angle between the two orientations, radians in [0, pi].
double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b);

}  // namespace wavesync
