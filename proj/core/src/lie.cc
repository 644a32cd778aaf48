#include "wavesync/lie.h"

#include <cmath>

namespace wavesync {
namespace {

constexpr double kSmallAngle = 1e-7;

// Q block of the SE(3) left Jacobian (Barfoot, "State Estimation for
// Robotics", eq. 7.86), with series fallbacks near theta = 0.
Eigen::Matrix3d q_matrix(const Eigen::Vector3d& rho, const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d rx = skew(rho);
  const Eigen::Matrix3d px = skew(phi);

  double c1, c2, c3;
  if (theta < kSmallAngle) {
    c1 = 1.0 / 6.0;
    c2 = 1.0 / 24.0;
    c3 = 1.0 / 120.0 * -1.0;
  } else {
    const double t2 = theta * theta;
    const double t3 = t2 * theta;
    const double t4 = t3 * theta;
    const double t5 = t4 * theta;
    c1 = (theta - std::sin(theta)) / t3;
    c2 = (1.0 - t2 / 2.0 - std::cos(theta)) / t4;
    c3 = (theta - std::sin(theta) - t3 / 6.0) / t5;
  }

  const Eigen::Matrix3d m1 = px * rx + rx * px + px * rx * px;
  const Eigen::Matrix3d m2 = px * px * rx + rx * px * px - 3.0 * px * rx * px;
  const Eigen::Matrix3d m3 = px * rx * px * px + px * px * rx * px;

  return 0.5 * rx + c1 * m1 - c2 * m2 - 0.5 * (c2 - 3.0 * c3) * m3;
}

}  // namespace

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Quaterniond so3_exp(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  if (theta < kSmallAngle) {
    Eigen::Quaterniond q(1.0, 0.5 * phi.x(), 0.5 * phi.y(), 0.5 * phi.z());
    return q.normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(theta, phi / theta));
}

Eigen::Vector3d so3_log(const Eigen::Quaterniond& q) {
  const Eigen::AngleAxisd aa(q.normalized());
  return aa.angle() * aa.axis();
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d px = skew(phi);
  if (theta < kSmallAngle) {
    return Eigen::Matrix3d::Identity() + 0.5 * px + px * px / 6.0;
  }
  const double t2 = theta * theta;
  const double a = (1.0 - std::cos(theta)) / t2;
  const double b = (theta - std::sin(theta)) / (t2 * theta);
  return Eigen::Matrix3d::Identity() + a * px + b * px * px;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d px = skew(phi);
  if (theta < kSmallAngle) {
    return Eigen::Matrix3d::Identity() - 0.5 * px + px * px / 12.0;
  }
  const double half = 0.5 * theta;
  const double cot_half = std::cos(half) / std::sin(half);
  const double coeff = (1.0 - half * cot_half) / (theta * theta);
  return Eigen::Matrix3d::Identity() - 0.5 * px + coeff * px * px;
}

Pose se3_exp(const Vector6d& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  return Pose(so3_left_jacobian(phi) * rho, so3_exp(phi));
}

Vector6d se3_log(const Pose& pose) {
  const Eigen::Vector3d phi = so3_log(pose.rotation());
  Vector6d xi;
  xi.head<3>() = so3_left_jacobian_inverse(phi) * pose.translation();
  xi.tail<3>() = phi;
  return xi;
}

Matrix6d se3_adjoint(const Pose& pose) {
  const Eigen::Matrix3d r = pose.rotation().toRotationMatrix();
  Matrix6d ad = Matrix6d::Zero();
  ad.topLeftCorner<3, 3>() = r;
  ad.bottomRightCorner<3, 3>() = r;
  ad.topRightCorner<3, 3>() = skew(pose.translation()) * r;
  return ad;
}

Matrix6d se3_left_jacobian_inverse(const Vector6d& xi) {
  const Eigen::Vector3d rho = xi.head<3>();
  const Eigen::Vector3d phi = xi.tail<3>();
  const Eigen::Matrix3d jinv = so3_left_jacobian_inverse(phi);
  const Eigen::Matrix3d q = q_matrix(rho, phi);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = jinv;
  out.bottomRightCorner<3, 3>() = jinv;
  out.topRightCorner<3, 3>() = -jinv * q * jinv;
  return out;
}

Matrix6d se3_right_jacobian_inverse(const Vector6d& xi) {
  return se3_left_jacobian_inverse(-xi);
}

}  // namespace wavesync
