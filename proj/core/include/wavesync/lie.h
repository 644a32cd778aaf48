#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "wavesync/pose.h"

namespace wavesync {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

Eigen::Quaterniond so3_exp(const Eigen::Vector3d& phi);
Eigen::Vector3d so3_log(const Eigen::Quaterniond& q);

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& phi);
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& phi);

// Tangent vectors are ordered [rho; phi] (translational part first).
Pose se3_exp(const Vector6d& xi);
Vector6d se3_log(const Pose& pose);

// Ad(T) such that Exp(Ad(T) xi) = T Exp(xi) T^-1.
Matrix6d se3_adjoint(const Pose& pose);

Matrix6d se3_left_jacobian_inverse(const Vector6d& xi);
Matrix6d se3_right_jacobian_inverse(const Vector6d& xi);

}  // namespace wavesync
