#include "wavesync/pose.h"

#include <cmath>

namespace wavesync {

bool Pose::is_approx(const Pose& other, double tol) const {
  const double dt = (translation_ - other.translation_).norm();
  // Chordal quaternion distance (sign-invariant); resolves far below the
  // acos-based angle metric.
  const double direct = (rotation_.coeffs() - other.rotation_.coeffs()).norm();
  const double flipped = (rotation_.coeffs() + other.rotation_.coeffs()).norm();
  return dt <= tol && std::min(direct, flipped) <= tol;
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.translation() + a.translation(),
              a.rotation() * b.rotation());
}

Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

Pose relative_pose(const Pose& a, const Pose& b) { return compose(a.inverse(), b); }

double rotation_angle(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double dot = std::abs(a.dot(b));
  return 2.0 * std::acos(std::min(1.0, dot));
}

}  // namespace wavesync
