#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <stdexcept>

namespace planarvio {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Raised when an argument lies outside the domain of a map (e.g. SE(2) log near a half turn).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Threshold below which exp/log maps switch to their Taylor branches.
inline constexpr double kSmallAngle = 1e-8;

/// Unit quaternion rotation, Hamilton convention, stored (w, x, y, z).
class Rotation3 {
 public:
  Rotation3() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation3(const Eigen::Quaterniond& q) : q_(q.normalized()) {}
  Rotation3(double w, double x, double y, double z) : q_(Eigen::Quaterniond(w, x, y, z).normalized()) {}

  static Rotation3 identity() { return {}; }
  static Rotation3 fromMatrix(const Mat3& R);

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  Rotation3 inverse() const { return Rotation3(q_.conjugate()); }

  Rotation3 operator*(const Rotation3& other) const { return Rotation3(q_ * other.q_); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }

 private:
  Eigen::Quaterniond q_;
};

/// Rigid transform x -> R x + t.
struct Pose3 {
  Rotation3 rotation;
  Vec3 translation = Vec3::Zero();

  static Pose3 identity() { return {}; }
  Pose3 inverse() const;
  Pose3 operator*(const Pose3& other) const;
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Mat4 matrix() const;
};

/// Planar pose: heading angle in (-pi, pi] and a 2D translation.
struct PlanarPose {
  double theta = 0.0;
  Vec2 translation = Vec2::Zero();

  PlanarPose() = default;
  PlanarPose(double angle, const Vec2& t);
  PlanarPose(double angle, double x, double y) : PlanarPose(angle, Vec2(x, y)) {}

  static PlanarPose identity() { return {}; }
  PlanarPose operator*(const PlanarPose& other) const;
  PlanarPose inverse() const;
  Mat3 matrix() const;
};

/// Body twist (v_x, v_y, omega). Stored as a plain 3-vector in that order.
using Twist2 = Eigen::Vector3d;

inline Twist2 makeControlTwist(double v, double omega) { return Twist2(v, 0.0, omega); }

double wrapAngle(double a);

Mat3 hat(const Vec3& v);
Vec3 vee(const Mat3& m);
Mat3 hatSe2(const Twist2& xi);
Mat2 rot2(double theta);

Rotation3 so3Exp(const Vec3& omega);
Vec3 so3Log(const Rotation3& R);
Vec3 so3Log(const Mat3& R);
Mat3 so3RightJacobian(const Vec3& phi);
Mat3 so3RightJacobianInverse(const Vec3& phi);

PlanarPose se2Exp(const Twist2& xi, double dt);
Twist2 se2Log(const PlanarPose& P);
Mat3 se2RightJacobian(const Twist2& xi);

/// d log(P Exp(delta)) / d delta at delta = 0, with delta ordered (x, y, theta).
Mat3 se2LogJacobian(const PlanarPose& P);

/// Rotation about z by angle.
Rotation3 rotZ(double angle);
/// Rotation from roll (about x) and pitch (about y), R = Ry(pitch) Rx(roll).
Rotation3 fromRollPitch(double roll, double pitch);

}  // namespace planarvio
