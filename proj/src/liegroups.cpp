#include "planarvio/liegroups.hpp"

#include <cmath>
#include <numbers>

namespace planarvio {

namespace {

constexpr double kPi = std::numbers::pi;
// Jacobian coefficients below this angle are evaluated from their series.
constexpr double kSeriesAngle = 1e-3;

// (1 - cos t) / t^2
double oneMinusCosOverSq(double t) {
  if (std::abs(t) < kSeriesAngle) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  return (1.0 - std::cos(t)) / (t * t);
}

// (t - sin t) / t^3
double tMinusSinOverCube(double t) {
  if (std::abs(t) < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// sin t / t
double sinc(double t) {
  if (std::abs(t) < kSeriesAngle) {
    const double t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

}  // namespace

double wrapAngle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return {m(2, 1), m(0, 2), m(1, 0)}; }

Mat3 hatSe2(const Twist2& xi) {
  Mat3 m;
  m << 0.0, -xi(2), xi(0),
       xi(2), 0.0, xi(1),
       0.0, 0.0, 0.0;
  return m;
}

Mat2 rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

Rotation3 Rotation3::fromMatrix(const Mat3& R) { return Rotation3(Eigen::Quaterniond(R)); }

Pose3 Pose3::inverse() const {
  const Rotation3 rinv = rotation.inverse();
  return {rinv, -(rinv * translation)};
}

Pose3 Pose3::operator*(const Pose3& other) const {
  return {rotation * other.rotation, rotation * other.translation + translation};
}

Mat4 Pose3::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

PlanarPose::PlanarPose(double angle, const Vec2& t) : theta(wrapAngle(angle)), translation(t) {}

PlanarPose PlanarPose::operator*(const PlanarPose& other) const {
  return {theta + other.theta, rot2(theta) * other.translation + translation};
}

PlanarPose PlanarPose::inverse() const {
  return {-theta, -(rot2(-theta) * translation)};
}

Mat3 PlanarPose::matrix() const {
  Mat3 m = Mat3::Identity();
  m.topLeftCorner<2, 2>() = rot2(theta);
  m.topRightCorner<2, 1>() = translation;
  return m;
}

Rotation3 so3Exp(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    const Vec3 v = 0.5 * (1.0 - t2 / 24.0) * omega;
    return Rotation3(1.0 - t2 / 8.0, v.x(), v.y(), v.z());
  }
  const Vec3 v = std::sin(0.5 * theta) / theta * omega;
  return Rotation3(std::cos(0.5 * theta), v.x(), v.y(), v.z());
}

Vec3 so3Log(const Rotation3& R) {
  Eigen::Quaterniond q = R.quaternion();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const Vec3 v = q.vec();
  const double n = v.norm();
  if (n < kSmallAngle) {
    // log(q) ~ 2 v / w, second-order accurate.
    return 2.0 / q.w() * v;
  }
  if (q.w() == 0.0) {
    // Half turn: the axis sign is ambiguous. Make the largest-magnitude
    // component positive, preferring x over y over z on ties.
    Vec3 axis = v / n;
    int best = 0;
    for (int i = 1; i < 3; ++i) {
      if (std::abs(axis(i)) > std::abs(axis(best))) best = i;
    }
    if (axis(best) < 0.0) axis = -axis;
    return kPi * axis;
  }
  const double angle = 2.0 * std::atan2(n, q.w());
  return angle / n * v;
}

Vec3 so3Log(const Mat3& R) { return so3Log(Rotation3::fromMatrix(R)); }

Mat3 so3RightJacobian(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 K = hat(phi);
  return Mat3::Identity() - oneMinusCosOverSq(t) * K + tMinusSinOverCube(t) * K * K;
}

Mat3 so3RightJacobianInverse(const Vec3& phi) {
  const double t = phi.norm();
  const Mat3 K = hat(phi);
  double c;
  if (t < kSeriesAngle) {
    c = 1.0 / 12.0 + t * t / 720.0;
  } else {
    c = 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
  }
  return Mat3::Identity() + 0.5 * K + c * K * K;
}

PlanarPose se2Exp(const Twist2& xi, double dt) {
  if (dt < 0.0) throw std::invalid_argument("se2Exp: negative time step");
  const double theta = xi(2) * dt;
  const Vec2 rho(xi(0) * dt, xi(1) * dt);
  const double a = sinc(theta);
  const double b = oneMinusCosOverSq(theta) * theta;
  Mat2 V;
  V << a, -b, b, a;
  return {theta, V * rho};
}

Twist2 se2Log(const PlanarPose& P) {
  const double theta = P.theta;
  if (std::abs(theta) >= kPi - 1e-6) {
    throw DomainError("se2Log: rotation too close to a half turn");
  }
  const double a = sinc(theta);
  const double b = oneMinusCosOverSq(theta) * theta;
  Mat2 Vinv;
  Vinv << a, b, -b, a;
  Vinv /= (a * a + b * b);
  const Vec2 rho = Vinv * P.translation;
  return {rho.x(), rho.y(), theta};
}

Mat3 se2RightJacobian(const Twist2& xi) {
  const double r1 = xi(0), r2 = xi(1), t = xi(2);
  const double s = sinc(t);
  const double c = oneMinusCosOverSq(t) * t;  // (1 - cos t) / t
  const double c1 = oneMinusCosOverSq(t);
  const double c2 = tMinusSinOverCube(t) * t;  // (t - sin t) / t^2
  Mat3 J;
  J << s, c, r1 * c2 - r2 * c1,
       -c, s, r1 * c1 + r2 * c2,
       0.0, 0.0, 1.0;
  return J;
}

Mat3 se2LogJacobian(const PlanarPose& P) {
  const Twist2 xi = se2Log(P);
  return se2RightJacobian(xi).inverse();
}

Rotation3 rotZ(double angle) { return so3Exp(Vec3(0.0, 0.0, angle)); }

Rotation3 fromRollPitch(double roll, double pitch) {
  return so3Exp(Vec3(0.0, pitch, 0.0)) * so3Exp(Vec3(roll, 0.0, 0.0));
}

}  // namespace planarvio
