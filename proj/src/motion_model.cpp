#include "planarvio/motion_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace planarvio {

Vec6 RbfParams::toVector() const {
  Vec6 p;
  p << linear.scale, linear.center, linear.width, angular.scale, angular.center, angular.width;
  return p;
}

RbfParams RbfParams::fromVector(const Vec6& p) {
  return {{p(0), p(1), p(2)}, {p(3), p(4), p(5)}};
}

bool RbfParams::valid() const {
  return linear.scale > 0.0 && angular.scale > 0.0 && linear.width > 0.0 && angular.width > 0.0;
}

WindowSelection selectWindow(std::span<const ControlCommand> commands, double t, int size) {
  if (size < 1) throw std::invalid_argument("selectWindow: window size must be positive");
  const auto end = std::upper_bound(commands.begin(), commands.end(), t,
                                    [](double s, const ControlCommand& c) { return s < c.stamp; });
  const auto available = static_cast<int>(end - commands.begin());
  const int n = std::min(size, available);
  WindowSelection out;
  out.window.stamp = t;
  out.window.commands.assign(end - n, end);
  out.truncated = n < size;
  return out;
}

namespace {

struct ChannelTerms {
  double sum_w = 0.0;
  double sum_wv = 0.0;
  double sum_wmu = 0.0;   // sum of dw/dmu
  double sum_wmuv = 0.0;
  double sum_wsig = 0.0;  // sum of dw/dsigma
  double sum_wsigv = 0.0;
  double reference = 0.0;
};

// Kernel sums for one channel; weights are shifted by the largest exponent so the biggest is 1.
template <typename Value>
ChannelTerms channelTerms(const CommandWindow& window, const RbfChannel& ch, Value value) {
  if (window.commands.empty()) throw std::invalid_argument("effective control: empty command window");
  if (!(ch.width > 0.0)) throw std::invalid_argument("effective control: RBF width must be positive");
  const double s2 = ch.width * ch.width;
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (const auto& c : window.commands) {
    const double d = window.stamp - c.stamp - ch.center;
    max_exponent = std::max(max_exponent, -d * d / (2.0 * s2));
  }
  // Values are taken relative to the first command so a constant window gives exact zeros.
  ChannelTerms t;
  t.reference = value(window.commands.front());
  for (const auto& c : window.commands) {
    const double d = window.stamp - c.stamp - ch.center;
    const double w = std::exp(-d * d / (2.0 * s2) - max_exponent);
    const double wmu = w * d / s2;
    const double wsig = w * d * d / (s2 * ch.width);
    const double v = value(c) - t.reference;
    t.sum_w += w;
    t.sum_wv += w * v;
    t.sum_wmu += wmu;
    t.sum_wmuv += wmu * v;
    t.sum_wsig += wsig;
    t.sum_wsigv += wsig * v;
  }
  return t;
}

Eigen::RowVector3d channelJacobian(const ChannelTerms& t, const RbfChannel& ch) {
  const double offset = t.sum_wv / t.sum_w;
  return {t.reference + offset, ch.scale * (t.sum_wmuv - offset * t.sum_wmu) / t.sum_w,
          ch.scale * (t.sum_wsigv - offset * t.sum_wsig) / t.sum_w};
}

const auto kLinear = [](const ControlCommand& c) { return c.v; };
const auto kAngular = [](const ControlCommand& c) { return c.omega; };

}  // namespace

Twist2 effectiveControl(const CommandWindow& window, const RbfParams& params) {
  const ChannelTerms lin = channelTerms(window, params.linear, kLinear);
  const ChannelTerms ang = channelTerms(window, params.angular, kAngular);
  return makeControlTwist(params.linear.scale * (lin.reference + lin.sum_wv / lin.sum_w),
                          params.angular.scale * (ang.reference + ang.sum_wv / ang.sum_w));
}

Mat26 effectiveControlJacobian(const CommandWindow& window, const RbfParams& params) {
  Mat26 J = Mat26::Zero();
  J.block<1, 3>(0, 0) = channelJacobian(channelTerms(window, params.linear, kLinear), params.linear);
  J.block<1, 3>(1, 3) = channelJacobian(channelTerms(window, params.angular, kAngular), params.angular);
  return J;
}

Pose3 relativeBaseMotion(const Pose3& imu_t, const Pose3& imu_t2, const Extrinsics& ext) {
  return ext.base_from_imu * imu_t.inverse() * imu_t2 * ext.base_from_imu.inverse();
}

PlanarPose planarize(const Pose3& rel) {
  return {so3Log(rel.rotation).z(), rel.translation.head<2>()};
}

Vec3 residualInverse(const PlanarPose& rel, const Twist2& xi_bar, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("residualInverse: dt must be positive");
  return se2Log(rel) - dt * xi_bar;
}

Vec3 residualForward(const PlanarPose& rel, const Twist2& xi_bar, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("residualForward: dt must be positive");
  const PlanarPose pred = se2Exp(xi_bar, dt);
  Vec3 r;
  r.head<2>() = rel.translation - pred.translation;
  r(2) = wrapAngle(rel.theta - xi_bar(2) * dt);
  return r;
}

PlanarMotionJacobians planarMotionJacobians(const Pose3& imu_t, const Pose3& imu_t2,
                                            const Extrinsics& ext) {
  const Mat3 Rbi = ext.base_from_imu.rotation.matrix();
  const Vec3 tbi = ext.base_from_imu.translation;
  const Mat3 Rt = imu_t.rotation.matrix();
  const Mat3 Ra = Rt.transpose() * imu_t2.rotation.matrix();
  const Vec3 ta = Rt.transpose() * (imu_t2.translation - imu_t.translation);
  const Mat3 Rrel = Rbi * Ra * Rbi.transpose();

  // Heading responds to a right perturbation eps of R_rel through the inverse right Jacobian.
  const Eigen::RowVector3d g = so3RightJacobianInverse(so3Log(Rrel)).row(2);
  const Mat3 lever = Rrel * hat(tbi);  // translation response to eps

  auto assemble = [&](const Mat3& eps_of_rot, const Mat3& dt_rot, const Mat3& dt_trans) {
    Mat36 J;
    J.block<2, 3>(0, 0) = (dt_rot + lever * eps_of_rot).topRows<2>();
    J.block<1, 3>(2, 0) = g * eps_of_rot;
    J.block<2, 3>(0, 3) = dt_trans.topRows<2>();
    J.block<1, 3>(2, 3).setZero();
    return J;
  };

  PlanarMotionJacobians out;
  out.imu_t2 = assemble(Rbi, Mat3::Zero(), Rbi * Rt.transpose());
  out.imu_t = assemble(-Rrel.transpose() * Rbi, Rbi * hat(ta), -Rbi * Rt.transpose());
  out.ext = assemble(Rbi * (Ra.transpose() - Mat3::Identity()), -Rbi * hat(ta),
                     Mat3::Identity() - Rrel);
  return out;
}

Mat3 se2ExpTwistJacobian(const Twist2& xi, double dt) {
  const double th = xi(2) * dt;
  double a, b, da, db;
  if (std::abs(th) < 1e-3) {
    const double t2 = th * th;
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = th / 2.0 - th * t2 / 24.0;
    da = -th / 3.0 + th * t2 / 30.0;
    db = 0.5 - t2 / 8.0 + t2 * t2 / 144.0;
  } else {
    const double s = std::sin(th), c = std::cos(th);
    a = s / th;
    b = (1.0 - c) / th;
    da = (th * c - s) / (th * th);
    db = (th * s - (1.0 - c)) / (th * th);
  }
  Mat2 V, dV;
  V << a, -b, b, a;
  dV << da, -db, db, da;
  const Vec2 rho(xi(0) * dt, xi(1) * dt);
  Mat3 J = Mat3::Zero();
  J.block<2, 2>(0, 0) = V * dt;
  J.block<2, 1>(0, 2) = dV * rho * dt;
  J(2, 2) = dt;
  return J;
}

MotionResidual evaluateMotionResidual(const Pose3& imu_t, const Pose3& imu_t2,
                                      const Extrinsics& ext, const CommandWindow& window,
                                      const RbfParams& params, double dt, MotionModel model) {
  const PlanarPose rel = planarize(relativeBaseMotion(imu_t, imu_t2, ext));
  const Twist2 xi = effectiveControl(window, params);
  const Mat26 Jec = effectiveControlJacobian(window, params);
  Mat36 dxi = Mat36::Zero();
  dxi.row(0) = Jec.row(0);
  dxi.row(2) = Jec.row(1);

  // Maps a perturbation of the raw (x, y, theta) coordinates to a right perturbation of P_rel.
  Mat3 raw_to_right = Mat3::Identity();
  raw_to_right.topLeftCorner<2, 2>() = rot2(rel.theta).transpose();

  MotionResidual out;
  Mat3 d_raw;
  if (model == MotionModel::Inverse) {
    out.value = residualInverse(rel, xi, dt);
    out.jacobians.pose = se2LogJacobian(rel);
    d_raw = out.jacobians.pose * raw_to_right;
    out.jacobians.rbf = -dt * dxi;
  } else {
    out.value = residualForward(rel, xi, dt);
    d_raw = Mat3::Identity();
    out.jacobians.pose = raw_to_right.inverse();
    out.jacobians.rbf = -se2ExpTwistJacobian(xi, dt) * dxi;
  }
  const PlanarMotionJacobians pj = planarMotionJacobians(imu_t, imu_t2, ext);
  out.jacobians.imu_t = d_raw * pj.imu_t;
  out.jacobians.imu_t2 = d_raw * pj.imu_t2;
  out.jacobians.ext = d_raw * pj.ext;
  return out;
}

}  // namespace planarvio
