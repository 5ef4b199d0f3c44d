#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "planarvio/liegroups.hpp"

namespace planarvio {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat26 = Eigen::Matrix<double, 2, 6>;

struct ControlCommand {
  double stamp = 0.0;  // seconds
  double v = 0.0;      // forward velocity, m/s
  double omega = 0.0;  // yaw rate, rad/s
};

/// RBF kernel parameters of one velocity channel.
struct RbfChannel {
  double scale = 1.0;
  double center = 0.0;  // mu, seconds
  double width = 0.1;   // sigma, seconds
};

/// Linear and angular channel parameters, vector order (s_lin, mu_lin, sigma_lin, s_ang, mu_ang, sigma_ang).
struct RbfParams {
  RbfChannel linear;
  RbfChannel angular;

  Vec6 toVector() const;
  static RbfParams fromVector(const Vec6& p);
  bool valid() const;
};

/// The commands that feed the effective control at query time `stamp`.
struct CommandWindow {
  std::vector<ControlCommand> commands;
  double stamp = 0.0;
};

struct WindowSelection {
  CommandWindow window;
  bool truncated = false;  // fewer than the requested size were available
};

/// Base-to-IMU extrinsics T^b_i: maps IMU coordinates into the base frame.
struct Extrinsics {
  Pose3 base_from_imu;
};

inline constexpr int kDefaultWindowSize = 5;

/// The `size` most recent commands with stamp <= t (inclusive). Commands must be time sorted.
WindowSelection selectWindow(std::span<const ControlCommand> commands, double t,
                             int size = kDefaultWindowSize);

/// RBF-weighted, scaled average (v_bar, 0, omega_bar).
Twist2 effectiveControl(const CommandWindow& window, const RbfParams& params);

/// Row 0: d v_bar / d(s, mu, sigma)_lin in columns 0..2.
/// Row 1: d omega_bar / d(s, mu, sigma)_ang in columns 3..5.
Mat26 effectiveControlJacobian(const CommandWindow& window, const RbfParams& params);

/// T^{b,t}_{b,t'} from two IMU poses in the world and the constant extrinsics.
Pose3 relativeBaseMotion(const Pose3& imu_t, const Pose3& imu_t2, const Extrinsics& ext);

/// Heading from the z component of the rotation log, translation from the x, y entries.
PlanarPose planarize(const Pose3& rel);

/// log_se2(P_rel) - dt * xi_bar.
Vec3 residualInverse(const PlanarPose& rel, const Twist2& xi_bar, double dt);

/// (p_rel - p_bar, wrap(theta_rel - omega dt)) with P_bar = se2Exp(xi_bar, dt).
Vec3 residualForward(const PlanarPose& rel, const Twist2& xi_bar, double dt);

enum class MotionModel { Inverse, Forward };

/// Partial derivatives of (x, y, theta) from planarize(relativeBaseMotion(...)) with respect to
/// the error states of the two IMU poses (right rotation perturbation, additive world position),
/// and the extrinsics (right rotation perturbation, additive translation).
/// Columns of every block are ordered (dtheta, dp).
struct PlanarMotionJacobians {
  Mat36 imu_t;
  Mat36 imu_t2;
  Mat36 ext;
};

PlanarMotionJacobians planarMotionJacobians(const Pose3& imu_t, const Pose3& imu_t2,
                                            const Extrinsics& ext);

struct MotionResidualJacobians {
  Mat3 pose;     // w.r.t. a right perturbation of P_rel (ordered x, y, theta)
  Mat36 rbf;     // w.r.t. (s, mu, sigma)_lin, (s, mu, sigma)_ang
  Mat36 imu_t;   // w.r.t. the IMU pose at t
  Mat36 imu_t2;  // w.r.t. the IMU pose at t'
  Mat36 ext;     // w.r.t. the extrinsics
};

struct MotionResidual {
  Vec3 value;
  MotionResidualJacobians jacobians;
};

/// Evaluates the motion residual between two IMU poses and all of its Jacobians.
MotionResidual evaluateMotionResidual(const Pose3& imu_t, const Pose3& imu_t2,
                                      const Extrinsics& ext, const CommandWindow& window,
                                      const RbfParams& params, double dt,
                                      MotionModel model = MotionModel::Inverse);

/// d translation(se2Exp(xi, dt)) / d xi and d theta / d xi, stacked (x, y, theta) rows.
Mat3 se2ExpTwistJacobian(const Twist2& xi, double dt);

}  // namespace planarvio
