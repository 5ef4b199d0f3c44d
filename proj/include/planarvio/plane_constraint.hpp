#pragma once

#include <Eigen/Core>

#include "planarvio/liegroups.hpp"
#include "planarvio/motion_model.hpp"

namespace planarvio {

using Mat23 = Eigen::Matrix<double, 2, 3>;
using Row2 = Eigen::RowVector2d;
using Row3 = Eigen::RowVector3d;

/// Ground plane relative to the world: rotation R^g_w (2 DOF, stored as the zero-yaw
/// representative that takes the ground normal to e3) and the distance d^g_w.
///
/// Orientation perturbations act on the left in the ground frame, Exp((d1, d2, 0)) R^g_w;
/// the ground-frame z rotation does not change the plane.
struct PlaneParams {
  Rotation3 ground_from_world;
  double distance = 0.0;

  /// Canonical parameters for a plane with world-frame unit normal `normal` (ground z axis).
  static PlaneParams fromNormal(const Vec3& normal, double distance);
  Vec3 normal() const;  // ground z axis in the world frame
  /// Applies a left perturbation on the two tangent axes and re-canonicalizes.
  PlaneParams perturbed(const Vec2& delta_angle, double delta_distance) const;
};

struct PlaneResidual {
  Vec2 alignment;   // r1
  double distance;  // r2

  Vec3 stacked() const { return {alignment.x(), alignment.y(), distance}; }
};

struct PlaneResidualWeights {
  double sigma_alignment = 1e-3;
  double sigma_distance = 1e-3;  // m
};

/// r1 = (R^g_w R^w_i (R^b_i)^T e3)_{1,2};  r2 = d + e3^T R^g_w (t^w_i - R^w_i (R^b_i)^T t^b_i).
PlaneResidual planeResidual(const Pose3& imu, const Extrinsics& ext, const PlaneParams& plane);

/// Blocks of the plane-residual Jacobian. IMU orientation uses the right perturbation, IMU position
/// is additive in the world frame, extrinsic rotation is right-perturbed and its translation additive.
struct PlaneJacobians {
  Mat23 r1_imu_rotation;    // tilt rows wrt IMU orientation
  Mat2 r1_plane_rotation;   // tilt rows wrt plane roll/pitch
  Row3 r2_imu_rotation;     // height row wrt IMU orientation
  Row2 r2_plane_rotation;   // height row wrt plane roll/pitch
  Row3 r2_imu_position;     // height row wrt IMU position
  double r2_distance = 1.0; // height row wrt plane distance
  Mat23 r1_ext_rotation;
  Row3 r2_ext_rotation;
  Row3 r2_ext_translation;
};

PlaneJacobians planeJacobians(const Pose3& imu, const Extrinsics& ext, const PlaneParams& plane);

}  // namespace planarvio
