#include "planarvio/plane_constraint.hpp"

namespace planarvio {

namespace {
const Vec3 kE3 = Vec3::UnitZ();
}

PlaneParams PlaneParams::fromNormal(const Vec3& normal, double distance) {
  // The shortest-arc rotation n -> e3 has its axis in the xy plane, so its yaw is zero.
  return {Rotation3(Eigen::Quaterniond::FromTwoVectors(normal.normalized(), kE3)), distance};
}

Vec3 PlaneParams::normal() const { return ground_from_world.inverse() * kE3; }

PlaneParams PlaneParams::perturbed(const Vec2& delta_angle, double delta_distance) const {
  const Rotation3 R = so3Exp(Vec3(delta_angle.x(), delta_angle.y(), 0.0)) * ground_from_world;
  return fromNormal(R.inverse() * kE3, distance + delta_distance);
}

PlaneResidual planeResidual(const Pose3& imu, const Extrinsics& ext, const PlaneParams& plane) {
  const Mat3 Rgw = plane.ground_from_world.matrix();
  const Mat3 Rwi = imu.rotation.matrix();
  const Mat3 Rib = ext.base_from_imu.rotation.matrix().transpose();
  const Vec3 up = Rgw * Rwi * Rib * kE3;
  const Vec3 base = imu.translation - Rwi * Rib * ext.base_from_imu.translation;
  return {up.head<2>(), plane.distance + kE3.dot(Rgw * base)};
}

PlaneJacobians planeJacobians(const Pose3& imu, const Extrinsics& ext, const PlaneParams& plane) {
  const Mat3 Rgw = plane.ground_from_world.matrix();
  const Mat3 Rwi = imu.rotation.matrix();
  const Mat3 Rib = ext.base_from_imu.rotation.matrix().transpose();
  const Vec3 base_z = Rib * kE3;                                 // base z axis in the IMU frame
  const Vec3 lever = Rib * ext.base_from_imu.translation;        // R^i_b t^b_i
  const Vec3 up_ground = Rgw * Rwi * base_z;
  const Vec3 base_ground = Rgw * (imu.translation - Rwi * lever);
  const Row3 e3t = kE3.transpose();

  PlaneJacobians J;
  J.r1_imu_rotation = -(hat(up_ground) * Rgw * Rwi).topRows<2>();
  J.r1_plane_rotation = -hat(up_ground).topLeftCorner<2, 2>();
  J.r2_imu_rotation = e3t * Rgw * Rwi * hat(lever);
  J.r2_plane_rotation = -(e3t * hat(base_ground)).leftCols<2>();
  J.r2_imu_position = e3t * Rgw;
  J.r2_distance = 1.0;
  J.r1_ext_rotation = (Rgw * Rwi * hat(base_z)).topRows<2>();
  J.r2_ext_rotation = -e3t * Rgw * Rwi * hat(lever);
  J.r2_ext_translation = -e3t * Rgw * Rwi * Rib;
  return J;
}

}  // namespace planarvio
