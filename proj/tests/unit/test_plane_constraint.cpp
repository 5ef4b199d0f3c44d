#include <gtest/gtest.h>

#include <cmath>

#include "planarvio/plane_constraint.hpp"
#include "testing.hpp"

using namespace planarvio;
using planarvio::testing::numericJacobian;
using planarvio::testing::relativeError;
using planarvio::testing::Rng;

namespace {

Eigen::VectorXd stacked(const PlaneResidual& r) { return r.stacked(); }

Pose3 perturbRight(const Pose3& p, const Vec3& dtheta, const Vec3& dt) {
  return {p.rotation * so3Exp(dtheta), p.translation + dt};
}

}  // namespace

TEST(PlaneParams, CanonicalYawIsZero) {
  Rng rng(30);
  for (int i = 0; i < 100; ++i) {
    const Vec3 n = rng.vec3(-1, 1).normalized();
    if (n.z() < -0.99) continue;  // shortest arc is ill-defined near the antipode
    const PlaneParams p = PlaneParams::fromNormal(n, 1.0);
    EXPECT_LT(std::abs(so3Log(p.ground_from_world).z()), 1e-9);
    EXPECT_LT((p.normal() - n).norm(), 1e-12);
    const PlaneParams q = p.perturbed(Vec2(rng.normal(0.1), rng.normal(0.1)), 0.2);
    EXPECT_LT(std::abs(so3Log(q.ground_from_world).z()), 1e-9);
    EXPECT_DOUBLE_EQ(q.distance, 1.2);
  }
}

TEST(PlaneResidual, AlignedZeroCase) {
  const PlaneResidual r = planeResidual(Pose3::identity(), Extrinsics{}, PlaneParams{});
  EXPECT_EQ(r.alignment, Vec2::Zero());
  EXPECT_EQ(r.distance, 0.0);
}

TEST(PlaneResidual, DistanceCancelsHeight) {
  const Pose3 imu{Rotation3::identity(), Vec3(0, 0, -2)};
  PlaneParams plane;
  plane.distance = 2.0;
  EXPECT_EQ(planeResidual(imu, Extrinsics{}, plane).distance, 0.0);
}

TEST(PlaneResidual, PitchedImu) {
  const Pose3 imu{so3Exp(Vec3(0, 0.1, 0)), Vec3::Zero()};
  // Oracle: explicit pitch matrix applied to e3.
  Mat3 Ry;
  Ry << std::cos(0.1), 0, std::sin(0.1), 0, 1, 0, -std::sin(0.1), 0, std::cos(0.1);
  const Vec3 up = Ry * Vec3::UnitZ();
  const PlaneResidual r = planeResidual(imu, Extrinsics{}, PlaneParams{});
  EXPECT_LT((r.alignment - up.head<2>()).norm(), 1e-15);
  EXPECT_NEAR(r.alignment.x(), std::sin(0.1), 1e-15);
}

TEST(PlaneJacobians, ConstantBlocks) {
  const PlaneJacobians J = planeJacobians(Pose3::identity(), Extrinsics{}, PlaneParams{});
  EXPECT_EQ(J.r2_distance, 1.0);
  EXPECT_EQ(J.r2_imu_position, Row3(0, 0, 1));
}

TEST(PlaneJacobians, MatchFiniteDifferences) {
  Rng rng(31);
  for (int i = 0; i < 200; ++i) {
    const Pose3 imu = rng.pose(3.0);
    const Extrinsics ext{rng.pose(0.5)};
    const PlaneParams plane = PlaneParams::fromNormal(
        (Vec3::UnitZ() + rng.vec3(-0.3, 0.3)).normalized(), rng.uniform(-2, 2));
    const PlaneJacobians J = planeJacobians(imu, ext, plane);
    const Eigen::VectorXd z3 = Eigen::VectorXd::Zero(3), z2 = Eigen::VectorXd::Zero(2);

    const auto Jrot = numericJacobian(
        [&](const Eigen::VectorXd& d) { return stacked(planeResidual(perturbRight(imu, d, Vec3::Zero()), ext, plane)); }, z3);
    const auto Jpos = numericJacobian(
        [&](const Eigen::VectorXd& d) { return stacked(planeResidual(perturbRight(imu, Vec3::Zero(), d), ext, plane)); }, z3);
    // Raw left perturbation; re-canonicalization is checked separately below.
    const auto Jplane = numericJacobian(
        [&](const Eigen::VectorXd& d) {
          const PlaneParams raw{so3Exp(Vec3(d(0), d(1), 0.0)) * plane.ground_from_world, plane.distance};
          return stacked(planeResidual(imu, ext, raw));
        },
        z2);
    const auto Jd = numericJacobian(
        [&](const Eigen::VectorXd& d) { return stacked(planeResidual(imu, ext, plane.perturbed(Vec2::Zero(), d(0)))); },
        Eigen::VectorXd::Zero(1));
    const auto Jext_rot = numericJacobian(
        [&](const Eigen::VectorXd& d) {
          return stacked(planeResidual(imu, Extrinsics{perturbRight(ext.base_from_imu, d, Vec3::Zero())}, plane));
        },
        z3);
    const auto Jext_pos = numericJacobian(
        [&](const Eigen::VectorXd& d) {
          return stacked(planeResidual(imu, Extrinsics{perturbRight(ext.base_from_imu, Vec3::Zero(), d)}, plane));
        },
        z3);

    EXPECT_LT(relativeError(J.r1_imu_rotation, Jrot.topRows(2)), 1e-5);
    EXPECT_LT(relativeError(J.r2_imu_rotation, Jrot.bottomRows(1)), 1e-5);
    EXPECT_LT(Jpos.topRows(2).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(relativeError(J.r2_imu_position, Jpos.bottomRows(1)), 1e-5);
    EXPECT_LT(relativeError(J.r1_plane_rotation, Jplane.topRows(2)), 1e-5);
    EXPECT_LT(relativeError(J.r2_plane_rotation, Jplane.bottomRows(1)), 1e-5);
    EXPECT_LT(Jd.topRows(2).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(Jd(2, 0), J.r2_distance, 1e-8);
    EXPECT_LT(relativeError(J.r1_ext_rotation, Jext_rot.topRows(2)), 1e-5);
    EXPECT_LT(relativeError(J.r2_ext_rotation, Jext_rot.bottomRows(1)), 1e-5);
    EXPECT_LT(Jext_pos.topRows(2).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT(relativeError(J.r2_ext_translation, Jext_pos.bottomRows(1)), 1e-5);
  }
}

TEST(PlaneResidual, DistanceInvariantUnderYawAboutNormal) {
  Rng rng(32);
  for (int i = 0; i < 50; ++i) {
    const Vec3 n = (Vec3::UnitZ() + rng.vec3(-0.2, 0.2)).normalized();
    const PlaneParams plane = PlaneParams::fromNormal(n, 0.7);
    Extrinsics ext{{so3Exp(rng.vec3(-0.3, 0.3)), Vec3::Zero()}};
    ext.base_from_imu.translation = Vec3(0, 0, rng.uniform(-0.5, 0.5));  // along base z
    const Pose3 imu = rng.pose(2.0);
    const double psi = rng.uniform(-3, 3);
    const Rotation3 yaw = so3Exp(psi * n);
    const Pose3 turned{yaw * imu.rotation, imu.translation};
    EXPECT_NEAR(planeResidual(turned, ext, plane).distance, planeResidual(imu, ext, plane).distance, 1e-12);
  }
}

TEST(PlaneParams, CanonicalizationOnlyRotatesAlignmentResidual) {
  Rng rng(33);
  for (int i = 0; i < 100; ++i) {
    const Pose3 imu = rng.pose(2.0);
    const Extrinsics ext{rng.pose(0.5)};
    const PlaneParams plane = PlaneParams::fromNormal((Vec3::UnitZ() + rng.vec3(-0.3, 0.3)).normalized(), 0.4);
    const Vec2 d(rng.normal(0.1), rng.normal(0.1));
    const PlaneParams raw{so3Exp(Vec3(d.x(), d.y(), 0.0)) * plane.ground_from_world, plane.distance};
    const PlaneResidual a = planeResidual(imu, ext, raw);
    const PlaneResidual b = planeResidual(imu, ext, plane.perturbed(d, 0.0));
    EXPECT_NEAR(a.alignment.norm(), b.alignment.norm(), 1e-12);
    EXPECT_NEAR(a.distance, b.distance, 1e-12);
  }
}
