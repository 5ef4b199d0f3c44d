#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/SVD>

#include "planarvio/motion_model.hpp"
#include "testing.hpp"

using namespace planarvio;
using planarvio::testing::numericJacobian;
using planarvio::testing::relativeError;
using planarvio::testing::Rng;

namespace {

CommandWindow makeWindow(std::initializer_list<std::array<double, 3>> rows, double t) {
  CommandWindow w;
  w.stamp = t;
  for (const auto& r : rows) w.commands.push_back({r[0], r[1], r[2]});
  return w;
}

CommandWindow randomWindow(Rng& rng, int n = 5) {
  CommandWindow w;
  w.stamp = 1.0;
  double t = 1.0 - 0.1 * (n - 1);
  for (int i = 0; i < n; ++i, t += 0.1) {
    w.commands.push_back({t, rng.uniform(-1.0, 1.0), rng.uniform(-0.5, 0.5)});
  }
  return w;
}

RbfParams randomParams(Rng& rng) {
  return {{rng.uniform(0.5, 1.5), rng.uniform(-0.1, 0.2), rng.uniform(0.05, 0.3)},
          {rng.uniform(0.5, 1.5), rng.uniform(-0.1, 0.2), rng.uniform(0.05, 0.3)}};
}

// Plain 4x4 homogeneous product, independent of Pose3 composition.
Mat4 homogeneous(const Pose3& p) {
  Mat4 T = Mat4::Identity();
  const Eigen::Quaterniond& q = p.rotation.quaternion();
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  T.topLeftCorner<3, 3>() << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  T.topRightCorner<3, 1>() = p.translation;
  return T;
}

Pose3 perturbRight(const Pose3& p, const Eigen::VectorXd& d) {
  return {p.rotation * so3Exp(Vec3(d.head<3>())), p.translation + d.tail<3>()};
}

}  // namespace

TEST(EffectiveControl, ConstantCommandsAreReturned) {
  const auto w = makeWindow({{0.0, 0.5, 0.1}, {0.1, 0.5, 0.1}, {0.2, 0.5, 0.1}}, 0.2);
  const RbfParams p{{1.0, 0.3, 0.07}, {1.0, -0.2, 0.4}};
  EXPECT_LT((effectiveControl(w, p) - Twist2(0.5, 0, 0.1)).norm(), 1e-15);
}

TEST(EffectiveControl, SingleCommandScaled) {
  const auto w = makeWindow({{0.0, 0.5, 0.0}}, 0.3);
  for (double mu : {-1.0, 0.0, 2.0}) {
    RbfParams p;
    p.linear = {2.0, mu, 0.05};
    EXPECT_DOUBLE_EQ(effectiveControl(w, p)(0), 1.0);
  }
}

TEST(EffectiveControl, TwoCommandHandEvaluation) {
  const auto w = makeWindow({{0.0, 0.0, 0.0}, {0.1, 1.0, 0.0}}, 0.1);
  RbfParams p;
  p.linear = {1.0, 0.0, 0.1};
  const double expected = 1.0 / (1.0 + std::exp(-0.5));
  EXPECT_NEAR(effectiveControl(w, p)(0), expected, 1e-15);
  EXPECT_NEAR(expected, 0.6225, 1e-4);
}

TEST(EffectiveControl, EmptyWindowThrows) {
  CommandWindow w;
  EXPECT_THROW(effectiveControl(w, RbfParams{}), std::invalid_argument);
}

TEST(EffectiveControl, FarFromCenterStaysFinite) {
  // Every raw weight underflows without the exponent shift.
  const auto w = makeWindow({{0.0, 1.0, 0.0}, {0.1, 3.0, 0.0}}, 0.1);
  RbfParams p;
  p.linear = {1.0, 50.0, 0.01};
  const double v = effectiveControl(w, p)(0);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 1.0, 1e-12);  // the older command is closer to mu
}

TEST(EffectiveControl, ScaleAndShiftProperties) {
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    CommandWindow w = randomWindow(rng);
    RbfParams p = randomParams(rng);
    const double v = effectiveControl(w, p)(0);
    RbfParams p2 = p;
    p2.linear.scale *= 2.0;
    EXPECT_EQ(effectiveControl(w, p2)(0), 2.0 * v);
    const double c = rng.uniform(-1.0, 1.0);
    for (auto& cmd : w.commands) cmd.v += c;
    EXPECT_NEAR(effectiveControl(w, p)(0), v + p.linear.scale * c, 1e-12);
  }
}

TEST(EffectiveControlJacobian, ConstantWindowHasZeroCenterAndWidthColumns) {
  const auto w = makeWindow({{0.0, 0.7, -0.2}, {0.1, 0.7, -0.2}, {0.2, 0.7, -0.2}, {0.3, 0.7, -0.2}}, 0.3);
  const RbfParams p{{1.1, 0.05, 0.12}, {0.9, 0.0, 0.2}};
  const Mat26 J = effectiveControlJacobian(w, p);
  for (int c : {1, 2, 4, 5}) EXPECT_EQ(J.col(c).norm(), 0.0) << "column " << c;
}

TEST(EffectiveControlJacobian, ScaleColumnIsMeanOverScale) {
  Rng rng(12);
  for (int i = 0; i < 20; ++i) {
    const CommandWindow w = randomWindow(rng);
    const RbfParams p = randomParams(rng);
    const Twist2 xi = effectiveControl(w, p);
    const Mat26 J = effectiveControlJacobian(w, p);
    EXPECT_NEAR(J(0, 0), xi(0) / p.linear.scale, 1e-14);
    EXPECT_NEAR(J(1, 3), xi(2) / p.angular.scale, 1e-14);
  }
}

TEST(EffectiveControlJacobian, MatchesFiniteDifferences) {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const CommandWindow w = randomWindow(rng);
    const Vec6 p0 = randomParams(rng).toVector();
    auto f = [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
      const Twist2 xi = effectiveControl(w, RbfParams::fromVector(p));
      return Vec2(xi(0), xi(2));
    };
    const Eigen::MatrixXd fd = numericJacobian(f, p0, 1e-7);
    EXPECT_LT(relativeError(effectiveControlJacobian(w, RbfParams::fromVector(p0)), fd), 1e-5);
  }
}

TEST(SelectWindow, InclusiveBoundaryAndTruncation) {
  std::vector<ControlCommand> cmds;
  for (int i = 0; i < 10; ++i) cmds.push_back({0.1 * i, double(i), 0.0});
  const auto sel = selectWindow(cmds, 0.5, 5);
  EXPECT_FALSE(sel.truncated);
  ASSERT_EQ(sel.window.commands.size(), 5u);
  EXPECT_EQ(sel.window.commands.back().v, 5.0);  // tau == t is included
  EXPECT_EQ(sel.window.commands.front().v, 1.0);
  const auto early = selectWindow(cmds, 0.15, 5);
  EXPECT_TRUE(early.truncated);
  EXPECT_EQ(early.window.commands.size(), 2u);
}

TEST(RelativeBaseMotion, Cases) {
  Rng rng(14);
  const Extrinsics ext{rng.pose()};
  const Pose3 T = rng.pose();
  EXPECT_LT((relativeBaseMotion(T, T, ext).matrix() - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  const Pose3 T2{Rotation3::identity(), Vec3(1, 0, 0)};
  EXPECT_LT((relativeBaseMotion(Pose3::identity(), T2, Extrinsics{}).translation - Vec3(1, 0, 0)).norm(), 1e-15);
}

TEST(RelativeBaseMotion, MatchesHomogeneousProduct) {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Pose3 a = rng.pose(), b = rng.pose();
    const Extrinsics ext{rng.pose(0.5)};
    const Mat4 E = homogeneous(ext.base_from_imu);
    const Mat4 oracle = E * homogeneous(a).inverse() * homogeneous(b) * E.inverse();
    EXPECT_LT((relativeBaseMotion(a, b, ext).matrix() - oracle).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Planarize, Cases) {
  const PlanarPose id = planarize(Pose3::identity());
  EXPECT_EQ(id.theta, 0.0);
  EXPECT_EQ(id.translation, Vec2::Zero());
  const PlanarPose p = planarize({so3Exp(Vec3(0, 0, 0.3)), Vec3(1, 2, 5)});
  EXPECT_NEAR(p.theta, 0.3, 1e-15);
  EXPECT_EQ(p.translation, Vec2(1, 2));
}

TEST(Planarize, HeadingIsLogComponentNotEulerYaw) {
  // Roll 0.01 applied after a yaw of 0.4: the log z component and the Euler yaw differ.
  const Mat3 R = Eigen::AngleAxisd(0.4, Vec3::UnitZ()).toRotationMatrix() *
                 Eigen::AngleAxisd(0.01, Vec3::UnitX()).toRotationMatrix();
  const Eigen::AngleAxisd aa(R);
  const double oracle = (aa.angle() * aa.axis()).z();
  const double euler_yaw = std::atan2(R(1, 0), R(0, 0));
  const double theta = planarize({Rotation3::fromMatrix(R), Vec3::Zero()}).theta;
  EXPECT_NEAR(theta, oracle, 1e-12);
  EXPECT_GT(std::abs(theta - euler_yaw), 1e-6);
}

TEST(Residuals, ExactFitIsZero) {
  const Twist2 xi(0.8, 0.0, 0.3);
  const PlanarPose P = se2Exp(xi, 0.5);
  EXPECT_LT(residualInverse(P, xi, 0.5).norm(), 1e-12);
  EXPECT_LT(residualForward(P, xi, 0.5).norm(), 1e-12);
}

TEST(Residuals, SimpleValues) {
  EXPECT_LT((residualInverse(PlanarPose(0.0, 0.1, 0.0), Twist2::Zero(), 1.0) - Vec3(0.1, 0, 0)).norm(), 1e-15);
  EXPECT_LT((residualForward(PlanarPose(0.0, 2.0, 0.0), Twist2(1, 0, 0), 1.0) - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_THROW(residualInverse(PlanarPose(), Twist2::Zero(), 0.0), std::invalid_argument);
  EXPECT_THROW(residualForward(PlanarPose(), Twist2::Zero(), -1.0), std::invalid_argument);
}

TEST(Residuals, InverseMatchesLogOracle) {
  Rng rng(16);
  for (int i = 0; i < 50; ++i) {
    const PlanarPose P(rng.uniform(-2.5, 2.5), rng.uniform(-2, 2), rng.uniform(-2, 2));
    const Twist2 xi(rng.uniform(-1, 1), 0.0, rng.uniform(-1, 1));
    const double dt = rng.uniform(0.05, 0.5);
    // Oracle: matrix log through the 3x3 homogeneous form.
    const Mat3 M = P.matrix();
    const double th = std::atan2(M(1, 0), M(0, 0));
    Mat2 V;
    V << std::sin(th) / th, -(1 - std::cos(th)) / th, (1 - std::cos(th)) / th, std::sin(th) / th;
    const Vec2 rho = V.inverse() * M.topRightCorner<2, 1>();
    const Vec3 oracle = Vec3(rho.x(), rho.y(), th) - dt * xi;
    EXPECT_LT((residualInverse(P, xi, dt) - oracle).norm(), 1e-12);
  }
}

TEST(Residuals, ForwardAndInverseShareZeros) {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const Twist2 xi(rng.uniform(-1, 1), 0.0, rng.uniform(-1, 1));
    const double dt = rng.uniform(0.05, 1.0);
    const PlanarPose P = se2Exp(xi, dt);
    EXPECT_LT(residualInverse(P, xi, dt).norm(), 1e-12);
    EXPECT_LT(residualForward(P, xi, dt).norm(), 1e-12);
    const PlanarPose Q(P.theta + 0.01, P.translation + Vec2(0.01, 0.0));
    EXPECT_GT(residualInverse(Q, xi, dt).norm(), 1e-4);
    EXPECT_GT(residualForward(Q, xi, dt).norm(), 1e-4);
  }
}

TEST(MotionJacobians, IdentityPoseBlock) {
  const auto w = makeWindow({{0.0, 0.0, 0.0}}, 0.0);
  const MotionResidual r =
      evaluateMotionResidual(Pose3::identity(), Pose3::identity(), Extrinsics{}, w, RbfParams{}, 0.1);
  EXPECT_LT((r.jacobians.pose - Mat3::Identity()).norm(), 1e-15);
}

TEST(MotionJacobians, ConstantWindowRbfColumnsVanish) {
  Rng rng(18);
  const auto w = makeWindow({{0.0, 0.4, 0.1}, {0.1, 0.4, 0.1}, {0.2, 0.4, 0.1}}, 0.2);
  for (auto model : {MotionModel::Inverse, MotionModel::Forward}) {
    const MotionResidual r = evaluateMotionResidual(rng.pose(0.3), rng.pose(0.3), Extrinsics{rng.pose(0.2)},
                                                    w, randomParams(rng), 0.1, model);
    for (int c : {1, 2, 4, 5}) EXPECT_EQ(r.jacobians.rbf.col(c).norm(), 0.0);
  }
}

namespace {

// Near-planar random configuration so the relative heading stays away from a half turn.
struct MotionCase {
  Pose3 a, b;
  Extrinsics ext;
  CommandWindow window;
  RbfParams params;
  double dt;
};

MotionCase randomCase(Rng& rng) {
  MotionCase c;
  const Rotation3 tilt = so3Exp(rng.vec3(-0.2, 0.2));
  c.ext.base_from_imu = {so3Exp(rng.vec3(-0.3, 0.3)), rng.vec3(-0.3, 0.3)};
  c.a = {so3Exp(Vec3(0, 0, rng.uniform(-3, 3))) * tilt, rng.vec3(-2, 2)};
  c.b = {c.a.rotation * so3Exp(Vec3(rng.normal(0.05), rng.normal(0.05), rng.uniform(-1.0, 1.0))),
         c.a.translation + rng.vec3(-0.5, 0.5)};
  c.window = randomWindow(rng);
  c.params = randomParams(rng);
  c.dt = rng.uniform(0.05, 0.3);
  return c;
}

}  // namespace

TEST(MotionJacobians, MatchFiniteDifferences) {
  Rng rng(19);
  for (auto model : {MotionModel::Inverse, MotionModel::Forward}) {
    for (int i = 0; i < 100; ++i) {
      const MotionCase c = randomCase(rng);
      const MotionResidual r = evaluateMotionResidual(c.a, c.b, c.ext, c.window, c.params, c.dt, model);
      auto eval = [&](const Pose3& a, const Pose3& b, const Extrinsics& e, const RbfParams& p) {
        return evaluateMotionResidual(a, b, e, c.window, p, c.dt, model).value;
      };
      const Eigen::VectorXd z6 = Eigen::VectorXd::Zero(6);
      const auto Ja = numericJacobian(
          [&](const Eigen::VectorXd& d) -> Eigen::VectorXd { return eval(perturbRight(c.a, d), c.b, c.ext, c.params); }, z6);
      const auto Jb = numericJacobian(
          [&](const Eigen::VectorXd& d) -> Eigen::VectorXd { return eval(c.a, perturbRight(c.b, d), c.ext, c.params); }, z6);
      const auto Je = numericJacobian(
          [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
            return eval(c.a, c.b, Extrinsics{perturbRight(c.ext.base_from_imu, d)}, c.params);
          },
          z6);
      const auto Jp = numericJacobian(
          [&](const Eigen::VectorXd& p) -> Eigen::VectorXd {
            return eval(c.a, c.b, c.ext, RbfParams::fromVector(p));
          },
          c.params.toVector(), 1e-7);
      EXPECT_LT(relativeError(r.jacobians.imu_t, Ja), 1e-5);
      EXPECT_LT(relativeError(r.jacobians.imu_t2, Jb), 1e-5);
      EXPECT_LT(relativeError(r.jacobians.ext, Je), 1e-5);
      EXPECT_LT(relativeError(r.jacobians.rbf, Jp), 1e-5);

      // Pose block: right perturbation of P_rel in (x, y, theta) twist coordinates.
      const PlanarPose rel = planarize(relativeBaseMotion(c.a, c.b, c.ext));
      const Twist2 xi = effectiveControl(c.window, c.params);
      const auto Jpose = numericJacobian(
          [&](const Eigen::VectorXd& d) -> Eigen::VectorXd {
            const PlanarPose q = rel * se2Exp(Twist2(d), 1.0);
            return model == MotionModel::Inverse ? residualInverse(q, xi, c.dt) : residualForward(q, xi, c.dt);
          },
          Eigen::VectorXd::Zero(3));
      EXPECT_LT(relativeError(r.jacobians.pose, Jpose), 1e-5);
    }
  }
}

TEST(MotionJacobians, ForwardAndInverseHaveEqualRankAtZero) {
  Rng rng(20);
  for (int i = 0; i < 50; ++i) {
    MotionCase c = randomCase(rng);
    // Move the second pose onto the model prediction so both residuals vanish.
    const Twist2 xi = effectiveControl(c.window, c.params);
    const PlanarPose target = se2Exp(xi, c.dt);
    Pose3 rel_base{so3Exp(Vec3(0, 0, target.theta)), Vec3(target.translation.x(), target.translation.y(), 0)};
    c.b = c.a * c.ext.base_from_imu.inverse() * rel_base * c.ext.base_from_imu;
    const auto inv = evaluateMotionResidual(c.a, c.b, c.ext, c.window, c.params, c.dt, MotionModel::Inverse);
    const auto fwd = evaluateMotionResidual(c.a, c.b, c.ext, c.window, c.params, c.dt, MotionModel::Forward);
    EXPECT_LT(inv.value.norm(), 1e-10);
    EXPECT_LT(fwd.value.norm(), 1e-10);
    Eigen::MatrixXd Hi(3, 24), Hf(3, 24);
    Hi << inv.jacobians.imu_t, inv.jacobians.imu_t2, inv.jacobians.ext, inv.jacobians.rbf;
    Hf << fwd.jacobians.imu_t, fwd.jacobians.imu_t2, fwd.jacobians.ext, fwd.jacobians.rbf;
    Eigen::JacobiSVD<Eigen::MatrixXd> si(Hi), sf(Hf);
    si.setThreshold(1e-10);
    sf.setThreshold(1e-10);
    EXPECT_EQ(si.rank(), sf.rank());
    // The pose blocks are related by an invertible left factor.
    const Mat3 L = inv.jacobians.pose * fwd.jacobians.pose.inverse();
    EXPECT_LT((L * Hf - Hi).cwiseAbs().maxCoeff(), 1e-9);
  }
}
