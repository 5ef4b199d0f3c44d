#pragma once

#include <Eigen/Core>
#include <span>

#include "planarvio/liegroups.hpp"

namespace planarvio {

using Vec15 = Eigen::Matrix<double, 15, 1>;
using Mat15 = Eigen::Matrix<double, 15, 15>;

/// Error-state block offsets. Block numbers 1..5 follow the same order.
namespace err {
inline constexpr int kTheta = 0;
inline constexpr int kGyroBias = 3;
inline constexpr int kVelocity = 6;
inline constexpr int kAccelBias = 9;
inline constexpr int kPosition = 12;
inline constexpr int kDim = 15;
}  // namespace err

/// IMU navigation state. `orientation` is R^w_i (IMU to world) and `position` is t^w_i.
/// Error state: orientation R Exp(dtheta); everything else additive in the world / IMU frame.
struct VioState {
  Rotation3 orientation;
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Vec3 position = Vec3::Zero();

  Pose3 pose() const { return {orientation, position}; }
  VioState boxplus(const Vec15& delta) const;
  /// Error state e such that other.boxplus(e) == *this.
  Vec15 boxminus(const VioState& other) const;
};

struct ImuSample {
  double stamp = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s, IMU frame
  Vec3 accel = Vec3::Zero();  // specific force, m/s^2, IMU frame
};

struct GravityModel {
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);  // g^w
  static constexpr double kMagnitude = 9.81;
};

class TransitionMatrix {
 public:
  TransitionMatrix() : phi_(Mat15::Identity()) {}
  TransitionMatrix(const Mat15& phi, double t0, double t1) : phi_(phi), t0_(t0), t1_(t1) {}

  const Mat15& matrix() const { return phi_; }
  double startTime() const { return t0_; }
  double endTime() const { return t1_; }
  /// 3x3 block (row, col) with block numbers 1..5 in the error-state order.
  Mat3 block(int row, int col) const { return phi_.block<3, 3>(3 * (row - 1), 3 * (col - 1)); }

  TransitionMatrix operator*(const TransitionMatrix& earlier) const {
    return {phi_ * earlier.phi_, earlier.t0_, t1_};
  }

 private:
  Mat15 phi_;
  double t0_ = 0.0;
  double t1_ = 0.0;
};

struct Propagation {
  VioState state;
  TransitionMatrix transition;
};

/// Midpoint integration over consecutive sample pairs of `samples`; biases are held constant.
VioState propagateState(const VioState& x, std::span<const ImuSample> samples, const GravityModel& g);

/// Jacobian of propagateState's output error state w.r.t. its input error state.
TransitionMatrix transitionMatrix(const VioState& x, std::span<const ImuSample> samples,
                                  const GravityModel& g);

/// Both of the above in one pass.
Propagation propagate(const VioState& x, std::span<const ImuSample> samples, const GravityModel& g);

/// Block-diagonal [Phi 0; 0 I] over the error state followed by `parameter_dim` constant parameters.
Eigen::MatrixXd augment(const TransitionMatrix& phi, int parameter_dim = 15);

}  // namespace planarvio
