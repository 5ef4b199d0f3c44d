#include "planarvio/propagation.hpp"

#include <stdexcept>

namespace planarvio {

VioState VioState::boxplus(const Vec15& d) const {
  VioState out = *this;
  out.orientation = orientation * so3Exp(d.segment<3>(err::kTheta));
  out.gyro_bias += d.segment<3>(err::kGyroBias);
  out.velocity += d.segment<3>(err::kVelocity);
  out.accel_bias += d.segment<3>(err::kAccelBias);
  out.position += d.segment<3>(err::kPosition);
  return out;
}

Vec15 VioState::boxminus(const VioState& other) const {
  Vec15 d;
  d.segment<3>(err::kTheta) = so3Log(other.orientation.inverse() * orientation);
  d.segment<3>(err::kGyroBias) = gyro_bias - other.gyro_bias;
  d.segment<3>(err::kVelocity) = velocity - other.velocity;
  d.segment<3>(err::kAccelBias) = accel_bias - other.accel_bias;
  d.segment<3>(err::kPosition) = position - other.position;
  return d;
}

namespace {

// One midpoint step between samples a and b; optionally accumulates the step Jacobian into phi.
void midpointStep(VioState& x, const ImuSample& a, const ImuSample& b, const GravityModel& g,
                  Mat15* phi) {
  const double h = b.stamp - a.stamp;
  if (!(h > 0.0)) throw std::invalid_argument("IMU samples must have strictly increasing stamps");
  const Vec3 w = 0.5 * (a.gyro + b.gyro) - x.gyro_bias;
  const Rotation3 dR = so3Exp(w * h);
  const Mat3 R0 = x.orientation.matrix();
  const Rotation3 next = x.orientation * dR;
  const Mat3 R1 = next.matrix();
  const Vec3 f0 = a.accel - x.accel_bias;
  const Vec3 f1 = b.accel - x.accel_bias;
  const Vec3 acc = 0.5 * (R0 * f0 + R1 * f1) + g.gravity;

  if (phi != nullptr) {
    using namespace err;
    const Mat3 I = Mat3::Identity();
    const Mat3 Et = dR.matrix().transpose();
    const Mat3 Jr = so3RightJacobian(w * h) * h;

    // d(next theta) / d(theta, bg)
    Mat15 F = Mat15::Identity();
    F.block<3, 3>(kTheta, kTheta) = Et;
    F.block<3, 3>(kTheta, kGyroBias) = -Jr;

    // d(acc) / d(theta, bg, ba)
    const Mat3 dacc_theta = -0.5 * (R0 * hat(f0) + R1 * hat(f1) * Et);
    const Mat3 dacc_bg = 0.5 * R1 * hat(f1) * Jr;
    const Mat3 dacc_ba = -0.5 * (R0 + R1);

    F.block<3, 3>(kVelocity, kTheta) = h * dacc_theta;
    F.block<3, 3>(kVelocity, kGyroBias) = h * dacc_bg;
    F.block<3, 3>(kVelocity, kAccelBias) = h * dacc_ba;

    const double hh = 0.5 * h * h;
    F.block<3, 3>(kPosition, kTheta) = hh * dacc_theta;
    F.block<3, 3>(kPosition, kGyroBias) = hh * dacc_bg;
    F.block<3, 3>(kPosition, kVelocity) = h * I;
    F.block<3, 3>(kPosition, kAccelBias) = hh * dacc_ba;
    *phi = F * (*phi);
  }

  x.position += x.velocity * h + 0.5 * h * h * acc;
  x.velocity += acc * h;
  x.orientation = next;
}

Propagation run(const VioState& x, std::span<const ImuSample> samples, const GravityModel& g,
                bool with_transition) {
  if (samples.empty()) throw std::invalid_argument("propagate: empty IMU sample stream");
  Propagation out{x, {}};
  Mat15 phi = Mat15::Identity();
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    midpointStep(out.state, samples[i], samples[i + 1], g, with_transition ? &phi : nullptr);
  }
  out.transition = TransitionMatrix(phi, samples.front().stamp, samples.back().stamp);
  return out;
}

}  // namespace

VioState propagateState(const VioState& x, std::span<const ImuSample> samples, const GravityModel& g) {
  return run(x, samples, g, false).state;
}

TransitionMatrix transitionMatrix(const VioState& x, std::span<const ImuSample> samples,
                                  const GravityModel& g) {
  return run(x, samples, g, true).transition;
}

Propagation propagate(const VioState& x, std::span<const ImuSample> samples, const GravityModel& g) {
  return run(x, samples, g, true);
}

Eigen::MatrixXd augment(const TransitionMatrix& phi, int parameter_dim) {
  const int n = err::kDim + parameter_dim;
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
  out.topLeftCorner<err::kDim, err::kDim>() = phi.matrix();
  return out;
}

}  // namespace planarvio
