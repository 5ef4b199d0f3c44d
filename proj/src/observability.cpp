#include "planarvio/observability.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace planarvio {

StateLayout::StateLayout(const BlockFlags& flags) : flags_(flags) {
  if (flags.landmarks < 0) throw std::invalid_argument("StateLayout: negative landmark count");
  int next = 15;
  if (flags.plane) {
    plane_angle_ = next;
    plane_distance_ = next + 2;
    next += 3;
  }
  if (flags.extrinsics) {
    ext_rotation_ = next;
    ext_translation_ = next + 3;
    next += 6;
  }
  if (flags.rbf) {
    rbf_linear_ = next;
    rbf_angular_ = next + 3;
    next += 6;
  }
  landmarks_ = next;
  dim_ = next + 3 * flags.landmarks;
}

int StateLayout::landmark(int j) const {
  if (j < 0 || j >= flags_.landmarks) throw std::out_of_range("StateLayout: landmark index");
  return landmarks_ + 3 * j;
}

std::vector<std::string> StateLayout::labels() const {
  std::vector<std::string> out;
  const char* xyz[] = {"_x", "_y", "_z"};
  for (const char* block : {"theta", "bg", "v", "ba", "p"}) {
    for (const char* a : xyz) out.push_back(std::string(block) + a);
  }
  if (flags_.plane) {
    out.insert(out.end(), {"plane_angle_1", "plane_angle_2", "plane_d"});
  }
  if (flags_.extrinsics) {
    for (const char* a : xyz) out.push_back(std::string("ext_theta") + a);
    for (const char* a : xyz) out.push_back(std::string("ext_t") + a);
  }
  if (flags_.rbf) {
    out.insert(out.end(), {"rbf_lin_s", "rbf_lin_mu", "rbf_lin_sigma", "rbf_ang_s", "rbf_ang_mu",
                           "rbf_ang_sigma"});
  }
  for (int j = 0; j < flags_.landmarks; ++j) {
    for (const char* a : xyz) out.push_back("f" + std::to_string(j) + a);
  }
  return out;
}

void chainFrames(LinearizationPoint& point, const VioState& initial, std::span<const ImuSample> samples,
                 std::span<const double> frame_stamps) {
  if (frame_stamps.size() < 2) throw std::invalid_argument("chainFrames: need at least two frames");
  point.stamps.assign(frame_stamps.begin(), frame_stamps.end());
  point.states = {initial};
  point.transitions.clear();
  auto index_of = [&](double t) {
    const auto it = std::lower_bound(samples.begin(), samples.end(), t - 1e-9,
                                     [](const ImuSample& s, double v) { return s.stamp < v; });
    if (it == samples.end() || std::abs(it->stamp - t) > 1e-9) {
      throw std::invalid_argument("chainFrames: frame stamp without a matching IMU sample");
    }
    return static_cast<std::size_t>(it - samples.begin());
  };
  std::size_t begin = index_of(frame_stamps[0]);
  for (std::size_t k = 1; k < frame_stamps.size(); ++k) {
    const std::size_t end = index_of(frame_stamps[k]);
    const Propagation p = propagate(point.states.back(), samples.subspan(begin, end - begin + 1), point.gravity);
    point.states.push_back(p.state);
    point.transitions.push_back(p.transition);
    begin = end;
  }
}

FeatureJacobian featureJacobian(const Pose3& imu, const Vec3& landmark, double baseline) {
  FeatureJacobian out;
  const Mat3 Rt = imu.rotation.matrix().transpose();
  const Vec3 pl = Rt * (landmark - imu.translation);
  const Vec3 pr = pl - Vec3(baseline, 0.0, 0.0);
  out.depth = pl.z();
  if (!(pl.z() > 0.0)) return out;
  out.valid = true;

  auto project = [](const Vec3& p) -> Eigen::Matrix<double, 2, 3> {
    Eigen::Matrix<double, 2, 3> J;
    const double iz = 1.0 / p.z();
    J << iz, 0.0, -p.x() * iz * iz, 0.0, iz, -p.y() * iz * iz;
    return J;
  };
  const auto Jl = project(pl), Jr = project(pr);
  out.value << pl.x() / pl.z(), pl.y() / pl.z(), pr.x() / pr.z(), pr.y() / pr.z();
  const Mat3 dtheta = hat(pl);
  out.rotation << Jl * dtheta, Jr * dtheta;
  out.position << -Jl * Rt, -Jr * Rt;
  out.landmark << Jl * Rt, Jr * Rt;
  return out;
}

std::vector<int> ObservabilityMatrix::rowsOf(const std::string& type) const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
    if (rows[i].type == type) out.push_back(i);
  }
  return out;
}

Eigen::MatrixXd ObservabilityMatrix::select(const std::string& type) const {
  const std::vector<int> idx = rowsOf(type);
  Eigen::MatrixXd out(idx.size(), matrix.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = matrix.row(idx[i]);
  return out;
}

namespace {

// Accumulates labelled rows; VIO columns are premultiplied by the frame's Phi_{k,1}.
class RowBuilder {
 public:
  RowBuilder(const StateLayout& layout, const std::vector<Mat15>& phi) : layout_(layout), phi_(phi) {}

  Eigen::MatrixXd& add(int n, const RowLabel& label) {
    blocks_.push_back(Eigen::MatrixXd::Zero(n, layout_.dim()));
    labels_.insert(labels_.end(), n, label);
    return blocks_.back();
  }

  // Adds H_vio at frame k (columns in the VIO error state) to `rows`.
  void addVio(Eigen::MatrixXd& rows, int k, const Eigen::MatrixXd& H) const {
    rows.leftCols<15>() += H * phi_[k];
  }

  ObservabilityMatrix finish() {
    ObservabilityMatrix out{Eigen::MatrixXd(), std::move(labels_), layout_.labels(), layout_, {}};
    int total = 0;
    for (const auto& b : blocks_) total += static_cast<int>(b.rows());
    out.matrix.resize(total, layout_.dim());
    int r = 0;
    for (const auto& b : blocks_) {
      out.matrix.middleRows(r, b.rows()) = b;
      r += static_cast<int>(b.rows());
    }
    return out;
  }

 private:
  const StateLayout& layout_;
  const std::vector<Mat15>& phi_;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<RowLabel> labels_;
};

// Pose Jacobian columns (dtheta, dp) spread into the 15-dim VIO error state.
Eigen::MatrixXd poseToVio(const Eigen::MatrixXd& dtheta, const Eigen::MatrixXd& dp) {
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dtheta.rows(), 15);
  H.middleCols<3>(err::kTheta) = dtheta;
  H.middleCols<3>(err::kPosition) = dp;
  return H;
}

Vec3 upDirection(const GravityModel& g) { return -g.gravity.normalized(); }

}  // namespace

ObservabilityMatrix buildObservability(const LinearizationPoint& point, const StateLayout& layout,
                                       const MeasurementSelection& measurements, const PriorSelection& priors) {
  if (measurements.empty() && !priors.any()) {
    throw std::invalid_argument("buildObservability: empty measurement selection");
  }
  const int K = static_cast<int>(point.states.size());
  if (K < 2) throw std::invalid_argument("buildObservability: need at least two frames");
  if (static_cast<int>(point.transitions.size()) != K - 1 || static_cast<int>(point.stamps.size()) != K) {
    throw std::invalid_argument("buildObservability: inconsistent frame data");
  }
  if (layout.landmarkCount() > static_cast<int>(point.landmarks.size())) {
    throw std::invalid_argument("buildObservability: layout has more landmarks than the scenario");
  }

  std::vector<Mat15> phi{Mat15::Identity()};
  for (const auto& t : point.transitions) phi.push_back(t.matrix() * phi.back());

  RowBuilder rb(layout, phi);
  std::vector<std::string> warnings;

  if (measurements.plane) {
    for (int k = 0; k < K; ++k) {
      const PlaneJacobians J = planeJacobians(point.states[k].pose(), point.ext, point.plane);
      Eigen::MatrixXd& rows = rb.add(3, {"plane", k, -1});
      Eigen::MatrixXd Hrot(3, 3), Hpos = Eigen::MatrixXd::Zero(3, 3);
      Hrot << J.r1_imu_rotation, J.r2_imu_rotation;
      Hpos.row(2) = J.r2_imu_position;
      rb.addVio(rows, k, poseToVio(Hrot, Hpos));
      if (layout.planeAngle() >= 0) {
        rows.block<2, 2>(0, layout.planeAngle()) = J.r1_plane_rotation;
        rows.block<1, 2>(2, layout.planeAngle()) = J.r2_plane_rotation;
        rows(2, layout.planeDistance()) = J.r2_distance;
      }
      if (layout.extRotation() >= 0) {
        rows.block<2, 3>(0, layout.extRotation()) = J.r1_ext_rotation;
        rows.block<1, 3>(2, layout.extRotation()) = J.r2_ext_rotation;
        rows.block<1, 3>(2, layout.extTranslation()) = J.r2_ext_translation;
      }
    }
  }

  for (const auto model : {MotionModel::Inverse, MotionModel::Forward}) {
    const bool on = model == MotionModel::Inverse ? measurements.motion_inverse : measurements.motion_forward;
    if (!on) continue;
    if (static_cast<int>(point.windows.size()) != K - 1) {
      throw std::invalid_argument("buildObservability: motion rows need one command window per frame pair");
    }
    const std::string type = model == MotionModel::Inverse ? "motion_inverse" : "motion_forward";
    for (int k = 0; k + 1 < K; ++k) {
      const double dt = point.stamps[k + 1] - point.stamps[k];
      const MotionResidual r = evaluateMotionResidual(point.states[k].pose(), point.states[k + 1].pose(),
                                                      point.ext, point.windows[k], point.rbf, dt, model);
      Eigen::MatrixXd& rows = rb.add(3, {type, k, -1});
      const auto& J = r.jacobians;
      rb.addVio(rows, k, poseToVio(J.imu_t.leftCols<3>(), J.imu_t.rightCols<3>()));
      rb.addVio(rows, k + 1, poseToVio(J.imu_t2.leftCols<3>(), J.imu_t2.rightCols<3>()));
      if (layout.extRotation() >= 0) {
        rows.middleCols<3>(layout.extRotation()) = J.ext.leftCols<3>();
        rows.middleCols<3>(layout.extTranslation()) = J.ext.rightCols<3>();
      }
      if (layout.rbfLinear() >= 0) {
        rows.middleCols<3>(layout.rbfLinear()) = J.rbf.leftCols<3>();
        rows.middleCols<3>(layout.rbfAngular()) = J.rbf.rightCols<3>();
      }
    }
  }

  if (measurements.features) {
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < layout.landmarkCount(); ++j) {
        const FeatureJacobian F = featureJacobian(point.states[k].pose(), point.landmarks[j], point.baseline);
        if (!F.valid) {
          warnings.push_back("landmark " + std::to_string(j) + " behind camera at frame " + std::to_string(k) +
                             "; rows skipped");
          continue;
        }
        Eigen::MatrixXd& rows = rb.add(4, {"feature", k, j});
        rb.addVio(rows, k, poseToVio(F.rotation, F.position));
        rows.middleCols<3>(layout.landmark(j)) = F.landmark;
      }
    }
  }

  auto prior_block = [&](const char* name, int col, int n) {
    if (col < 0) {
      warnings.push_back(std::string("prior on absent block ") + name + " ignored");
      return;
    }
    rb.add(n, {std::string("prior_") + name, 0, -1}).middleCols(col, n).setIdentity();
  };
  if (priors.plane_angle) prior_block("plane_angle", layout.planeAngle(), 2);
  if (priors.plane_distance) prior_block("plane_distance", layout.planeDistance(), 1);
  if (priors.extrinsics) prior_block("extrinsics", layout.extRotation(), 6);
  if (priors.rbf) prior_block("rbf", layout.rbfLinear(), 6);
  if (priors.position) prior_block("position", err::kPosition, 3);
  if (priors.yaw) {
    Eigen::MatrixXd& row = rb.add(1, {"prior_yaw", 0, -1});
    row.block<1, 3>(0, err::kTheta) = upDirection(point.gravity).transpose() * point.states[0].orientation.matrix();
  }

  ObservabilityMatrix out = rb.finish();
  out.warnings = std::move(warnings);
  return out;
}

namespace {

// Orientation nullspace column block for world rotations `axes` (3 x n).
Eigen::MatrixXd orientationColumns(const LinearizationPoint& point, const StateLayout& layout, const Eigen::MatrixXd& axes) {
  const VioState& x = point.states.front();
  const Mat3 Rt = x.orientation.matrix().transpose();
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(layout.dim(), axes.cols());
  N.middleRows<3>(err::kTheta) = Rt * axes;
  N.middleRows<3>(err::kVelocity) = -hat(x.velocity) * axes;
  N.middleRows<3>(err::kAccelBias) = Rt * hat(point.gravity.gravity) * axes;
  N.middleRows<3>(err::kPosition) = -hat(x.position) * axes;
  if (layout.planeAngle() >= 0) {
    N.middleRows<2>(layout.planeAngle()) = -(point.plane.ground_from_world.matrix() * axes).topRows<2>();
  }
  for (int j = 0; j < layout.landmarkCount(); ++j) {
    N.middleRows<3>(layout.landmark(j)) = -hat(point.landmarks[j]) * axes;
  }
  return N;
}

}  // namespace

NullspaceBasis analyticOrientationNullspace(const LinearizationPoint& point, const StateLayout& layout) {
  return {"orientation", orientationColumns(point, layout, Mat3::Identity()), NullspaceBasis::Provenance::Analytic, {}};
}

NullspaceBasis analyticYawNullspace(const LinearizationPoint& point, const StateLayout& layout) {
  return {"yaw", orientationColumns(point, layout, upDirection(point.gravity)), NullspaceBasis::Provenance::Analytic, {}};
}

NullspaceBasis analyticTranslationNullspace(const LinearizationPoint& point, const StateLayout& layout) {
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(layout.dim(), 3);
  N.middleRows<3>(err::kPosition).setIdentity();
  if (layout.planeDistance() >= 0) {
    N.row(layout.planeDistance()) = -(point.plane.ground_from_world.matrix().row(2));
  }
  for (int j = 0; j < layout.landmarkCount(); ++j) N.middleRows<3>(layout.landmark(j)).setIdentity();
  return {"translation", N, NullspaceBasis::Provenance::Analytic, {}};
}

NullspaceBasis analyticRbfNullspace(const StateLayout& layout) {
  if (layout.rbfLinear() < 0) throw std::invalid_argument("analyticRbfNullspace: layout has no RBF block");
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(layout.dim(), 3);
  N.middleRows<3>(layout.rbfLinear()).setIdentity();
  return {"rbf", N, NullspaceBasis::Provenance::Analytic, {}};
}

NullspaceBasis planeDistanceDirection(const StateLayout& layout) {
  if (layout.planeDistance() < 0) throw std::invalid_argument("planeDistanceDirection: layout has no plane block");
  Eigen::MatrixXd N = Eigen::MatrixXd::Zero(layout.dim(), 1);
  N(layout.planeDistance(), 0) = 1.0;
  return {"plane_distance", N, NullspaceBasis::Provenance::Analytic, {}};
}

namespace {

struct Svd {
  Eigen::VectorXd singular;  // length = cols, zero-padded
  Eigen::MatrixXd V;
};

Svd fullSvd(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.cols());
  Svd out{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
  if (M.rows() == 0 || n == 0) return out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  out.singular.head(svd.singularValues().size()) = svd.singularValues();
  out.V = svd.matrixV();
  return out;
}

int countAbove(const Eigen::VectorXd& s, double threshold) {
  int r = 0;
  for (int i = 0; i < s.size(); ++i) r += s(i) > threshold ? 1 : 0;
  return r;
}

}  // namespace

NullspaceBasis numericalNullspace(const Eigen::MatrixXd& M, double tol) {
  NullspaceBasis out;
  out.name = "numerical";
  out.provenance = NullspaceBasis::Provenance::Numerical;
  const Svd svd = fullSvd(M);
  const double smax = svd.singular.size() > 0 ? svd.singular.maxCoeff() : 0.0;
  if (!(smax > 0.0)) {
    out.warnings.push_back("all-zero matrix: nullspace is the full space");
    out.basis = Eigen::MatrixXd::Identity(M.cols(), M.cols());
    return out;
  }
  const int rank = countAbove(svd.singular, tol * smax);
  out.basis = svd.V.rightCols(M.cols() - rank);
  return out;
}

namespace {

Eigen::MatrixXd orthonormalBasis(const Eigen::MatrixXd& A) {
  if (A.cols() == 0) return A;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-12);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  return Q.leftCols(qr.rank());
}

}  // namespace

Eigen::VectorXd principalAngles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  Eigen::MatrixXd Qa = orthonormalBasis(A), Qb = orthonormalBasis(B);
  if (Qa.cols() == 0 || Qb.cols() == 0) return Eigen::VectorXd();
  if (Qa.cols() > Qb.cols()) std::swap(Qa, Qb);
  // Cosines for the large angles, sines of the residual for the small ones.
  const Eigen::MatrixXd C = Qb.transpose() * Qa;
  Eigen::VectorXd c = Eigen::JacobiSVD<Eigen::MatrixXd>(C).singularValues();  // descending
  Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(Qa - Qb * C).singularValues();
  std::sort(s.begin(), s.end());
  Eigen::VectorXd angles(c.size());
  for (int i = 0; i < c.size(); ++i) {
    const double ci = std::clamp(c(i), 0.0, 1.0);
    angles(i) = ci * ci < 0.5 ? std::acos(ci) : std::asin(std::clamp(s(i), 0.0, 1.0));
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double maxProjection(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const Eigen::MatrixXd Qb = orthonormalBasis(B);
  double worst = 0.0;
  for (int i = 0; i < A.cols(); ++i) {
    const double n = A.col(i).norm();
    if (n == 0.0) continue;
    const double p = Qb.cols() == 0 ? 0.0 : (Qb.transpose() * A.col(i)).norm() / n;
    worst = std::max(worst, p);
  }
  return worst;
}

Eigen::MatrixXd tiltAxes(const GravityModel& g) {
  const Vec3 u = upDirection(g);
  const Vec3 a = u.unitOrthogonal();
  Eigen::MatrixXd out(3, 2);
  out << a, u.cross(a);
  return out;
}

double orientationContent(const Eigen::MatrixXd& N, const LinearizationPoint& point, const Eigen::MatrixXd& axes) {
  const Eigen::MatrixXd Q = orthonormalBasis(N);
  if (Q.cols() == 0) return 0.0;
  const Eigen::MatrixXd W = axes.transpose() * point.states.front().orientation.matrix() * Q.middleRows<3>(err::kTheta);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(W).singularValues()(0);
}

double normalizedProductResidual(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N) {
  double worst = 0.0;
  for (int j = 0; j < N.cols(); ++j) {
    const double nn = N.col(j).norm();
    if (nn == 0.0) continue;
    const Eigen::VectorXd n = N.col(j) / nn;
    for (int i = 0; i < M.rows(); ++i) {
      const double rn = M.row(i).norm();
      if (rn == 0.0) continue;
      worst = std::max(worst, std::abs(M.row(i).dot(n)) / rn);
    }
  }
  return worst;
}

RankReport rankReport(const Eigen::MatrixXd& M, std::span<const NullspaceBasis> candidates, double tol) {
  RankReport r;
  r.rows = static_cast<int>(M.rows());
  r.columns = static_cast<int>(M.cols());
  r.tolerance = tol;
  const Svd svd = fullSvd(M);
  r.singular_values = svd.singular;
  r.nullspace = numericalNullspace(M, tol);
  r.warnings = r.nullspace.warnings;
  r.nullspace_dim = static_cast<int>(r.nullspace.basis.cols());
  r.rank = r.columns - r.nullspace_dim;
  for (const auto& c : candidates) {
    CandidateResult cr;
    cr.name = c.name;
    cr.columns = static_cast<int>(c.basis.cols());
    cr.residual = normalizedProductResidual(M, c.basis);
    cr.principal_angles = principalAngles(c.basis, r.nullspace.basis);
    // A candidate larger than the nullspace cannot be contained in it.
    if (cr.principal_angles.size() < cr.columns) {
      cr.max_principal_angle = M_PI / 2;
    } else {
      cr.max_principal_angle = cr.principal_angles.size() ? cr.principal_angles.maxCoeff() : 0.0;
    }
    r.candidates.push_back(std::move(cr));
  }
  return r;
}

Eigen::MatrixXd rbfBlock(const ObservabilityMatrix& M) {
  if (M.layout.rbfLinear() < 0) throw std::invalid_argument("rbfBlock: layout has no RBF block");
  std::vector<int> idx = M.rowsOf("motion_inverse");
  const std::vector<int> fwd = M.rowsOf("motion_forward");
  idx.insert(idx.end(), fwd.begin(), fwd.end());
  Eigen::MatrixXd out(idx.size(), 3);
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = M.matrix.block<1, 3>(idx[i], M.layout.rbfLinear());
  return out;
}

}  // namespace planarvio
