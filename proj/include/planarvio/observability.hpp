#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "planarvio/motion_model.hpp"
#include "planarvio/plane_constraint.hpp"
#include "planarvio/propagation.hpp"

namespace planarvio {

using Mat43 = Eigen::Matrix<double, 4, 3>;
using Vec4 = Eigen::Vector4d;

/// Which parameter blocks are part of the augmented error state. Absent blocks are treated as known.
struct BlockFlags {
  bool plane = true;
  bool extrinsics = true;
  bool rbf = true;
  int landmarks = 0;
};

/// Column layout: VIO 15, plane angle 2, plane distance 1, extrinsic rotation 3, extrinsic
/// translation 3, RBF linear 3, RBF angular 3, landmarks 3 each. Offsets of absent blocks are -1.
class StateLayout {
 public:
  explicit StateLayout(const BlockFlags& flags = {});

  int dim() const { return dim_; }
  const BlockFlags& flags() const { return flags_; }
  int vio() const { return 0; }
  int planeAngle() const { return plane_angle_; }
  int planeDistance() const { return plane_distance_; }
  int extRotation() const { return ext_rotation_; }
  int extTranslation() const { return ext_translation_; }
  int rbfLinear() const { return rbf_linear_; }
  int rbfAngular() const { return rbf_angular_; }
  int landmark(int j) const;
  int landmarkCount() const { return flags_.landmarks; }
  /// One label per column, e.g. "theta_x", "plane_d", "rbf_lin_mu", "f3_z".
  std::vector<std::string> labels() const;

 private:
  BlockFlags flags_;
  int plane_angle_ = -1, plane_distance_ = -1, ext_rotation_ = -1, ext_translation_ = -1;
  int rbf_linear_ = -1, rbf_angular_ = -1, landmarks_ = -1, dim_ = 15;
};

/// Augmented linearization point over K frames. `transitions[k]` maps frame k to k + 1 and
/// `windows[k]` feeds the motion residual between frames k and k + 1 (query time stamps[k + 1]).
struct LinearizationPoint {
  std::vector<double> stamps;
  std::vector<VioState> states;
  std::vector<TransitionMatrix> transitions;
  std::vector<CommandWindow> windows;
  PlaneParams plane;
  Extrinsics ext;
  RbfParams rbf;
  std::vector<Vec3> landmarks;
  double baseline = 0.12;  // stereo baseline along camera x, m
  GravityModel gravity;
};

/// Propagates `initial` through `samples` and cuts the result at `frame_stamps`, each of which must
/// coincide with a sample stamp. Fills stamps, states and transitions.
void chainFrames(LinearizationPoint& point, const VioState& initial, std::span<const ImuSample> samples,
                 std::span<const double> frame_stamps);

/// Stereo projection of a world point into the camera rig (camera frame = IMU frame, z forward,
/// right camera offset by `baseline` along x). Values are normalized image coordinates
/// (u_l, v_l, u_r, v_r).
struct FeatureJacobian {
  Vec4 value = Vec4::Zero();
  Mat43 rotation = Mat43::Zero();  // right perturbation of R^w_i
  Mat43 position = Mat43::Zero();  // t^w_i
  Mat43 landmark = Mat43::Zero();  // f^w
  double depth = 0.0;
  bool valid = false;  // false for non-positive depth
};

FeatureJacobian featureJacobian(const Pose3& imu, const Vec3& landmark, double baseline);

struct MeasurementSelection {
  bool plane = false;
  bool motion_inverse = false;
  bool motion_forward = false;
  bool features = false;

  bool empty() const { return !(plane || motion_inverse || motion_forward || features); }
};

/// Priors enter as rows on the first-frame state or on the constant parameters.
struct PriorSelection {
  bool plane_angle = false;
  bool plane_distance = false;
  bool position = false;    // first-frame t^w_i
  bool yaw = false;         // first-frame rotation about gravity
  bool extrinsics = false;
  bool rbf = false;

  bool any() const { return plane_angle || plane_distance || position || yaw || extrinsics || rbf; }
};

struct RowLabel {
  std::string type;  // "plane", "motion_inverse", "motion_forward", "feature", "prior_*"
  int step = 0;      // frame index (0-based), pair start for motion rows
  int index = -1;    // landmark id for feature rows
};

struct ObservabilityMatrix {
  Eigen::MatrixXd matrix;
  std::vector<RowLabel> rows;
  std::vector<std::string> columns;
  StateLayout layout;
  std::vector<std::string> warnings;

  /// Row indices whose label type equals `type`.
  std::vector<int> rowsOf(const std::string& type) const;
  Eigen::MatrixXd select(const std::string& type) const;
};

/// Rows H_k Phi_bar_{k,1} for every selected measurement and frame.
ObservabilityMatrix buildObservability(const LinearizationPoint& point, const StateLayout& layout,
                                       const MeasurementSelection& measurements,
                                       const PriorSelection& priors = {});

struct NullspaceBasis {
  enum class Provenance { Analytic, Numerical };
  std::string name;
  Eigen::MatrixXd basis;
  Provenance provenance = Provenance::Analytic;
  std::vector<std::string> warnings;
};

/// Global-orientation directions: one column per world rotation axis.
NullspaceBasis analyticOrientationNullspace(const LinearizationPoint& point, const StateLayout& layout);
/// Global-translation directions.
NullspaceBasis analyticTranslationNullspace(const LinearizationPoint& point, const StateLayout& layout);
/// Rotation about gravity through the world origin (the yaw column of the orientation nullspace).
NullspaceBasis analyticYawNullspace(const LinearizationPoint& point, const StateLayout& layout);
/// Identity on the linear-channel RBF coordinates.
NullspaceBasis analyticRbfNullspace(const StateLayout& layout);
/// Unit vector on the plane distance.
NullspaceBasis planeDistanceDirection(const StateLayout& layout);

/// Right singular vectors with singular value < tol * sigma_max.
NullspaceBasis numericalNullspace(const Eigen::MatrixXd& M, double tol = 1e-8);

/// Principal angles (radians, ascending) between the column spans of A and B.
Eigen::VectorXd principalAngles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Largest |P_B a| / |a| over the columns a of A, P_B the orthogonal projector onto span(B).
double maxProjection(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

/// Two world axes orthogonal to gravity (3 x 2, orthonormal): the roll/pitch directions.
Eigen::MatrixXd tiltAxes(const GravityModel& g);

/// Largest world-frame rotation about `axes` (3 x n) carried by a unit vector of span(N):
/// the spectral norm of axes^T R_1 dtheta(Q), Q an orthonormal basis of span(N).
double orientationContent(const Eigen::MatrixXd& N, const LinearizationPoint& point, const Eigen::MatrixXd& axes);

/// Max |M n| with rows of M normalized to unit length and columns of N normalized to unit length.
double normalizedProductResidual(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N);

struct CandidateResult {
  std::string name;
  int columns = 0;
  double residual = 0.0;                // normalizedProductResidual
  Eigen::VectorXd principal_angles;     // against the numerical nullspace
  double max_principal_angle = 0.0;
};

struct RankReport {
  int rows = 0;
  int columns = 0;
  int rank = 0;
  int nullspace_dim = 0;
  double tolerance = 1e-8;
  Eigen::VectorXd singular_values;
  NullspaceBasis nullspace;
  std::vector<CandidateResult> candidates;
  std::vector<std::string> warnings;
};

RankReport rankReport(const Eigen::MatrixXd& M, std::span<const NullspaceBasis> candidates, double tol = 1e-8);

/// Motion rows restricted to the linear-channel RBF columns (M times N_rbf).
Eigen::MatrixXd rbfBlock(const ObservabilityMatrix& M);

}  // namespace planarvio
