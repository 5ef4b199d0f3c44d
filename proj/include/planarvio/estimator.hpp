#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "planarvio/motion_model.hpp"
#include "planarvio/plane_constraint.hpp"
#include "planarvio/propagation.hpp"
#include "planarvio/simulator.hpp"

namespace planarvio {

/// Residual groups that can be switched off as a whole.
struct ResidualToggles {
  bool imu = true;
  bool stereo = true;
  bool motion = true;
  bool plane = true;
};

/// Standard deviations of the measurement terms. IMU-term sigmas are per frame interval.
struct TermWeights {
  double imu_rotation = 3e-4;     // rad
  double imu_velocity = 3e-3;     // m/s
  double imu_position = 2e-4;     // m
  double gyro_bias_walk = 1e-4;   // rad/s per interval
  double accel_bias_walk = 1e-3;  // m/s^2 per interval
  double pixel = 0.5;             // px
  double motion = 0.002;          // per motion-residual channel (m, m, rad per frame interval)
  PlaneResidualWeights plane;
};

struct PriorConfig {
  bool plane_angle = true;  // mean from the standstill accelerometer average
  bool plane_distance = false;
  bool extrinsics = true;   // mean = CAD extrinsics
  bool rbf = true;          // weak prior, mean = initial values
  bool gauge = true;        // first-frame position and yaw about gravity
  bool bias = true;         // zero-mean prior on the first-frame biases

  double plane_angle_sigma = 0.017453292519943295;  // 1 deg
  double plane_distance_sigma = 0.05;
  double ext_rotation_sigma = 0.017453292519943295;
  double ext_translation_sigma = 0.01;
  Vec3 rbf_sigma = Vec3(0.5, 0.1, 0.1);  // (s, mu, sigma) for both channels
  double gauge_sigma = 1e-5;
  double gyro_bias_sigma = 0.1;
  double accel_bias_sigma = 1.0;
};

struct SolverOptions {
  int max_iterations = 50;
  double initial_lambda = 1e-6;
  double relative_cost_tolerance = 1e-9;
  double gradient_tolerance = 1e-10;
  double absolute_cost_tolerance = 1e-20;  // round-off level of a consistent problem
};

struct EstimatorConfig {
  ResidualToggles residuals;
  TermWeights weights;
  PriorConfig priors;
  SolverOptions solver;
  int window_size = kDefaultWindowSize;
  GravityModel gravity;
  double standstill = 1.0;  // s of samples averaged for the plane-angle prior
};

/// Estimated quantities. Landmarks are indexed by the ids used in the stereo log.
struct Estimate {
  std::vector<VioState> frames;
  PlaneParams plane;
  Extrinsics ext;
  RbfParams rbf;
  std::map<int, Vec3> landmarks;
};

/// Initialization perturbation applied to the truth.
struct Perturbation {
  double rotation = 0.017453292519943295;  // rad, per frame and for the extrinsics
  double translation = 0.05;               // m, positions, landmarks, extrinsic translation, d
  double velocity = 0.05;                  // m/s
  double rbf_fraction = 0.2;               // relative change of every RBF parameter
  double global_tilt = 0.0;                // rad, rigid rotation of the whole guess about a horizontal axis
  std::uint64_t seed = 1;
};

/// The ground truth as an estimate (all landmarks, ids = indices).
Estimate truthEstimate(const GroundTruth& truth);

/// Truth-perturbed initial guess. `global_tilt` rotates frames, velocities and landmarks about a random
/// axis orthogonal to gravity through the first position (an initial gravity-direction error). The plane starts from `truth.plane` perturbed; build() replaces the
/// angle with the accelerometer initialization when the plane-angle prior is on.
Estimate perturbedTruth(const GroundTruth& truth, const Perturbation& perturbation);

/// Column offsets of the variable blocks; absent blocks have offset -1.
struct VariableLayout {
  int frames = 0;
  int plane = -1;  // (d1, d2, d)
  int ext = -1;    // (rotation, translation)
  int rbf = -1;
  std::map<int, int> landmarks;
  int dim = 0;
};

struct ImuTerm {
  int frame = 0;  // between frame and frame + 1
  std::size_t begin = 0, end = 0;  // sample range, inclusive
};

struct StereoTerm {
  int frame = 0;
  int landmark = 0;
  Vec4 measured = Vec4::Zero();  // normalized (u_l, v_l, u_r, v_r)
};

struct MotionTerm {
  int frame = 0;
  CommandWindow window;
  double dt = 0.0;
};

/// Batch problem: variables, residual registry and prior means.
struct Problem {
  EstimatorConfig config;
  MeasurementLog log;
  Estimate initial;
  VariableLayout layout;
  std::vector<ImuTerm> imu_terms;
  std::vector<StereoTerm> stereo_terms;
  std::vector<MotionTerm> motion_terms;
  std::vector<int> plane_terms;  // frame indices

  Vec3 plane_normal_prior = Vec3::UnitZ();  // world frame
  double plane_distance_prior = 0.0;
  Extrinsics ext_prior;
  RbfParams rbf_prior;
  Pose3 gauge_prior;  // first-frame pose

  /// Number of residual terms in a group: "imu", "stereo", "motion", "plane", "prior_*".
  int count(const std::string& group) const;
};

/// Throws std::invalid_argument for fewer than two frames or inconsistent inputs.
/// `cad` is the nominal extrinsics used for the prior and the plane initialization; `anchor` is the
/// first-frame pose that defines the world frame (gauge prior on its position and yaw).
Problem buildProblem(const MeasurementLog& log, const Estimate& initial, const Extrinsics& cad, const Pose3& anchor,
                     const EstimatorConfig& config);

/// Ground normal in the world from the standstill accelerometer average: the first-frame orientation
/// is levelled against gravity and the CAD base z axis is mapped through it.
Vec3 accelerometerPlaneNormal(const MeasurementLog& log, const VioState& first, const Extrinsics& cad,
                              const GravityModel& g, double standstill);

struct Evaluation {
  Eigen::VectorXd residual;                 // whitened
  Eigen::SparseMatrix<double> jacobian;     // w.r.t. the retraction chart
  std::vector<std::pair<std::string, int>> groups;  // (group, row count) in row order
  double cost() const { return 0.5 * residual.squaredNorm(); }
};

/// Whitened residuals and Jacobian at `x`.
Evaluation evaluate(const Problem& problem, const Estimate& x);

/// x boxplus delta over all blocks. With `canonical_plane` false the plane angle is perturbed without
/// re-canonicalization (the chart the Jacobian refers to).
Estimate retract(const Problem& problem, const Estimate& x, const Eigen::VectorXd& delta, bool canonical_plane = true);

struct ParameterEstimate {
  std::string name;
  double value = 0.0;
  double stddev = 0.0;  // marginal, from the final normal equations
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  bool converged = false;
  std::string termination;
  std::vector<double> cost_history;  // initial cost, then the cost after every accepted step
  std::map<std::string, double> group_rms;  // final whitened RMS per residual group
  std::vector<ParameterEstimate> parameters;
  std::vector<std::string> warnings;
};

struct SolveResult {
  Estimate estimate;
  SolveReport report;
};

/// Damped Gauss-Newton from problem.initial.
SolveResult solve(const Problem& problem);

/// JSON text of the report (schema in docs/report-schema.md).
std::string toJson(const SolveReport& report);

/// Angle between the estimated and true gravity directions in the IMU frame.
double gravityDirectionError(const VioState& estimate, const VioState& truth, const GravityModel& g);

}  // namespace planarvio
