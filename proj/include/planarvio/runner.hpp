#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "planarvio/estimator.hpp"
#include "planarvio/simulator.hpp"

namespace planarvio {

enum class Analysis { Observability, Estimate, Both };

/// "observability", "estimate" or "both"; throws std::invalid_argument otherwise.
Analysis parseAnalysis(const std::string& text);

/// Measurement groups. Observability uses plane, motion (inverse model), motion_forward and features;
/// the estimator uses imu, features (stereo), motion and plane.
struct MeasurementFlags {
  bool imu = true;
  bool features = true;
  bool motion = true;
  bool motion_forward = false;
  bool plane = true;
};

/// Comma list of imu, features (alias stereo), motion (alias motion_inverse), motion_forward, plane.
/// Throws std::invalid_argument on unknown or empty lists.
MeasurementFlags parseMeasurements(const std::string& list);

/// Command-script excitation of one channel: Constant when every window sees one value, Varying
/// when every segment carries a sinusoid, Mixed otherwise.
enum class Excitation { Constant, Varying, Mixed };
Excitation channelExcitation(const CommandScript& script, bool linear);

struct MatrixRank {
  std::string matrix;
  int rows = 0, columns = 0, rank = 0, nullspace_dim = 0;
  double sigma_max = 0.0, sigma_min = 0.0;
};

struct CandidateRow {
  std::string matrix;
  std::string candidate;
  int columns = 0;
  double residual = 0.0;             // max |M n|, rows and columns normalized
  double max_principal_angle = 0.0;  // against the numerical nullspace of `matrix`
};

struct RbfColumn {
  std::string channel;    // "linear" or "angular"
  std::string parameter;  // "scale", "center", "width"
  double norm = 0.0;
  bool unobservable = false;
};

struct ObservabilityReport {
  std::string scenario;
  int frames = 0;
  int landmarks = 0;
  std::vector<MatrixRank> ranks;
  std::vector<CandidateRow> candidates;
  std::vector<RbfColumn> rbf_columns;
  bool linear_windows_constant = false;  // v constant inside every command window
  int rbf_linear_rank = 0;
  double rbf_linear_condition = 0.0;     // sigma_min / sigma_max of the linear-channel block
  std::optional<double> plane_product;            // plane rows times orientation + translation directions
  std::optional<double> plane_distance_pattern;   // max deviation of M e_d from (0, 0, 1) per frame
  std::optional<double> plane_distance_in_nullspace;
  std::optional<double> tilt_content_features;    // roll/pitch carried by the feature-only nullspace
  std::optional<double> tilt_content_plane;       // the same after plane rows + plane-angle prior
  std::optional<bool> forward_inverse_rank_equal;
  std::vector<std::string> warnings;
};

struct ObservabilityOptions {
  int frames = 10;    // leading frames of the run
  int landmarks = 8;  // landmarks in front of the camera in all of them
};

/// Analysis at the noise-free truth with the standstill prelude removed.
ObservabilityReport analyzeObservability(const Scenario& scenario, const MeasurementFlags& measurements,
                                         const ObservabilityOptions& options = {});

struct ErrorRow {
  std::string quantity;
  double estimate = 0.0;
  double truth = 0.0;
  double error = 0.0;  // absolute, relative for RBF parameters
};

struct TrajectoryRow {
  int frame = 0;
  double stamp = 0.0;
  Vec3 estimate = Vec3::Zero();
  Vec3 truth = Vec3::Zero();
  double rotation_error = 0.0;  // rad
};

struct EstimationReport {
  std::string scenario;
  SolveReport solve;
  std::vector<ErrorRow> errors;
  std::vector<TrajectoryRow> trajectory;
  double plane_angle_error = 0.0;      // rad
  double gravity_error = 0.0;          // rad, first frame
  double rbf_max_relative_error = 0.0;
  Vec6 rbf_prior_sigmas = Vec6::Zero();  // |estimate - prior mean| / prior sigma
  Excitation linear = Excitation::Mixed;
  Excitation angular = Excitation::Mixed;
  std::vector<std::string> warnings;
};

/// Simulate, perturb the truth (seeded by the scenario seed), solve.
EstimationReport runEstimation(const Scenario& scenario, const MeasurementFlags& measurements,
                               const EstimatorConfig& base = {});

struct CheckResult {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<", ">", "==", "<="
  double threshold = 0.0;
  bool pass = false;
};

std::vector<CheckResult> observabilityChecks(const ObservabilityReport& report);
std::vector<CheckResult> estimationChecks(const EstimationReport& report, const PriorConfig& priors = {});

struct RunConfig {
  std::vector<std::string> scenarios;  // paths or built-in profile names
  Analysis analysis = Analysis::Both;
  std::filesystem::path out = "planarvio-out";
  std::optional<std::uint64_t> seed;
  bool check = false;
  MeasurementFlags measurements;
};

/// Runs every scenario and writes reports under out/<scenario name>/ plus out/summary.json.
/// Returns 0 on success, 1 when --check thresholds fail, 2 on config or scenario errors.
int run(const RunConfig& config, std::ostream& log, std::ostream& err);

/// One line per built-in profile: name, two spaces, description.
void listProfiles(std::ostream& out);

}  // namespace planarvio
