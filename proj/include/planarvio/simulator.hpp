#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "planarvio/motion_model.hpp"
#include "planarvio/observability.hpp"
#include "planarvio/plane_constraint.hpp"
#include "planarvio/propagation.hpp"

namespace planarvio {

/// One piece of a command script: v(t) = v + v_amp sin(2 pi t / v_period), same for omega,
/// with t measured from the start of the segment. A zero period disables the sinusoid.
struct ScriptSegment {
  double duration = 1.0;
  double v = 0.0;
  double omega = 0.0;
  double v_amplitude = 0.0;
  double v_period = 0.0;
  double omega_amplitude = 0.0;
  double omega_period = 0.0;
};

using CommandScript = std::vector<ScriptSegment>;

struct ProfileInfo {
  std::string name;
  std::string description;
};

/// Built-in profiles in a fixed order.
const std::vector<ProfileInfo>& profileList();
/// Throws std::invalid_argument for unknown names.
CommandScript scriptedProfile(const std::string& name);
double scriptDuration(const CommandScript& script);
/// Script value (v, omega) at time t from the script start; zero outside [0, duration].
Vec2 scriptValue(const CommandScript& script, double t);

struct Rates {
  int imu = 200;
  int command = 20;
  int frame = 10;
};

/// Continuous-time densities (per sqrt(Hz)) for the IMU; pixels and m/s, rad/s for the rest.
struct NoiseLevels {
  double gyro = 1e-3;
  double accel = 1e-2;
  double pixel = 0.5;
  double command = 0.0;
  double gyro_bias = 5e-4;   // sigma of the constant bias draw, rad/s
  double accel_bias = 5e-3;  // m/s^2
};

/// Pinhole stereo rig; the left camera frame is the IMU frame (z forward) and the right camera is
/// offset by `baseline` along camera x.
struct StereoCamera {
  double fx = 400.0, fy = 400.0, cx = 320.0, cy = 240.0;
  double baseline = 0.12;
  int width = 640, height = 480;

  Vec2 pixel(const Vec3& p_cam) const { return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy}; }
  bool inImage(const Vec2& uv) const { return uv.x() >= 0 && uv.y() >= 0 && uv.x() < width && uv.y() < height; }
};

/// Nominal mounting: camera/IMU z along base x, camera x along base -y, camera y along base -z.
Extrinsics nominalExtrinsics();

struct Scenario {
  std::string name = "custom";
  std::uint64_t seed = 1;
  double prelude = 1.5;  // standstill before the script, s
  Rates rates;
  CommandScript script;
  RbfParams true_rbf{{1.1, 0.05, 0.08}, {1.1, 0.05, 0.08}};
  int window_size = kDefaultWindowSize;
  double roll = 5.0 * 3.14159265358979323846 / 180.0;  // world tilt relative to the ground
  double pitch = 3.0 * 3.14159265358979323846 / 180.0;
  double initial_heading = 0.0;
  Extrinsics ext = nominalExtrinsics();
  int landmarks = 120;
  double landmark_margin = 5.0;  // m around the base path
  double landmark_min_height = 0.2, landmark_max_height = 2.5;
  NoiseLevels noise;
  StereoCamera camera;

  double duration() const { return prelude + scriptDuration(script); }
};

/// Built-in profile with default settings.
Scenario profileScenario(const std::string& name);

struct StereoObservation {
  int frame = 0;
  double stamp = 0.0;
  int landmark = 0;
  Vec2 left = Vec2::Zero();
  Vec2 right = Vec2::Zero();
};

struct MeasurementLog {
  std::vector<ImuSample> imu;
  std::vector<ControlCommand> commands;
  std::vector<StereoObservation> stereo;
  std::vector<double> frame_stamps;
  StereoCamera camera;
  std::vector<std::string> warnings;
};

struct GroundTruth {
  std::vector<double> frame_stamps;
  std::vector<VioState> frames;        // IMU states at the frames (integrator-consistent)
  std::vector<PlanarPose> base_poses;  // base poses in the ground frame (planar runs only)
  std::vector<Twist2> executed;        // twist over (t_k, t_k+1], one per frame pair
  std::vector<ImuSample> imu;          // noise-free IMU samples, biases included
  std::vector<Vec3> landmarks;
  PlaneParams plane;
  Extrinsics ext;
  RbfParams rbf;
  GravityModel gravity;
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  bool planar = true;
};

struct Simulation {
  GroundTruth truth;
  MeasurementLog log;
};

/// Planar robot on level ground. Throws std::invalid_argument on infeasible settings.
Simulation generate(const Scenario& scenario);

/// Random planar scenario for property checks: random plane tilt, extrinsics and a varying script
/// lasting `frames` frames (no prelude).
Scenario randomPlanarScenario(std::uint64_t seed, int frames);

/// Unconstrained 6-DOF motion driven by smooth analytic IMU signals; stereo only, no commands.
struct GeneralMotionConfig {
  std::uint64_t seed = 7;
  int frames = 10;
  Rates rates;
  int landmarks = 40;
  NoiseLevels noise;
  StereoCamera camera;
};

Simulation generateGeneralMotion(const GeneralMotionConfig& config);

/// Linearization point at the ground truth: frames chained over the noise-free IMU samples,
/// command windows from the logged commands (empty for runs without commands).
LinearizationPoint truthLinearization(const Simulation& sim, int window_size = kDefaultWindowSize);

/// Writes imu.csv, commands.csv, stereo.csv, frames.csv and truth.csv into `dir`.
void exportCsv(const Simulation& sim, const std::filesystem::path& dir);

}  // namespace planarvio
