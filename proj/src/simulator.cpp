#include "planarvio/simulator.hpp"

#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/LU>

namespace planarvio {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinDepth = 0.3;  // m, closer landmarks are not observed

int countSamples(double duration, int rate) { return static_cast<int>(std::floor(duration * rate + 1e-9)) + 1; }

double sinusoid(double base, double amplitude, double period, double t) {
  return period > 0.0 ? base + amplitude * std::sin(2.0 * kPi * t / period) : base;
}

}  // namespace

const std::vector<ProfileInfo>& profileList() {
  static const std::vector<ProfileInfo> profiles{
      {"stationary", "standing still, all commands zero"},
      {"straight", "constant 0.5 m/s forward, no turning (degenerate RBF case)"},
      {"circle", "constant 0.5 m/s at 0.5 rad/s"},
      {"varying", "sinusoidal speed and turn rate, non-constant in every command window"},
      {"stop-and-go", "alternating drive and stop phases with gentle turns"},
  };
  return profiles;
}

CommandScript scriptedProfile(const std::string& name) {
  if (name == "stationary") return {{4.0, 0.0, 0.0}};
  if (name == "straight") return {{6.0, 0.5, 0.0}};
  if (name == "circle") return {{6.0, 0.5, 0.5}};
  if (name == "varying") return {{8.0, 0.5, 0.2, 0.3, 1.3, 0.5, 0.8}};
  if (name == "stop-and-go") {
    return {{1.5, 0.5, 0.2}, {1.0, 0.0, 0.0}, {1.5, 0.5, -0.2}, {1.0, 0.0, 0.0}};
  }
  throw std::invalid_argument("unknown profile '" + name + "'");
}

double scriptDuration(const CommandScript& script) {
  double total = 0.0;
  for (const auto& s : script) total += s.duration;
  return total;
}

Vec2 scriptValue(const CommandScript& script, double t) {
  if (t < 0.0) return Vec2::Zero();
  double start = 0.0;
  for (const auto& s : script) {
    if (t < start + s.duration) {
      const double local = t - start;
      return {sinusoid(s.v, s.v_amplitude, s.v_period, local),
              sinusoid(s.omega, s.omega_amplitude, s.omega_period, local)};
    }
    start += s.duration;
  }
  if (!script.empty() && t <= start + 1e-9) {  // closed at the end point
    const auto& s = script.back();
    return {sinusoid(s.v, s.v_amplitude, s.v_period, s.duration),
            sinusoid(s.omega, s.omega_amplitude, s.omega_period, s.duration)};
  }
  return Vec2::Zero();
}

Extrinsics nominalExtrinsics() {
  Mat3 R;
  R << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  return {{Rotation3::fromMatrix(R), Vec3(0.2, 0.0, 0.3)}};
}

Scenario profileScenario(const std::string& name) {
  Scenario s;
  s.name = name;
  s.script = scriptedProfile(name);
  return s;
}

namespace {

void validate(const Scenario& s) {
  const Rates& r = s.rates;
  if (r.imu <= 0 || r.command <= 0 || r.frame <= 0) throw std::invalid_argument("rates must be positive");
  if (!(r.frame <= r.command && r.command <= r.imu)) {
    throw std::invalid_argument("rates must satisfy frame <= command <= imu");
  }
  if (r.imu % r.frame != 0 || r.imu % r.command != 0) {
    throw std::invalid_argument("IMU rate must be an integer multiple of the frame and command rates");
  }
  if (r.imu / r.frame < 2) throw std::invalid_argument("need at least two IMU steps per frame");
  if (!(s.duration() > 0.0)) throw std::invalid_argument("scenario duration must be positive");
  if (countSamples(s.duration(), r.frame) < 2) throw std::invalid_argument("scenario shorter than two frames");
  if (s.prelude < 0.0) throw std::invalid_argument("prelude must be non-negative");
  if (s.window_size < 1) throw std::invalid_argument("window size must be positive");
  if (!s.true_rbf.valid()) throw std::invalid_argument("true RBF parameters must have positive scale and width");
  if (s.landmarks < 0) throw std::invalid_argument("negative landmark count");
}

// Frame states obtained by running the reference integrator over the noise-free samples.
std::vector<VioState> integrateFrames(const VioState& x0, const std::vector<ImuSample>& samples, int steps,
                                      int frames, const GravityModel& g) {
  std::vector<VioState> out{x0};
  std::span<const ImuSample> all(samples);
  for (int k = 0; k + 1 < frames; ++k) {
    out.push_back(propagateState(out.back(), all.subspan(k * steps, steps + 1), g));
  }
  return out;
}

// Orientations along the sample stream, computed with the integrator's own operations.
std::vector<Rotation3> integrateOrientation(const Rotation3& R0, const std::vector<ImuSample>& s, const Vec3& bg) {
  std::vector<Rotation3> R{R0};
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double h = s[i + 1].stamp - s[i].stamp;
    const Vec3 w = 0.5 * (s[i].gyro + s[i + 1].gyro) - bg;
    R.push_back(R.back() * so3Exp(w * h));
  }
  return R;
}

void observe(const GroundTruth& truth, const StereoCamera& cam, double pixel_sigma, std::mt19937_64& rng,
             MeasurementLog& log) {
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t k = 0; k < truth.frames.size(); ++k) {
    const Pose3 T = truth.frames[k].pose();
    const Mat3 Rt = T.rotation.matrix().transpose();
    for (std::size_t j = 0; j < truth.landmarks.size(); ++j) {
      const Vec3 pl = Rt * (truth.landmarks[j] - T.translation);
      if (pl.z() < kMinDepth) continue;
      const Vec3 pr = pl - Vec3(cam.baseline, 0.0, 0.0);
      const Vec2 ul = cam.pixel(pl), ur = cam.pixel(pr);
      if (!cam.inImage(ul) || !cam.inImage(ur)) continue;
      StereoObservation o{static_cast<int>(k), truth.frame_stamps[k], static_cast<int>(j), ul, ur};
      if (pixel_sigma > 0.0) {
        o.left += pixel_sigma * Vec2(noise(rng), noise(rng));
        o.right += pixel_sigma * Vec2(noise(rng), noise(rng));
      }
      log.stereo.push_back(o);
    }
  }
}

void addImuNoise(const NoiseLevels& n, int rate, std::mt19937_64& rng, std::vector<ImuSample>& samples) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sg = n.gyro * std::sqrt(static_cast<double>(rate));
  const double sa = n.accel * std::sqrt(static_cast<double>(rate));
  for (auto& s : samples) {
    if (sg > 0.0) s.gyro += sg * Vec3(noise(rng), noise(rng), noise(rng));
    if (sa > 0.0) s.accel += sa * Vec3(noise(rng), noise(rng), noise(rng));
  }
}

Vec2 perp(const Vec2& a) { return {-a.y(), a.x()}; }

}  // namespace

Simulation generate(const Scenario& scenario) {
  validate(scenario);
  std::mt19937_64 rng(scenario.seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Simulation sim;
  GroundTruth& truth = sim.truth;
  MeasurementLog& log = sim.log;
  log.camera = scenario.camera;

  const Rates& rates = scenario.rates;
  const double duration = scenario.duration();
  const int K = countSamples(duration, rates.frame);
  const int m = rates.imu / rates.frame;
  const double h = 1.0 / rates.imu;
  const double frame_dt = 1.0 / rates.frame;

  // Level ground; the world frame is tilted against it.
  const Vec3 normal = fromRollPitch(scenario.roll, scenario.pitch) * Vec3::UnitZ();
  truth.plane = PlaneParams::fromNormal(normal, 0.0);
  const Mat3 Rwg = truth.plane.ground_from_world.matrix().transpose();
  truth.gravity.gravity = -GravityModel::kMagnitude * normal;
  truth.ext = scenario.ext;
  truth.rbf = scenario.true_rbf;
  truth.gyro_bias = scenario.noise.gyro_bias * Vec3(unit(rng), unit(rng), unit(rng));
  truth.accel_bias = scenario.noise.accel_bias * Vec3(unit(rng), unit(rng), unit(rng));

  // Commands: the robot executes the clean script; the log holds the (optionally perturbed) issue.
  std::vector<ControlCommand> clean;
  for (int i = 0, n = countSamples(duration, rates.command); i < n; ++i) {
    const double tau = static_cast<double>(i) / rates.command;
    const Vec2 u = scriptValue(scenario.script, tau - scenario.prelude);
    clean.push_back({tau, u.x(), u.y()});
    ControlCommand issued = clean.back();
    if (scenario.noise.command > 0.0) {
      issued.v += scenario.noise.command * unit(rng);
      issued.omega += scenario.noise.command * unit(rng);
    }
    log.commands.push_back(issued);
  }

  // Executed twist per frame interval and the base poses on the ground.
  for (int k = 0; k < K; ++k) truth.frame_stamps.push_back(static_cast<double>(k) / rates.frame);
  log.frame_stamps = truth.frame_stamps;
  int truncated = 0;
  std::vector<double> heading{scenario.initial_heading};  // unwrapped
  truth.base_poses.push_back(PlanarPose(scenario.initial_heading, Vec2::Zero()));
  for (int k = 0; k + 1 < K; ++k) {
    const WindowSelection sel = selectWindow(clean, truth.frame_stamps[k + 1], scenario.window_size);
    truncated += sel.truncated ? 1 : 0;
    const Twist2 xi = effectiveControl(sel.window, scenario.true_rbf);
    truth.executed.push_back(xi);
    truth.base_poses.push_back(truth.base_poses.back() * se2Exp(xi, frame_dt));
    heading.push_back(heading.back() + xi(2) * frame_dt);
  }
  if (truncated > 0) {
    log.warnings.push_back(std::to_string(truncated) + " frame(s) had fewer than " +
                           std::to_string(scenario.window_size) + " commands in their window");
  }

  // IMU point in ground coordinates; the world origin sits at the first IMU position.
  const Mat3 Rbi = scenario.ext.base_from_imu.rotation.matrix();
  const Vec3 lever = scenario.ext.base_from_imu.translation;
  const Vec2 lever_xy = lever.head<2>();
  auto imu_ground = [&](const PlanarPose& P) -> Vec3 {
    return Vec3(P.translation.x(), P.translation.y(), 0.0) + rotZ(P.theta) * lever;
  };
  const Vec3 q0 = imu_ground(truth.base_poses.front());
  const Vec3 origin = -Rwg * q0;
  truth.plane.distance = q0.z();
  const Vec3 axis = Rbi.transpose() * Vec3::UnitZ();  // base z in the IMU frame

  // Heading rates: nodes take the mean of the adjacent intervals, interior samples close the integral.
  const int M = (K - 1) * m + 1;
  std::vector<double> rate(M, 0.0);
  for (int k = 0; k < K; ++k) {
    const double before = k > 0 ? truth.executed[k - 1](2) : truth.executed.front()(2);
    const double after = k + 1 < K ? truth.executed[k](2) : truth.executed.back()(2);
    rate[k * m] = 0.5 * (before + after);
  }
  for (int k = 0; k + 1 < K; ++k) {
    const double a0 = rate[k * m], am = rate[(k + 1) * m];
    const double interior = (truth.executed[k](2) * frame_dt / h - 0.5 * (a0 + am)) / (m - 1);
    for (int j = 1; j < m; ++j) rate[k * m + j] = interior;
  }

  // Planar accelerations of the IMU point (ground xy), constant-twist shape plus two bumps per
  // interval that pin the node position and velocity under the midpoint rule.
  auto natural = [&](int k, double s) -> Vec2 {
    const double v = truth.executed[k](0), w = truth.executed[k](2);
    return rot2(heading[k] + w * s) * (Vec2(0.0, v * w) - w * w * lever_xy);
  };
  auto node_velocity = [&](int k) -> Vec2 {  // end of interval k
    const double v = truth.executed[k](0), w = truth.executed[k](2);
    return rot2(heading[k + 1]) * (Vec2(v, 0.0) + w * perp(lever_xy));
  };
  std::vector<Vec2> accel(M, Vec2::Zero());
  for (int k = 0; k < K; ++k) {
    const Vec2 before = k > 0 ? natural(k - 1, frame_dt) : natural(0, 0.0);
    const Vec2 after = k + 1 < K ? natural(k, 0.0) : natural(K - 2, frame_dt);
    accel[k * m] = 0.5 * (before + after);
  }
  std::vector<double> wp(m + 1, 0.0), wv(m + 1, 0.0);
  for (int j = 0; j < m; ++j) {  // acc_j = (a_j + a_j+1) / 2
    wv[j] += 0.5 * h;
    wv[j + 1] += 0.5 * h;
    const double c = h * h * (m - j - 0.5);
    wp[j] += 0.5 * c;
    wp[j + 1] += 0.5 * c;
  }
  Vec2 p = q0.head<2>(), vel = Vec2::Zero();
  for (int k = 0; k + 1 < K; ++k) {
    const int base = k * m;
    for (int j = 1; j < m; ++j) accel[base + j] = natural(k, j * h);
    Vec2 rp = imu_ground(truth.base_poses[k + 1]).head<2>() - p - m * h * vel;
    Vec2 rv = node_velocity(k) - vel;
    Mat2 A = Mat2::Zero();
    for (int j = 0; j <= m; ++j) {
      rp -= wp[j] * accel[base + j];
      rv -= wv[j] * accel[base + j];
      if (j == 0 || j == m) continue;
      const double b1 = std::sin(kPi * j / m), b2 = std::sin(2.0 * kPi * j / m);
      A(0, 0) += wp[j] * b1;
      A(0, 1) += wp[j] * b2;
      A(1, 0) += wv[j] * b1;
      A(1, 1) += wv[j] * b2;
    }
    const Mat2 Ainv = A.inverse();
    for (int axis2 = 0; axis2 < 2; ++axis2) {
      const Vec2 c = Ainv * Vec2(rp(axis2), rv(axis2));
      for (int j = 1; j < m; ++j) {
        accel[base + j](axis2) += c(0) * std::sin(kPi * j / m) + c(1) * std::sin(2.0 * kPi * j / m);
      }
    }
    for (int j = 0; j < m; ++j) {
      const Vec2 acc = 0.5 * (accel[base + j] + accel[base + j + 1]);
      p += vel * h + 0.5 * h * h * acc;
      vel += acc * h;
    }
  }

  // Samples: gyro about the base z axis, specific force from the integrator's own orientations.
  for (int n = 0; n < M; ++n) {
    truth.imu.push_back({static_cast<double>(n) / rates.imu, rate[n] * axis + truth.gyro_bias, Vec3::Zero()});
  }
  const Rotation3 R0 = Rotation3::fromMatrix(Rwg * rotZ(scenario.initial_heading).matrix() * Rbi);
  const std::vector<Rotation3> R = integrateOrientation(R0, truth.imu, truth.gyro_bias);
  for (int n = 0; n < M; ++n) {
    const Vec3 a_world = Rwg * Vec3(accel[n].x(), accel[n].y(), 0.0);
    truth.imu[n].accel = R[n].inverse() * (a_world - truth.gravity.gravity) + truth.accel_bias;
  }

  VioState x0;
  x0.orientation = R0;
  x0.gyro_bias = truth.gyro_bias;
  x0.accel_bias = truth.accel_bias;
  x0.position = Rwg * q0 + origin;
  truth.frames = integrateFrames(x0, truth.imu, m, K, truth.gravity);

  // Landmarks around the base path, above the ground.
  Vec2 lo = Vec2::Constant(1e9), hi = Vec2::Constant(-1e9);
  for (const auto& P : truth.base_poses) {
    lo = lo.cwiseMin(P.translation);
    hi = hi.cwiseMax(P.translation);
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int j = 0; j < scenario.landmarks; ++j) {
    const double mg = scenario.landmark_margin;
    const Vec3 g(lo.x() - mg + (hi.x() - lo.x() + 2 * mg) * u01(rng), lo.y() - mg + (hi.y() - lo.y() + 2 * mg) * u01(rng),
                 scenario.landmark_min_height +
                     (scenario.landmark_max_height - scenario.landmark_min_height) * u01(rng));
    truth.landmarks.push_back(Rwg * g + origin);
  }

  log.imu = truth.imu;
  addImuNoise(scenario.noise, rates.imu, rng, log.imu);
  observe(truth, scenario.camera, scenario.noise.pixel, rng, log);
  return sim;
}

Scenario randomPlanarScenario(std::uint64_t seed, int frames) {
  if (frames < 2) throw std::invalid_argument("randomPlanarScenario: need at least two frames");
  std::mt19937_64 rng(seed);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  Scenario s;
  s.name = "random";
  s.seed = seed;
  s.prelude = 0.0;
  const double deg = kPi / 180.0;
  s.roll = U(-15, 15) * deg;
  s.pitch = U(-15, 15) * deg;
  s.initial_heading = U(-kPi, kPi);
  s.ext.base_from_imu.rotation = s.ext.base_from_imu.rotation * so3Exp(Vec3(U(-0.2, 0.2), U(-0.2, 0.2), U(-0.2, 0.2)));
  s.ext.base_from_imu.translation = Vec3(U(-0.3, 0.3), U(-0.3, 0.3), U(0.05, 0.5));
  s.true_rbf = {{U(0.8, 1.2), U(0.0, 0.1), U(0.05, 0.15)}, {U(0.8, 1.2), U(0.0, 0.1), U(0.05, 0.15)}};
  const double duration = static_cast<double>(frames - 1) / s.rates.frame;
  s.script = {{duration + 0.5 / s.rates.frame, U(0.3, 0.8), U(-0.5, 0.5), U(0.1, 0.3), U(0.7, 1.9), U(0.1, 0.4),
               U(0.9, 2.3)}};
  s.landmarks = 30;
  return s;
}

Simulation generateGeneralMotion(const GeneralMotionConfig& config) {
  const Rates& rates = config.rates;
  if (rates.imu <= 0 || rates.frame <= 0 || rates.imu % rates.frame != 0) {
    throw std::invalid_argument("IMU rate must be an integer multiple of the frame rate");
  }
  if (config.frames < 2) throw std::invalid_argument("general motion: need at least two frames");
  std::mt19937_64 rng(config.seed);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  std::normal_distribution<double> unit(0.0, 1.0);

  Simulation sim;
  GroundTruth& truth = sim.truth;
  truth.planar = false;
  truth.ext = Extrinsics{};
  truth.gyro_bias = config.noise.gyro_bias * Vec3(unit(rng), unit(rng), unit(rng));
  truth.accel_bias = config.noise.accel_bias * Vec3(unit(rng), unit(rng), unit(rng));
  const int m = rates.imu / rates.frame;
  const int M = (config.frames - 1) * m + 1;

  Vec3 wa, wf, wp, aa, af, ap;
  for (int i = 0; i < 3; ++i) {
    wa(i) = U(0.4, 0.8);
    wf(i) = U(1.5, 3.0);
    wp(i) = U(0.0, 2.0 * kPi);
    aa(i) = U(0.5, 1.5);
    af(i) = U(1.0, 3.0);
    ap(i) = U(0.0, 2.0 * kPi);
  }
  std::vector<Vec3> accel_world;
  for (int n = 0; n < M; ++n) {
    const double t = static_cast<double>(n) / rates.imu;
    Vec3 w, a;
    for (int i = 0; i < 3; ++i) {
      w(i) = wa(i) * std::sin(wf(i) * t + wp(i));
      a(i) = aa(i) * std::sin(af(i) * t + ap(i));
    }
    truth.imu.push_back({t, w + truth.gyro_bias, Vec3::Zero()});
    accel_world.push_back(a);
  }
  const Rotation3 R0 = fromRollPitch(U(-0.2, 0.2), U(-0.2, 0.2)) * so3Exp(Vec3(0, 0, U(-kPi, kPi)));
  const std::vector<Rotation3> R = integrateOrientation(R0, truth.imu, truth.gyro_bias);
  for (int n = 0; n < M; ++n) {
    truth.imu[n].accel = R[n].inverse() * (accel_world[n] - truth.gravity.gravity) + truth.accel_bias;
  }
  VioState x0;
  x0.orientation = R0;
  x0.gyro_bias = truth.gyro_bias;
  x0.accel_bias = truth.accel_bias;
  x0.velocity = Vec3(U(-0.5, 0.5), U(-0.5, 0.5), U(-0.2, 0.2));
  for (int k = 0; k < config.frames; ++k) truth.frame_stamps.push_back(static_cast<double>(k) / rates.frame);
  truth.frames = integrateFrames(x0, truth.imu, m, config.frames, truth.gravity);

  // Landmarks in front of the first camera pose.
  const Mat3 R0m = R0.matrix();
  for (int j = 0; j < config.landmarks; ++j) {
    const double z = U(3.0, 8.0);
    const Vec3 pc(U(-0.6, 0.6) * z, U(-0.45, 0.45) * z, z);
    truth.landmarks.push_back(R0m * pc + x0.position);
  }

  sim.log.camera = config.camera;
  sim.log.frame_stamps = truth.frame_stamps;
  sim.log.imu = truth.imu;
  addImuNoise(config.noise, rates.imu, rng, sim.log.imu);
  observe(truth, config.camera, config.noise.pixel, rng, sim.log);
  return sim;
}

LinearizationPoint truthLinearization(const Simulation& sim, int window_size) {
  const GroundTruth& truth = sim.truth;
  LinearizationPoint point;
  point.gravity = truth.gravity;
  point.plane = truth.plane;
  point.ext = truth.ext;
  point.rbf = truth.rbf;
  point.landmarks = truth.landmarks;
  point.baseline = sim.log.camera.baseline;
  chainFrames(point, truth.frames.front(), truth.imu, truth.frame_stamps);
  if (!sim.log.commands.empty()) {
    for (std::size_t k = 0; k + 1 < truth.frame_stamps.size(); ++k) {
      point.windows.push_back(selectWindow(sim.log.commands, truth.frame_stamps[k + 1], window_size).window);
    }
  }
  return point;
}

void exportCsv(const Simulation& sim, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& log = sim.log;
  const auto& truth = sim.truth;
  {
    auto out = fmt::output_file((dir / "imu.csv").string());
    out.print("t,gx,gy,gz,ax,ay,az\n");
    for (const auto& s : log.imu) {
      out.print("{},{},{},{},{},{},{}\n", s.stamp, s.gyro.x(), s.gyro.y(), s.gyro.z(), s.accel.x(), s.accel.y(),
                s.accel.z());
    }
  }
  {
    auto out = fmt::output_file((dir / "commands.csv").string());
    out.print("t,v,omega\n");
    for (const auto& c : log.commands) out.print("{},{},{}\n", c.stamp, c.v, c.omega);
  }
  {
    auto out = fmt::output_file((dir / "stereo.csv").string());
    out.print("frame,t,landmark,u_left,v_left,u_right,v_right\n");
    for (const auto& o : log.stereo) {
      out.print("{},{},{},{},{},{},{}\n", o.frame, o.stamp, o.landmark, o.left.x(), o.left.y(), o.right.x(),
                o.right.y());
    }
  }
  {
    auto out = fmt::output_file((dir / "frames.csv").string());
    out.print("frame,t\n");
    for (std::size_t k = 0; k < log.frame_stamps.size(); ++k) out.print("{},{}\n", k, log.frame_stamps[k]);
  }
  {
    auto out = fmt::output_file((dir / "truth.csv").string());
    out.print("frame,t,qw,qx,qy,qz,px,py,pz,vx,vy,vz,bgx,bgy,bgz,bax,bay,baz\n");
    for (std::size_t k = 0; k < truth.frames.size(); ++k) {
      const VioState& x = truth.frames[k];
      const auto& q = x.orientation.quaternion();
      out.print("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", k, truth.frame_stamps[k], q.w(), q.x(),
                q.y(), q.z(), x.position.x(), x.position.y(), x.position.z(), x.velocity.x(), x.velocity.y(),
                x.velocity.z(), x.gyro_bias.x(), x.gyro_bias.y(), x.gyro_bias.z(), x.accel_bias.x(),
                x.accel_bias.y(), x.accel_bias.z());
    }
  }
  {
    auto out = fmt::output_file((dir / "landmarks.csv").string());
    out.print("id,x,y,z\n");
    for (std::size_t j = 0; j < truth.landmarks.size(); ++j) {
      const Vec3& f = truth.landmarks[j];
      out.print("{},{},{},{}\n", j, f.x(), f.y(), f.z());
    }
  }
}

}  // namespace planarvio
