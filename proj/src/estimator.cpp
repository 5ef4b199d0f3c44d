#include "planarvio/estimator.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace planarvio {

namespace {

constexpr int kPlaneDim = 3;
constexpr int kExtDim = 6;
constexpr int kRbfDim = 6;

Vec3 randomDirection(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

std::size_t sampleIndex(const std::vector<ImuSample>& samples, double t) {
  const auto it = std::lower_bound(samples.begin(), samples.end(), t - 1e-9,
                                   [](const ImuSample& s, double v) { return s.stamp < v; });
  if (it == samples.end() || std::abs(it->stamp - t) > 1e-9) {
    throw std::invalid_argument("frame stamp without a matching IMU sample");
  }
  return static_cast<std::size_t>(it - samples.begin());
}

// Sparse Jacobian rows under construction.
class Rows {
 public:
  int add(const std::string& group, int n) {
    const int r = rows_;
    rows_ += n;
    if (!groups_.empty() && groups_.back().first == group) {
      groups_.back().second += n;
    } else {
      groups_.emplace_back(group, n);
    }
    values_.conservativeResize(rows_);
    values_.tail(n).setZero();
    return r;
  }
  void value(int row, const Eigen::VectorXd& v) { values_.segment(row, v.size()) = v; }
  template <typename Block>
  void block(int row, int col, const Block& b) {
    if (col < 0) return;
    for (int i = 0; i < b.rows(); ++i) {
      for (int j = 0; j < b.cols(); ++j) {
        if (b(i, j) != 0.0) triplets_.emplace_back(row + i, col + j, b(i, j));
      }
    }
  }
  Evaluation finish(int cols) {
    Evaluation e;
    e.residual = values_;
    e.jacobian.resize(rows_, cols);
    e.jacobian.setFromTriplets(triplets_.begin(), triplets_.end());
    e.groups = std::move(groups_);
    return e;
  }

 private:
  int rows_ = 0;
  Eigen::VectorXd values_;
  std::vector<Eigen::Triplet<double>> triplets_;
  std::vector<std::pair<std::string, int>> groups_;
};

Vec3 up(const GravityModel& g) { return -g.gravity.normalized(); }

}  // namespace

Estimate truthEstimate(const GroundTruth& truth) {
  Estimate e{truth.frames, truth.plane, truth.ext, truth.rbf, {}};
  for (std::size_t j = 0; j < truth.landmarks.size(); ++j) e.landmarks[static_cast<int>(j)] = truth.landmarks[j];
  return e;
}

Estimate perturbedTruth(const GroundTruth& truth, const Perturbation& p) {
  std::mt19937_64 rng(p.seed);
  std::uniform_int_distribution<int> coin(0, 1);
  Estimate e;
  for (const VioState& x : truth.frames) {
    VioState y = x;
    y.orientation = x.orientation * so3Exp(p.rotation * randomDirection(rng));
    y.position += p.translation * randomDirection(rng);
    y.velocity += p.velocity * randomDirection(rng);
    y.gyro_bias.setZero();
    y.accel_bias.setZero();
    e.frames.push_back(y);
  }
  e.ext = truth.ext;
  e.ext.base_from_imu.rotation = e.ext.base_from_imu.rotation * so3Exp(p.rotation * randomDirection(rng));
  e.ext.base_from_imu.translation += p.translation * randomDirection(rng);
  const Vec3 tilt = p.rotation * randomDirection(rng);
  e.plane = truth.plane.perturbed(tilt.head<2>().normalized() * p.rotation, p.translation);
  Vec6 rbf = truth.rbf.toVector();
  for (int i = 0; i < 6; ++i) rbf(i) *= 1.0 + (coin(rng) ? p.rbf_fraction : -p.rbf_fraction);
  e.rbf = RbfParams::fromVector(rbf);
  for (std::size_t j = 0; j < truth.landmarks.size(); ++j) {
    e.landmarks[static_cast<int>(j)] = truth.landmarks[j] + p.translation * randomDirection(rng);
  }
  if (p.global_tilt != 0.0) {
    const Vec3 u = up(truth.gravity);
    const Vec3 axis = u.cross(randomDirection(rng)).normalized();
    const Rotation3 R = so3Exp(p.global_tilt * axis);
    const Vec3 origin = e.frames.front().position;
    for (VioState& x : e.frames) {
      x.orientation = R * x.orientation;
      x.position = origin + R * (x.position - origin);
      x.velocity = R * x.velocity;
    }
    for (auto& [id, f] : e.landmarks) f = origin + R * (f - origin);
  }
  return e;
}

int Problem::count(const std::string& group) const {
  if (group == "imu") return static_cast<int>(imu_terms.size());
  if (group == "stereo") return static_cast<int>(stereo_terms.size());
  if (group == "motion") return static_cast<int>(motion_terms.size());
  if (group == "plane") return static_cast<int>(plane_terms.size());
  const PriorConfig& p = config.priors;
  if (group == "prior_plane_angle") return p.plane_angle && layout.plane >= 0 ? 1 : 0;
  if (group == "prior_plane_distance") return p.plane_distance && layout.plane >= 0 ? 1 : 0;
  if (group == "prior_extrinsics") return p.extrinsics && layout.ext >= 0 ? 1 : 0;
  if (group == "prior_rbf") return p.rbf && layout.rbf >= 0 ? 1 : 0;
  if (group == "prior_gauge") return p.gauge ? 1 : 0;
  if (group == "prior_bias") return p.bias ? 1 : 0;
  throw std::invalid_argument("unknown residual group '" + group + "'");
}

Vec3 accelerometerPlaneNormal(const MeasurementLog& log, const VioState& first, const Extrinsics& cad,
                              const GravityModel& g, double standstill) {
  if (log.imu.empty()) throw std::invalid_argument("plane initialization: empty IMU log");
  const double t0 = log.imu.front().stamp;
  Vec3 sum = Vec3::Zero();
  int n = 0;
  for (const auto& s : log.imu) {
    if (s.stamp > t0 + standstill + 1e-9) break;
    sum += s.accel;
    ++n;
  }
  if (n < 2 || sum.norm() == 0.0) throw std::invalid_argument("plane initialization: no standstill samples");
  // Specific force at rest points up; level the first-frame orientation so that it maps to world up.
  const Vec3 measured_up = first.orientation * sum.normalized();
  const Mat3 level = Eigen::Quaterniond::FromTwoVectors(measured_up, up(g)).toRotationMatrix();
  const Mat3 R = level * first.orientation.matrix();
  return (R * (cad.base_from_imu.rotation.inverse() * Vec3::UnitZ())).normalized();
}

Problem buildProblem(const MeasurementLog& log, const Estimate& initial, const Extrinsics& cad, const Pose3& anchor,
                     const EstimatorConfig& config) {
  const int K = static_cast<int>(log.frame_stamps.size());
  if (K < 2) throw std::invalid_argument("estimator: need at least two frames");
  if (static_cast<int>(initial.frames.size()) != K) {
    throw std::invalid_argument("estimator: initial guess has " + std::to_string(initial.frames.size()) +
                                " frames, log has " + std::to_string(K));
  }
  const ResidualToggles& on = config.residuals;
  if (!(on.imu || on.stereo || on.motion || on.plane)) throw std::invalid_argument("estimator: no residual groups");

  Problem p;
  p.config = config;
  p.log = log;
  p.initial = initial;
  p.ext_prior = cad;
  p.rbf_prior = initial.rbf;
  p.gauge_prior = anchor;

  VariableLayout& L = p.layout;
  L.frames = 15 * K;
  L.dim = L.frames;
  if (on.plane) {
    L.plane = L.dim;
    L.dim += kPlaneDim;
  }
  if (on.plane || on.motion) {
    L.ext = L.dim;
    L.dim += kExtDim;
  }
  if (on.motion) {
    L.rbf = L.dim;
    L.dim += kRbfDim;
  }

  if (on.imu) {
    for (int k = 0; k + 1 < K; ++k) {
      p.imu_terms.push_back({k, sampleIndex(log.imu, log.frame_stamps[k]), sampleIndex(log.imu, log.frame_stamps[k + 1])});
    }
  }
  if (on.stereo) {
    const StereoCamera& c = log.camera;
    for (const auto& o : log.stereo) {
      if (o.frame < 0 || o.frame >= K) throw std::invalid_argument("stereo observation references a missing frame");
      if (!initial.landmarks.count(o.landmark)) {
        throw std::invalid_argument("no initial value for landmark " + std::to_string(o.landmark));
      }
      if (!L.landmarks.count(o.landmark)) {
        L.landmarks[o.landmark] = L.dim;
        L.dim += 3;
      }
      Vec4 m((o.left.x() - c.cx) / c.fx, (o.left.y() - c.cy) / c.fy, (o.right.x() - c.cx) / c.fx,
             (o.right.y() - c.cy) / c.fy);
      p.stereo_terms.push_back({o.frame, o.landmark, m});
    }
    std::map<int, Vec3> used;
    for (const auto& [id, col] : L.landmarks) used[id] = initial.landmarks.at(id);
    p.initial.landmarks = used;
  } else {
    p.initial.landmarks.clear();
  }
  if (on.motion) {
    for (int k = 0; k + 1 < K; ++k) {
      const WindowSelection sel = selectWindow(log.commands, log.frame_stamps[k + 1], config.window_size);
      if (sel.window.commands.empty()) throw std::invalid_argument("motion residual without commands");
      p.motion_terms.push_back({k, sel.window, log.frame_stamps[k + 1] - log.frame_stamps[k]});
    }
  }
  if (on.plane) {
    for (int k = 0; k < K; ++k) p.plane_terms.push_back(k);
    if (config.priors.plane_angle) {
      p.plane_normal_prior = accelerometerPlaneNormal(log, initial.frames.front(), cad, config.gravity, config.standstill);
      // Distance from the first frame resting on the plane.
      PlaneParams plane = PlaneParams::fromNormal(p.plane_normal_prior, 0.0);
      plane.distance = -planeResidual(initial.frames.front().pose(), initial.ext, plane).distance;
      p.initial.plane = plane;
    }
    p.plane_distance_prior = p.initial.plane.distance;
  }
  return p;
}

Estimate retract(const Problem& problem, const Estimate& x, const Eigen::VectorXd& d, bool canonical_plane) {
  const VariableLayout& L = problem.layout;
  if (d.size() != L.dim) throw std::invalid_argument("retract: dimension mismatch");
  Estimate y = x;
  for (std::size_t k = 0; k < x.frames.size(); ++k) y.frames[k] = x.frames[k].boxplus(d.segment<15>(15 * k));
  if (L.plane >= 0) {
    const Vec2 a = d.segment<2>(L.plane);
    if (canonical_plane) {
      y.plane = x.plane.perturbed(a, d(L.plane + 2));
    } else {
      y.plane.ground_from_world = so3Exp(Vec3(a.x(), a.y(), 0.0)) * x.plane.ground_from_world;
      y.plane.distance += d(L.plane + 2);
    }
  }
  if (L.ext >= 0) {
    y.ext.base_from_imu.rotation = x.ext.base_from_imu.rotation * so3Exp(d.segment<3>(L.ext));
    y.ext.base_from_imu.translation += d.segment<3>(L.ext + 3);
  }
  if (L.rbf >= 0) y.rbf = RbfParams::fromVector(x.rbf.toVector() + d.segment<6>(L.rbf));
  for (const auto& [id, col] : L.landmarks) y.landmarks[id] = x.landmarks.at(id) + d.segment<3>(col);
  return y;
}

Evaluation evaluate(const Problem& p, const Estimate& x) {
  const VariableLayout& L = p.layout;
  const TermWeights& w = p.config.weights;
  const GravityModel& g = p.config.gravity;
  Rows rows;
  auto frame = [](int k, int offset) { return 15 * k + offset; };

  for (const ImuTerm& t : p.imu_terms) {
    std::span<const ImuSample> s(p.log.imu);
    const Propagation pr = propagate(x.frames[t.frame], s.subspan(t.begin, t.end - t.begin + 1), g);
    const Vec15 e = x.frames[t.frame + 1].boxminus(pr.state);
    Vec15 sigma;
    sigma << Vec3::Constant(w.imu_rotation), Vec3::Constant(w.gyro_bias_walk), Vec3::Constant(w.imu_velocity),
        Vec3::Constant(w.accel_bias_walk), Vec3::Constant(w.imu_position);
    const Vec15 inv = sigma.cwiseInverse();
    const int r = rows.add("imu", 15);
    rows.value(r, inv.cwiseProduct(e));
    Mat15 Jnext = Mat15::Identity();
    Jnext.block<3, 3>(err::kTheta, err::kTheta) = so3RightJacobianInverse(e.segment<3>(err::kTheta));
    Mat15 Jprev = Mat15::Identity();
    Jprev.block<3, 3>(err::kTheta, err::kTheta) = so3RightJacobianInverse(-e.segment<3>(err::kTheta));
    const Mat15 W = inv.asDiagonal();
    rows.block(r, frame(t.frame + 1, 0), (W * Jnext).eval());
    rows.block(r, frame(t.frame, 0), (-W * Jprev * pr.transition.matrix()).eval());
  }

  for (const StereoTerm& t : p.stereo_terms) {
    const FeatureJacobian F = featureJacobian(x.frames[t.frame].pose(), x.landmarks.at(t.landmark), p.log.camera.baseline);
    const double inv = p.log.camera.fx / w.pixel;
    const int r = rows.add("stereo", 4);
    if (!F.valid) continue;  // behind the camera at this iterate: row left at zero
    rows.value(r, inv * (F.value - t.measured));
    rows.block(r, frame(t.frame, err::kTheta), (inv * F.rotation).eval());
    rows.block(r, frame(t.frame, err::kPosition), (inv * F.position).eval());
    rows.block(r, L.landmarks.at(t.landmark), (inv * F.landmark).eval());
  }

  for (const MotionTerm& t : p.motion_terms) {
    const MotionResidual m = evaluateMotionResidual(x.frames[t.frame].pose(), x.frames[t.frame + 1].pose(), x.ext,
                                                    t.window, x.rbf, t.dt);
    const double inv = 1.0 / w.motion;
    const int r = rows.add("motion", 3);
    rows.value(r, inv * m.value);
    const auto& J = m.jacobians;
    rows.block(r, frame(t.frame, err::kTheta), (inv * J.imu_t.leftCols<3>()).eval());
    rows.block(r, frame(t.frame, err::kPosition), (inv * J.imu_t.rightCols<3>()).eval());
    rows.block(r, frame(t.frame + 1, err::kTheta), (inv * J.imu_t2.leftCols<3>()).eval());
    rows.block(r, frame(t.frame + 1, err::kPosition), (inv * J.imu_t2.rightCols<3>()).eval());
    rows.block(r, L.ext, (inv * J.ext).eval());
    rows.block(r, L.rbf, (inv * J.rbf).eval());
  }

  for (const int k : p.plane_terms) {
    const Pose3 T = x.frames[k].pose();
    const PlaneResidual v = planeResidual(T, x.ext, x.plane);
    const PlaneJacobians J = planeJacobians(T, x.ext, x.plane);
    const double ia = 1.0 / w.plane.sigma_alignment, id = 1.0 / w.plane.sigma_distance;
    const int r = rows.add("plane", 3);
    rows.value(r, Vec3(ia * v.alignment.x(), ia * v.alignment.y(), id * v.distance));
    rows.block(r, frame(k, err::kTheta), (ia * J.r1_imu_rotation).eval());
    rows.block(r + 2, frame(k, err::kTheta), (id * J.r2_imu_rotation).eval());
    rows.block(r + 2, frame(k, err::kPosition), (id * J.r2_imu_position).eval());
    rows.block(r, L.plane, (ia * J.r1_plane_rotation).eval());
    rows.block(r + 2, L.plane, (id * J.r2_plane_rotation).eval());
    rows.block(r + 2, L.plane + 2, Eigen::Matrix<double, 1, 1>(id * J.r2_distance));
    rows.block(r, L.ext, (ia * J.r1_ext_rotation).eval());
    rows.block(r + 2, L.ext, (id * J.r2_ext_rotation).eval());
    rows.block(r + 2, L.ext + 3, (id * J.r2_ext_translation).eval());
  }

  const PriorConfig& pc = p.config.priors;
  if (pc.plane_angle && L.plane >= 0) {
    // Prior normal expressed in the ground frame must be e3; the yaw of R^g_w drops out.
    const Vec3 m = x.plane.ground_from_world * p.plane_normal_prior;
    const double inv = 1.0 / pc.plane_angle_sigma;
    const int r = rows.add("prior_plane_angle", 2);
    rows.value(r, inv * m.head<2>());
    rows.block(r, L.plane, (-inv * hat(m).topLeftCorner<2, 2>()).eval());
  }
  if (pc.plane_distance && L.plane >= 0) {
    const double inv = 1.0 / pc.plane_distance_sigma;
    const int r = rows.add("prior_plane_distance", 1);
    rows.value(r, Eigen::VectorXd::Constant(1, inv * (x.plane.distance - p.plane_distance_prior)));
    rows.block(r, L.plane + 2, Eigen::Matrix<double, 1, 1>(inv));
  }
  if (pc.extrinsics && L.ext >= 0) {
    const Vec3 er = so3Log(p.ext_prior.base_from_imu.rotation.inverse() * x.ext.base_from_imu.rotation);
    const Vec3 et = x.ext.base_from_imu.translation - p.ext_prior.base_from_imu.translation;
    const double ir = 1.0 / pc.ext_rotation_sigma, it = 1.0 / pc.ext_translation_sigma;
    const int r = rows.add("prior_extrinsics", 6);
    Vec6 v;
    v << ir * er, it * et;
    rows.value(r, v);
    rows.block(r, L.ext, (ir * so3RightJacobianInverse(er)).eval());
    rows.block(r + 3, L.ext + 3, (it * Mat3::Identity()).eval());
  }
  if (pc.rbf && L.rbf >= 0) {
    Vec6 inv;
    inv << pc.rbf_sigma.cwiseInverse(), pc.rbf_sigma.cwiseInverse();
    const int r = rows.add("prior_rbf", 6);
    rows.value(r, inv.cwiseProduct(x.rbf.toVector() - p.rbf_prior.toVector()));
    rows.block(r, L.rbf, Eigen::Matrix<double, 6, 6>(inv.asDiagonal()));
  }
  if (pc.gauge) {
    const VioState& x0 = x.frames.front();
    const double inv = 1.0 / pc.gauge_sigma;
    const Vec3 e = so3Log(p.gauge_prior.rotation.inverse() * x0.orientation);
    const Eigen::RowVector3d axis = up(g).transpose() * p.gauge_prior.rotation.matrix();
    const int r = rows.add("prior_gauge", 4);
    Eigen::Vector4d v;
    v << inv * (x0.position - p.gauge_prior.translation), inv * axis.dot(e);
    rows.value(r, v);
    rows.block(r, frame(0, err::kPosition), (inv * Mat3::Identity()).eval());
    rows.block(r + 3, frame(0, err::kTheta), (inv * axis * so3RightJacobianInverse(e)).eval());
  }
  if (pc.bias) {
    const VioState& x0 = x.frames.front();
    const double ig = 1.0 / pc.gyro_bias_sigma, ia = 1.0 / pc.accel_bias_sigma;
    const int r = rows.add("prior_bias", 6);
    Vec6 v;
    v << ig * x0.gyro_bias, ia * x0.accel_bias;
    rows.value(r, v);
    rows.block(r, frame(0, err::kGyroBias), (ig * Mat3::Identity()).eval());
    rows.block(r + 3, frame(0, err::kAccelBias), (ia * Mat3::Identity()).eval());
  }
  return rows.finish(L.dim);
}

namespace {

std::map<std::string, double> groupRms(const Evaluation& e) {
  std::map<std::string, double> out;
  std::map<std::string, std::pair<double, int>> acc;
  int r = 0;
  for (const auto& [name, n] : e.groups) {
    acc[name].first += e.residual.segment(r, n).squaredNorm();
    acc[name].second += n;
    r += n;
  }
  for (const auto& [name, v] : acc) out[name] = std::sqrt(v.first / std::max(1, v.second));
  return out;
}

void addParameters(const Problem& p, const Estimate& x, const Eigen::SparseMatrix<double>& H, SolveReport& report) {
  const VariableLayout& L = p.layout;
  std::vector<std::pair<std::string, int>> wanted;  // (name, column or -1)
  std::vector<double> values;
  auto push = [&](const std::string& name, double value, int col) {
    wanted.emplace_back(name, col);
    values.push_back(value);
  };
  if (L.plane >= 0) {
    const Vec3 tilt = so3Log(x.plane.ground_from_world);
    push("plane_tilt_x", tilt.x(), L.plane);
    push("plane_tilt_y", tilt.y(), L.plane + 1);
    push("plane_d", x.plane.distance, L.plane + 2);
  }
  if (L.ext >= 0) {
    const Vec3 r = so3Log(x.ext.base_from_imu.rotation);
    const Vec3& t = x.ext.base_from_imu.translation;
    const char* axes[] = {"x", "y", "z"};
    for (int i = 0; i < 3; ++i) push(std::string("ext_rot_") + axes[i], r(i), L.ext + i);
    for (int i = 0; i < 3; ++i) push(std::string("ext_t_") + axes[i], t(i), L.ext + 3 + i);
  }
  if (L.rbf >= 0) {
    const Vec6 v = x.rbf.toVector();
    const char* names[] = {"rbf_lin_s", "rbf_lin_mu", "rbf_lin_sigma", "rbf_ang_s", "rbf_ang_mu", "rbf_ang_sigma"};
    for (int i = 0; i < 6; ++i) push(names[i], v(i), L.rbf + i);
  }
  if (wanted.empty()) return;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
  const bool ok = ldlt.info() == Eigen::Success;
  if (!ok) report.warnings.push_back("normal equations singular at the solution; standard deviations unavailable");
  for (std::size_t i = 0; i < wanted.size(); ++i) {
    double sd = 0.0;
    if (ok) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(L.dim);
      e(wanted[i].second) = 1.0;
      const Eigen::VectorXd c = ldlt.solve(e);
      sd = std::sqrt(std::max(0.0, c(wanted[i].second)));
    }
    report.parameters.push_back({wanted[i].first, values[i], sd});
  }
}

}  // namespace

SolveResult solve(const Problem& problem) {
  const SolverOptions& opt = problem.config.solver;
  SolveResult result;
  SolveReport& rep = result.report;
  Estimate x = problem.initial;
  Evaluation ev = evaluate(problem, x);
  double cost = ev.cost();
  rep.initial_cost = cost;
  rep.cost_history.push_back(cost);
  double lambda = opt.initial_lambda;
  rep.termination = "max_iterations";

  Eigen::SparseMatrix<double> H;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const Eigen::SparseMatrix<double> Jt = ev.jacobian.transpose();
    H = Jt * ev.jacobian;
    const Eigen::VectorXd grad = Jt * ev.residual;
    if (cost == 0.0 || grad.cwiseAbs().maxCoeff() < opt.gradient_tolerance) {
      rep.converged = true;
      rep.termination = "gradient";
      break;
    }
    if (cost < opt.absolute_cost_tolerance) {
      rep.converged = true;
      rep.termination = "absolute_cost";
      break;
    }
    Eigen::VectorXd diag = H.diagonal();
    const double floor = 1e-12 * std::max(1.0, diag.maxCoeff());
    diag = diag.cwiseMax(floor);

    bool accepted = false;
    while (!accepted && lambda < 1e12) {
      Eigen::SparseMatrix<double> A = H;
      for (int i = 0; i < A.rows(); ++i) A.coeffRef(i, i) += lambda * diag(i);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
      if (ldlt.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd step = -ldlt.solve(grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const Estimate candidate = retract(problem, x, step);
      Evaluation next;
      double c = std::numeric_limits<double>::infinity();
      try {
        next = evaluate(problem, candidate);
        c = next.cost();
      } catch (const std::exception&) {
        // Step left the parameter domain (e.g. a non-positive RBF width); treat as rejected.
      }
      if (std::isfinite(c) && c < cost) {
        const double decrease = (cost - c) / cost;
        x = candidate;
        ev = std::move(next);
        cost = c;
        lambda *= 0.5;
        accepted = true;
        rep.iterations = it + 1;
        rep.cost_history.push_back(cost);
        if (decrease < opt.relative_cost_tolerance) {
          rep.converged = true;
          rep.termination = "relative_cost";
        }
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) {
      // No damped step lowers the cost: already at a minimum up to round-off, or singular beyond damping.
      rep.converged = grad.cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, cost);
      rep.termination = rep.converged ? "no_decrease" : "damping_limit";
      break;
    }
    if (rep.converged) break;
  }
  rep.final_cost = cost;
  rep.group_rms = groupRms(ev);
  const Eigen::SparseMatrix<double> Jt = ev.jacobian.transpose();
  addParameters(problem, x, Jt * ev.jacobian, rep);
  if (problem.layout.rbf >= 0 && (x.rbf.linear.scale <= 0.0 || x.rbf.angular.scale <= 0.0)) {
    rep.warnings.push_back("RBF scale estimate is not positive");
  }
  result.estimate = std::move(x);
  return result;
}

std::string toJson(const SolveReport& r) {
  nlohmann::ordered_json j;
  j["iterations"] = r.iterations;
  j["initial_cost"] = r.initial_cost;
  j["final_cost"] = r.final_cost;
  j["converged"] = r.converged;
  j["termination"] = r.termination;
  j["cost_history"] = r.cost_history;
  j["group_rms"] = nlohmann::ordered_json::object();
  for (const auto& [name, v] : r.group_rms) j["group_rms"][name] = v;
  j["parameters"] = nlohmann::ordered_json::array();
  for (const auto& p : r.parameters) j["parameters"].push_back({{"name", p.name}, {"value", p.value}, {"stddev", p.stddev}});
  j["warnings"] = r.warnings;
  return j.dump(2);
}

double gravityDirectionError(const VioState& estimate, const VioState& truth, const GravityModel& g) {
  const Vec3 a = estimate.orientation.inverse() * g.gravity;
  const Vec3 b = truth.orientation.inverse() * g.gravity;
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace planarvio
