#include "planarvio/runner.hpp"

#include <fmt/os.h>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "planarvio/observability.hpp"
#include "planarvio/scenario_io.hpp"

namespace planarvio {
namespace {

using ordered = nlohmann::ordered_json;

constexpr double kRad2Deg = 180.0 / std::numbers::pi;

// Acceptance thresholds shared by --check.
constexpr double kProductTol = 1e-8;
constexpr double kDistanceTol = 1e-10;
constexpr double kTiltTol = 1e-6;
constexpr double kRbfZeroTol = 1e-12;
constexpr double kRbfConditionTol = 1e-8;
constexpr double kPlaneAngleTol = 0.5 / kRad2Deg;
constexpr double kRbfRelativeTol = 0.10;
constexpr double kPriorSigmas = 3.0;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Scenario quiet(Scenario s) {
  s.noise = NoiseLevels{0.0, 0.0, 0.0, 0.0, s.noise.gyro_bias, s.noise.accel_bias};
  return s;
}

void truncate(LinearizationPoint& p, int frames) {
  const auto K = static_cast<std::size_t>(frames);
  if (p.states.size() <= K) return;
  p.stamps.resize(K);
  p.states.resize(K);
  p.transitions.resize(K - 1);
  if (!p.windows.empty()) p.windows.resize(K - 1);
}

void keepVisible(LinearizationPoint& p, int limit) {
  std::vector<Vec3> kept;
  for (const Vec3& f : p.landmarks) {
    if (static_cast<int>(kept.size()) == limit) break;
    bool ok = true;
    for (const auto& x : p.states) ok = ok && featureJacobian(x.pose(), f, p.baseline).depth > 0.5;
    if (ok) kept.push_back(f);
  }
  p.landmarks = kept;
}

MatrixRank rankRow(const std::string& name, const Eigen::MatrixXd& M) {
  MatrixRank r;
  r.matrix = name;
  r.rows = static_cast<int>(M.rows());
  r.columns = static_cast<int>(M.cols());
  const RankReport rep = rankReport(M, {});
  r.rank = rep.rank;
  r.nullspace_dim = rep.nullspace_dim;
  if (rep.singular_values.size() > 0) {
    r.sigma_max = rep.singular_values(0);
    r.sigma_min = rep.singular_values(rep.singular_values.size() - 1);
  }
  return r;
}

void addCandidates(ObservabilityReport& out, const std::string& matrix, const Eigen::MatrixXd& M,
                   const std::vector<NullspaceBasis>& candidates) {
  const RankReport rep = rankReport(M, candidates);
  for (const auto& c : rep.candidates) {
    out.candidates.push_back({matrix, c.name, c.columns, c.residual, c.max_principal_angle});
  }
  for (const auto& w : rep.warnings) out.warnings.push_back(matrix + ": " + w);
}

bool windowConstant(const CommandWindow& w, bool linear) {
  if (w.commands.empty()) return true;
  const double first = linear ? w.commands.front().v : w.commands.front().omega;
  return std::all_of(w.commands.begin(), w.commands.end(),
                     [&](const ControlCommand& c) { return (linear ? c.v : c.omega) == first; });
}

double angleBetween(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

const char* excitationName(Excitation e) {
  switch (e) {
    case Excitation::Constant:
      return "constant";
    case Excitation::Varying:
      return "varying";
    default:
      return "mixed";
  }
}

std::string slug(const std::string& name) {
  std::string s;
  for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  return s.empty() ? "scenario" : s;
}

ordered optionalJson(const std::optional<double>& v) { return v ? ordered(*v) : ordered(nullptr); }

ordered toOrdered(const ObservabilityReport& r) {
  ordered j;
  j["frames"] = r.frames;
  j["landmarks"] = r.landmarks;
  ordered ranks = ordered::array();
  for (const auto& m : r.ranks) {
    ranks.push_back({{"matrix", m.matrix},
                     {"rows", m.rows},
                     {"columns", m.columns},
                     {"rank", m.rank},
                     {"nullspace_dim", m.nullspace_dim},
                     {"sigma_max", m.sigma_max},
                     {"sigma_min", m.sigma_min}});
  }
  j["ranks"] = ranks;
  ordered cands = ordered::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"matrix", c.matrix},
                     {"candidate", c.candidate},
                     {"columns", c.columns},
                     {"residual", c.residual},
                     {"max_principal_angle", c.max_principal_angle}});
  }
  j["candidates"] = cands;
  ordered rbf = ordered::array();
  for (const auto& c : r.rbf_columns) {
    rbf.push_back({{"channel", c.channel}, {"parameter", c.parameter}, {"norm", c.norm}, {"unobservable", c.unobservable}});
  }
  j["rbf_columns"] = rbf;
  j["linear_windows_constant"] = r.linear_windows_constant;
  j["rbf_linear_rank"] = r.rbf_linear_rank;
  j["rbf_linear_condition"] = r.rbf_linear_condition;
  j["plane_product"] = optionalJson(r.plane_product);
  j["plane_distance_pattern"] = optionalJson(r.plane_distance_pattern);
  j["plane_distance_in_nullspace"] = optionalJson(r.plane_distance_in_nullspace);
  j["tilt_content_features"] = optionalJson(r.tilt_content_features);
  j["tilt_content_plane"] = optionalJson(r.tilt_content_plane);
  j["forward_inverse_rank_equal"] =
      r.forward_inverse_rank_equal ? ordered(*r.forward_inverse_rank_equal) : ordered(nullptr);
  j["warnings"] = r.warnings;
  return j;
}

ordered toOrdered(const EstimationReport& r) {
  ordered j;
  j["solve"] = ordered::parse(toJson(r.solve));
  ordered errors = ordered::array();
  for (const auto& e : r.errors) {
    errors.push_back({{"quantity", e.quantity}, {"estimate", e.estimate}, {"truth", e.truth}, {"error", e.error}});
  }
  j["errors"] = errors;
  j["plane_angle_error_deg"] = r.plane_angle_error * kRad2Deg;
  j["gravity_error_deg"] = r.gravity_error * kRad2Deg;
  j["rbf_max_relative_error"] = r.rbf_max_relative_error;
  j["rbf_prior_sigmas"] = std::vector<double>(r.rbf_prior_sigmas.data(), r.rbf_prior_sigmas.data() + 6);
  j["linear_excitation"] = excitationName(r.linear);
  j["angular_excitation"] = excitationName(r.angular);
  j["warnings"] = r.warnings;
  return j;
}

ordered toOrdered(const std::vector<CheckResult>& checks) {
  ordered a = ordered::array();
  for (const auto& c : checks) {
    a.push_back({{"name", c.name},
                 {"value", c.value},
                 {"relation", c.relation},
                 {"threshold", c.threshold},
                 {"pass", c.pass}});
  }
  return a;
}

void writeObservabilityCsv(const ObservabilityReport& r, const std::filesystem::path& dir) {
  {
    auto out = fmt::output_file((dir / "observability_ranks.csv").string());
    out.print("matrix,rows,columns,rank,nullspace_dim,sigma_max,sigma_min\n");
    for (const auto& m : r.ranks) {
      out.print("{},{},{},{},{},{},{}\n", m.matrix, m.rows, m.columns, m.rank, m.nullspace_dim, m.sigma_max,
                m.sigma_min);
    }
  }
  {
    auto out = fmt::output_file((dir / "observability_candidates.csv").string());
    out.print("matrix,candidate,columns,residual,max_principal_angle\n");
    for (const auto& c : r.candidates) {
      out.print("{},{},{},{},{}\n", c.matrix, c.candidate, c.columns, c.residual, c.max_principal_angle);
    }
  }
  {
    auto out = fmt::output_file((dir / "rbf_columns.csv").string());
    out.print("channel,parameter,norm,unobservable\n");
    for (const auto& c : r.rbf_columns) out.print("{},{},{},{}\n", c.channel, c.parameter, c.norm, c.unobservable ? 1 : 0);
  }
}

void writeEstimationCsv(const EstimationReport& r, const std::filesystem::path& dir) {
  {
    auto out = fmt::output_file((dir / "estimate_errors.csv").string());
    out.print("quantity,estimate,truth,error\n");
    for (const auto& e : r.errors) out.print("{},{},{},{}\n", e.quantity, e.estimate, e.truth, e.error);
  }
  {
    auto out = fmt::output_file((dir / "estimate_trajectory.csv").string());
    out.print("frame,t,px,py,pz,px_true,py_true,pz_true,rotation_error_deg\n");
    for (const auto& t : r.trajectory) {
      out.print("{},{},{},{},{},{},{},{},{}\n", t.frame, t.stamp, t.estimate.x(), t.estimate.y(), t.estimate.z(),
                t.truth.x(), t.truth.y(), t.truth.z(), t.rotation_error * kRad2Deg);
    }
  }
  {
    auto out = fmt::output_file((dir / "estimate_cost.csv").string());
    out.print("iteration,cost\n");
    for (std::size_t i = 0; i < r.solve.cost_history.size(); ++i) out.print("{},{}\n", i, r.solve.cost_history[i]);
  }
  {
    auto out = fmt::output_file((dir / "estimate_parameters.csv").string());
    out.print("name,value,stddev\n");
    for (const auto& p : r.solve.parameters) out.print("{},{},{}\n", p.name, p.value, p.stddev);
  }
}

CheckResult lessThan(const std::string& name, double value, double threshold) {
  return {name, value, "<", threshold, value < threshold};
}

}  // namespace

Analysis parseAnalysis(const std::string& text) {
  const std::string t = lower(text);
  if (t == "observability") return Analysis::Observability;
  if (t == "estimate") return Analysis::Estimate;
  if (t == "both") return Analysis::Both;
  throw std::invalid_argument("analysis must be observability, estimate or both, got '" + text + "'");
}

MeasurementFlags parseMeasurements(const std::string& list) {
  MeasurementFlags f{false, false, false, false, false};
  std::stringstream ss(list);
  std::string item;
  int n = 0;
  while (std::getline(ss, item, ',')) {
    item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
    item = lower(item);
    if (item.empty()) continue;
    if (item == "imu") {
      f.imu = true;
    } else if (item == "features" || item == "stereo") {
      f.features = true;
    } else if (item == "motion" || item == "motion_inverse") {
      f.motion = true;
    } else if (item == "motion_forward") {
      f.motion_forward = true;
    } else if (item == "plane") {
      f.plane = true;
    } else {
      throw std::invalid_argument("unknown measurement '" + item +
                                  "' (expected imu, features, stereo, motion, motion_forward, plane)");
    }
    ++n;
  }
  if (n == 0) throw std::invalid_argument("measurement selection is empty");
  return f;
}

Excitation channelExcitation(const CommandScript& script, bool linear) {
  bool all_varying = !script.empty(), all_constant = true;
  for (const auto& s : script) {
    const double amp = linear ? s.v_amplitude : s.omega_amplitude;
    const double period = linear ? s.v_period : s.omega_period;
    const bool sinus = amp != 0.0 && period > 0.0;
    all_varying = all_varying && sinus;
    all_constant = all_constant && !sinus && (linear ? s.v : s.omega) == (linear ? script[0].v : script[0].omega);
  }
  if (all_varying) return Excitation::Varying;
  if (all_constant) return Excitation::Constant;
  return Excitation::Mixed;
}

ObservabilityReport analyzeObservability(const Scenario& scenario, const MeasurementFlags& m,
                                         const ObservabilityOptions& options) {
  if (options.frames < 2) throw std::invalid_argument("observability: need at least two frames");
  Scenario s = quiet(scenario);
  s.prelude = 0.0;
  const Simulation sim = generate(s);
  LinearizationPoint p = truthLinearization(sim, s.window_size);
  truncate(p, options.frames);
  if (m.features) {
    keepVisible(p, options.landmarks);
  } else {
    p.landmarks.clear();
  }

  ObservabilityReport out;
  out.scenario = scenario.name;
  out.frames = static_cast<int>(p.states.size());
  out.landmarks = static_cast<int>(p.landmarks.size());
  if (m.features && out.landmarks < options.landmarks) {
    out.warnings.push_back(fmt::format("only {} landmarks stay in front of the camera in every frame", out.landmarks));
  }
  const int L = out.landmarks;
  const StateLayout layout(BlockFlags{true, true, true, L});
  const std::vector<NullspaceBasis> all_candidates{
      analyticOrientationNullspace(p, layout), analyticTranslationNullspace(p, layout), analyticYawNullspace(p, layout),
      planeDistanceDirection(layout), analyticRbfNullspace(layout)};

  MeasurementSelection selected{m.plane, m.motion, m.motion_forward, m.features && L > 0};
  if (!selected.empty()) {
    const ObservabilityMatrix M = buildObservability(p, layout, selected);
    out.ranks.push_back(rankRow("selected", M.matrix));
    addCandidates(out, "selected", M.matrix, all_candidates);
    for (const auto& w : M.warnings) out.warnings.push_back(w);
  }

  if (m.plane) {
    const ObservabilityMatrix P = buildObservability(p, layout, {true, false, false, false});
    out.ranks.push_back(rankRow("plane", P.matrix));
    addCandidates(out, "plane", P.matrix, {all_candidates[0], all_candidates[1], all_candidates[3]});
    Eigen::MatrixXd both(layout.dim(), 6);
    both << all_candidates[0].basis, all_candidates[1].basis;
    out.plane_product = normalizedProductResidual(P.matrix, both);
    const Eigen::VectorXd Md = P.matrix * planeDistanceDirection(layout).basis;
    double pattern = 0.0;
    for (int k = 0; k < out.frames; ++k) {
      pattern = std::max({pattern, std::abs(Md(3 * k)), std::abs(Md(3 * k + 1)), std::abs(Md(3 * k + 2) - 1.0)});
    }
    out.plane_distance_pattern = pattern;

    PriorSelection anchors;
    anchors.position = anchors.extrinsics = true;
    const ObservabilityMatrix A = buildObservability(p, layout, {true, m.motion, m.motion_forward, m.features && L > 0}, anchors);
    out.ranks.push_back(rankRow("plane_anchored", A.matrix));
    const NullspaceBasis n = numericalNullspace(A.matrix);
    out.plane_distance_in_nullspace =
        n.basis.cols() > 0 ? n.basis.row(layout.planeDistance()).cwiseAbs().maxCoeff() : 0.0;
  }

  if (m.features && L >= 3) {
    const StateLayout tilt_layout(BlockFlags{true, false, false, L});
    const Eigen::MatrixXd tilt = tiltAxes(p.gravity);
    const ObservabilityMatrix F = buildObservability(p, tilt_layout, {false, false, false, true});
    out.ranks.push_back(rankRow("features_only", F.matrix));
    out.tilt_content_features = orientationContent(numericalNullspace(F.matrix).basis, p, tilt);
    if (m.plane) {
      PriorSelection priors;
      priors.plane_angle = true;
      const ObservabilityMatrix G = buildObservability(p, tilt_layout, {true, false, false, true}, priors);
      out.ranks.push_back(rankRow("plane_features_prior", G.matrix));
      out.tilt_content_plane = orientationContent(numericalNullspace(G.matrix).basis, p, tilt);
    }
  }

  if ((m.motion || m.motion_forward) && !p.windows.empty()) {
    const ObservabilityMatrix inv = buildObservability(p, layout, {false, true, false, false});
    const ObservabilityMatrix fwd = buildObservability(p, layout, {false, false, true, false});
    const MatrixRank ri = rankRow("motion_inverse", inv.matrix), rf = rankRow("motion_forward", fwd.matrix);
    out.ranks.push_back(ri);
    out.ranks.push_back(rf);
    out.forward_inverse_rank_equal = ri.rank == rf.rank;

    out.linear_windows_constant = std::all_of(p.windows.begin(), p.windows.end(),
                                              [](const CommandWindow& w) { return windowConstant(w, true); });
    const char* params[3] = {"scale", "center", "width"};
    for (const bool linear : {true, false}) {
      const Eigen::MatrixXd B = inv.matrix.middleCols(linear ? layout.rbfLinear() : layout.rbfAngular(), 3);
      out.ranks.push_back(rankRow(linear ? "rbf_linear" : "rbf_angular", B));
      const double largest = std::max(1.0, B.colwise().norm().maxCoeff());
      for (int c = 0; c < 3; ++c) {
        const double norm = B.col(c).norm();
        out.rbf_columns.push_back({linear ? "linear" : "angular", params[c], norm, norm < kRbfZeroTol * largest});
      }
      if (linear) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(B);
        const Eigen::VectorXd sv = svd.singularValues();
        out.rbf_linear_rank = out.ranks.back().rank;
        out.rbf_linear_condition = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
      }
    }
  }
  return out;
}

EstimationReport runEstimation(const Scenario& scenario, const MeasurementFlags& m, const EstimatorConfig& base) {
  const Simulation sim = generate(scenario);
  EstimationReport out;
  out.scenario = scenario.name;
  out.linear = channelExcitation(scenario.script, true);
  out.angular = channelExcitation(scenario.script, false);

  EstimatorConfig cfg = base;
  cfg.gravity = sim.truth.gravity;
  cfg.window_size = scenario.window_size;
  cfg.residuals = {m.imu, m.features, m.motion, m.plane};
  if (m.motion_forward) out.warnings.push_back("the estimator uses the inverse motion model; motion_forward ignored");
  cfg.standstill = std::min(cfg.standstill, scenario.prelude);
  if (cfg.residuals.plane && cfg.priors.plane_angle && scenario.prelude < 0.1) {
    cfg.priors.plane_angle = false;
    out.warnings.push_back("standstill prelude shorter than 0.1 s: plane-angle prior disabled");
  }
  if (!cfg.residuals.motion) cfg.priors.rbf = false;

  Perturbation pert;
  pert.seed = scenario.seed;
  const Problem problem =
      buildProblem(sim.log, perturbedTruth(sim.truth, pert), sim.truth.ext, sim.truth.frames.front().pose(), cfg);
  const SolveResult result = solve(problem);
  out.solve = result.report;
  for (const auto& w : result.report.warnings) out.warnings.push_back(w);
  const Estimate& x = result.estimate;
  const GroundTruth& truth = sim.truth;
  const Vec3 up = -truth.gravity.gravity.normalized();

  if (problem.layout.plane >= 0) {
    out.plane_angle_error = angleBetween(x.plane.normal(), truth.plane.normal());
    out.errors.push_back({"plane_tilt_deg", angleBetween(x.plane.normal(), up) * kRad2Deg,
                          angleBetween(truth.plane.normal(), up) * kRad2Deg, out.plane_angle_error * kRad2Deg});
    out.errors.push_back(
        {"plane_d", x.plane.distance, truth.plane.distance, std::abs(x.plane.distance - truth.plane.distance)});
  }
  if (problem.layout.ext >= 0) {
    const Rotation3& Re = x.ext.base_from_imu.rotation;
    const Rotation3& Rt = truth.ext.base_from_imu.rotation;
    out.errors.push_back({"ext_rotation_deg", so3Log(Re).norm() * kRad2Deg, so3Log(Rt).norm() * kRad2Deg,
                          so3Log(Rt.inverse() * Re).norm() * kRad2Deg});
    const char* axes[3] = {"ext_tx", "ext_ty", "ext_tz"};
    for (int i = 0; i < 3; ++i) {
      const double e = x.ext.base_from_imu.translation(i), t = truth.ext.base_from_imu.translation(i);
      out.errors.push_back({axes[i], e, t, std::abs(e - t)});
    }
  }
  if (problem.layout.rbf >= 0) {
    const Vec6 e = x.rbf.toVector(), t = truth.rbf.toVector(), prior = problem.rbf_prior.toVector();
    const char* names[6] = {"rbf_lin_scale", "rbf_lin_center", "rbf_lin_width",
                            "rbf_ang_scale", "rbf_ang_center", "rbf_ang_width"};
    for (int i = 0; i < 6; ++i) {
      const double rel = std::abs(e(i) - t(i)) / std::abs(t(i));
      out.errors.push_back({names[i], e(i), t(i), rel});
      out.rbf_max_relative_error = std::max(out.rbf_max_relative_error, rel);
      out.rbf_prior_sigmas(i) = std::abs(e(i) - prior(i)) / cfg.priors.rbf_sigma(i % 3);
    }
  }
  out.gravity_error = gravityDirectionError(x.frames.front(), truth.frames.front(), truth.gravity);
  out.errors.push_back({"gravity_direction_deg", out.gravity_error * kRad2Deg, 0.0, out.gravity_error * kRad2Deg});

  double pos2 = 0.0, rot2 = 0.0;
  for (std::size_t k = 0; k < x.frames.size(); ++k) {
    TrajectoryRow row;
    row.frame = static_cast<int>(k);
    row.stamp = truth.frame_stamps[k];
    row.estimate = x.frames[k].position;
    row.truth = truth.frames[k].position;
    row.rotation_error = so3Log(truth.frames[k].orientation.inverse() * x.frames[k].orientation).norm();
    pos2 += (row.estimate - row.truth).squaredNorm();
    rot2 += row.rotation_error * row.rotation_error;
    out.trajectory.push_back(row);
  }
  const double n = static_cast<double>(x.frames.size());
  out.errors.push_back({"position_rmse_m", std::sqrt(pos2 / n), 0.0, std::sqrt(pos2 / n)});
  out.errors.push_back({"rotation_rmse_deg", std::sqrt(rot2 / n) * kRad2Deg, 0.0, std::sqrt(rot2 / n) * kRad2Deg});
  return out;
}

std::vector<CheckResult> observabilityChecks(const ObservabilityReport& r) {
  std::vector<CheckResult> c;
  if (r.plane_product) c.push_back(lessThan("plane_rows_times_nullspace", *r.plane_product, kProductTol));
  if (r.plane_distance_pattern) {
    c.push_back({"plane_distance_pattern", *r.plane_distance_pattern, "==", 0.0, *r.plane_distance_pattern == 0.0});
  }
  if (r.plane_distance_in_nullspace) {
    c.push_back(lessThan("plane_distance_in_nullspace", *r.plane_distance_in_nullspace, kDistanceTol));
  }
  if (r.tilt_content_plane) c.push_back(lessThan("tilt_in_nullspace_with_plane", *r.tilt_content_plane, kTiltTol));
  if (r.forward_inverse_rank_equal) {
    c.push_back({"forward_inverse_rank_equal", *r.forward_inverse_rank_equal ? 1.0 : 0.0, "==", 1.0,
                 *r.forward_inverse_rank_equal});
  }
  if (!r.rbf_columns.empty()) {
    if (r.linear_windows_constant) {
      const double shape = std::max(r.rbf_columns[1].norm, r.rbf_columns[2].norm);
      c.push_back(lessThan("rbf_linear_shape_columns", shape, kRbfZeroTol));
    } else {
      c.push_back({"rbf_linear_rank", static_cast<double>(r.rbf_linear_rank), "==", 3.0, r.rbf_linear_rank == 3});
      c.push_back({"rbf_linear_condition", r.rbf_linear_condition, ">", kRbfConditionTol,
                   r.rbf_linear_condition > kRbfConditionTol});
    }
  }
  return c;
}

std::vector<CheckResult> estimationChecks(const EstimationReport& r, const PriorConfig& priors) {
  std::vector<CheckResult> c;
  c.push_back({"solver_converged", r.solve.converged ? 1.0 : 0.0, "==", 1.0, r.solve.converged});
  const bool has_plane = std::any_of(r.errors.begin(), r.errors.end(),
                                     [](const ErrorRow& e) { return e.quantity == "plane_tilt_deg"; });
  if (has_plane) c.push_back(lessThan("plane_angle_error_deg", r.plane_angle_error * kRad2Deg, kPlaneAngleTol * kRad2Deg));
  const bool has_rbf = std::any_of(r.errors.begin(), r.errors.end(),
                                   [](const ErrorRow& e) { return e.quantity == "rbf_lin_scale"; });
  if (has_rbf) {
    for (const bool linear : {true, false}) {
      const Excitation e = linear ? r.linear : r.angular;
      const int off = linear ? 0 : 3;
      const std::string channel = linear ? "linear" : "angular";
      if (e == Excitation::Varying) {
        double worst = 0.0;
        for (const auto& row : r.errors) {
          if (row.quantity.rfind(linear ? "rbf_lin_" : "rbf_ang_", 0) == 0) worst = std::max(worst, row.error);
        }
        c.push_back(lessThan("rbf_" + channel + "_relative_error", worst, kRbfRelativeTol));
      } else if (e == Excitation::Constant && priors.rbf) {
        c.push_back({"rbf_" + channel + "_prior_sigmas", r.rbf_prior_sigmas.segment<3>(off).maxCoeff(), "<=",
                     kPriorSigmas, r.rbf_prior_sigmas.segment<3>(off).maxCoeff() <= kPriorSigmas});
      }
    }
  }
  return c;
}

int run(const RunConfig& config, std::ostream& log, std::ostream& err) {
  if (config.scenarios.empty()) {
    err << "error: no scenario given\n";
    return 2;
  }
  const MeasurementFlags& m = config.measurements;
  if (!(m.imu || m.features || m.motion || m.motion_forward || m.plane)) {
    err << "error: measurement selection is empty\n";
    return 2;
  }
  std::vector<Scenario> scenarios;
  try {
    for (const auto& name : config.scenarios) {
      Scenario s = resolveScenario(name);
      if (config.seed) s.seed = *config.seed;
      scenarios.push_back(s);
    }
    std::filesystem::create_directories(config.out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  const bool obs = config.analysis != Analysis::Estimate;
  const bool est = config.analysis != Analysis::Observability;
  ordered summary;
  summary["analysis"] = obs && est ? "both" : (obs ? "observability" : "estimate");
  summary["check"] = config.check;
  summary["measurements"] = {{"imu", m.imu},
                             {"features", m.features},
                             {"motion", m.motion},
                             {"motion_forward", m.motion_forward},
                             {"plane", m.plane}};
  ordered list = ordered::array();
  std::map<std::string, int> used;
  int failed_checks = 0;
  int status = 0;
  for (const Scenario& s : scenarios) {
    std::string dirname = slug(s.name);
    if (used[dirname]++ > 0) dirname += "_" + std::to_string(used[dirname]);
    const std::filesystem::path dir = config.out / dirname;
    ordered entry;
    entry["name"] = s.name;
    entry["directory"] = dirname;
    entry["seed"] = s.seed;
    entry["scenario"] = ordered::parse(scenarioToJson(s));
    std::vector<CheckResult> checks;
    try {
      std::filesystem::create_directories(dir);
      {
        auto f = fmt::output_file((dir / "scenario.json").string());
        f.print("{}", scenarioToJson(s));
      }
      if (obs) {
        log << "[" << s.name << "] observability\n";
        const ObservabilityReport r = analyzeObservability(s, m);
        writeObservabilityCsv(r, dir);
        entry["observability"] = toOrdered(r);
        const auto c = observabilityChecks(r);
        checks.insert(checks.end(), c.begin(), c.end());
      }
      if (est) {
        log << "[" << s.name << "] estimate\n";
        const EstimationReport r = runEstimation(s, m);
        writeEstimationCsv(r, dir);
        entry["estimate"] = toOrdered(r);
        const auto c = estimationChecks(r);
        checks.insert(checks.end(), c.begin(), c.end());
      }
    } catch (const std::exception& e) {
      err << "error: scenario '" << s.name << "': " << e.what() << "\n";
      entry["error"] = e.what();
      status = 2;
    }
    for (const auto& c : checks) {
      if (!c.pass) ++failed_checks;
      log << "  " << (c.pass ? "ok  " : "FAIL") << " " << c.name << " = " << fmt::format("{:.6g}", c.value) << " "
          << c.relation << " " << fmt::format("{:.6g}", c.threshold) << "\n";
    }
    entry["checks"] = toOrdered(checks);
    list.push_back(entry);
  }
  summary["scenarios"] = list;
  summary["failed_checks"] = failed_checks;
  if (status == 0 && config.check && failed_checks > 0) status = 1;
  summary["exit_status"] = status;
  {
    auto f = fmt::output_file((config.out / "summary.json").string());
    f.print("{}\n", summary.dump(2));
  }
  if (config.check) log << (failed_checks == 0 ? "all checks passed\n" : fmt::format("{} checks failed\n", failed_checks));
  return status;
}

void listProfiles(std::ostream& out) {
  for (const auto& p : profileList()) out << p.name << "  " << p.description << "\n";
}

}  // namespace planarvio
