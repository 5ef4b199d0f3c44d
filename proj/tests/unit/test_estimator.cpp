#include <gtest/gtest.h>

#include <cmath>

#include "json.hpp"
#include "planarvio/estimator.hpp"
#include "testing.hpp"

using namespace planarvio;
using planarvio::testing::numericJacobian;
using planarvio::testing::relativeError;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

Scenario noiseFree(Scenario s) {
  s.noise = NoiseLevels{0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  return s;
}

EstimatorConfig configFor(const Simulation& sim) {
  EstimatorConfig cfg;
  cfg.gravity = sim.truth.gravity;
  return cfg;
}

Problem truthProblem(const Simulation& sim, const EstimatorConfig& cfg) {
  return buildProblem(sim.log, truthEstimate(sim.truth), sim.truth.ext, sim.truth.frames.front().pose(), cfg);
}

double planeAngleError(const PlaneParams& a, const PlaneParams& b) {
  return std::atan2(a.normal().cross(b.normal()).norm(), a.normal().dot(b.normal()));
}

// Three frames after a short standstill: small enough for a dense finite-difference audit.
Simulation shortRun(bool noise) {
  Scenario s = profileScenario("circle");
  s.prelude = 0.1;
  s.script = {{0.1, 0.5, 0.3}};
  if (!noise) s = noiseFree(s);
  return generate(s);
}

}  // namespace

TEST(BuildProblem, CountsTermsForTwoFrames) {
  Scenario s = noiseFree(profileScenario("straight"));
  s.prelude = 0.0;
  s.script = {{0.1, 0.5, 0.0}};
  const Simulation sim = generate(s);
  ASSERT_EQ(sim.log.frame_stamps.size(), 2u);
  EstimatorConfig cfg = configFor(sim);
  cfg.residuals.stereo = false;
  cfg.residuals.plane = false;
  const Problem p = truthProblem(sim, cfg);
  EXPECT_EQ(p.count("motion"), 1);
  EXPECT_EQ(p.count("imu"), 1);
  EXPECT_EQ(p.count("stereo"), 0);
  EXPECT_EQ(p.count("plane"), 0);
  EXPECT_EQ(p.count("prior_plane_angle"), 0);
  EXPECT_EQ(p.count("prior_extrinsics"), 1);
  EXPECT_EQ(p.count("prior_rbf"), 1);
  EXPECT_EQ(p.count("prior_gauge"), 1);
  EXPECT_EQ(p.layout.plane, -1);
  EXPECT_EQ(p.layout.dim, 30 + 6 + 6);
  const Evaluation e = evaluate(p, p.initial);
  EXPECT_EQ(e.residual.size(), 15 + 3 + 6 + 6 + 4 + 6);
  EXPECT_THROW(p.count("bogus"), std::invalid_argument);
}

TEST(BuildProblem, RejectsBadInput) {
  const Simulation sim = shortRun(false);
  EstimatorConfig cfg = configFor(sim);
  cfg.standstill = 0.05;
  MeasurementLog one = sim.log;
  one.frame_stamps.resize(1);
  Estimate x = truthEstimate(sim.truth);
  EXPECT_THROW(buildProblem(one, x, sim.truth.ext, Pose3{}, cfg), std::invalid_argument);
  x.frames.pop_back();
  EXPECT_THROW(buildProblem(sim.log, x, sim.truth.ext, Pose3{}, cfg), std::invalid_argument);
  x = truthEstimate(sim.truth);
  x.landmarks.clear();
  EXPECT_THROW(buildProblem(sim.log, x, sim.truth.ext, Pose3{}, cfg), std::invalid_argument);
  EstimatorConfig none = cfg;
  none.residuals = {false, false, false, false};
  EXPECT_THROW(buildProblem(sim.log, truthEstimate(sim.truth), sim.truth.ext, Pose3{}, none), std::invalid_argument);
}

TEST(BuildProblem, DisablingAGroupRemovesExactlyItsRows) {
  const Simulation sim = shortRun(false);
  EstimatorConfig cfg = configFor(sim);
  cfg.standstill = 0.05;
  const Problem full = truthProblem(sim, cfg);
  const Evaluation ef = evaluate(full, full.initial);
  std::map<std::string, int> rows;
  for (const auto& [g, n] : ef.groups) rows[g] += n;
  EXPECT_EQ(rows["stereo"], 4 * full.count("stereo"));
  cfg.residuals.stereo = false;
  const Problem less = truthProblem(sim, cfg);
  const Evaluation el = evaluate(less, less.initial);
  EXPECT_EQ(ef.residual.size() - el.residual.size(), rows["stereo"]);
  EXPECT_TRUE(less.layout.landmarks.empty());
}

TEST(BuildProblem, StationaryPlaneInitializationMatchesTruth) {
  const Simulation sim = generate(noiseFree(profileScenario("stationary")));
  const EstimatorConfig cfg = configFor(sim);
  const Vec3 n = accelerometerPlaneNormal(sim.log, sim.truth.frames.front(), sim.truth.ext, cfg.gravity, cfg.standstill);
  EXPECT_LT((n - sim.truth.plane.normal()).norm(), 1e-12);
  // A tilted first-frame guess is levelled before the base axis is mapped.
  VioState tilted = sim.truth.frames.front();
  tilted.orientation = so3Exp(Vec3(0.02, -0.01, 0.0)) * tilted.orientation;
  const Vec3 m = accelerometerPlaneNormal(sim.log, tilted, sim.truth.ext, cfg.gravity, cfg.standstill);
  EXPECT_LT((m - sim.truth.plane.normal()).norm(), 1e-12);
}

TEST(Evaluate, ZeroNoiseTruthIsExact) {
  const Simulation sim = generate(noiseFree(profileScenario("varying")));
  const Problem p = truthProblem(sim, configFor(sim));
  const Evaluation e = evaluate(p, p.initial);
  int r = 0;
  for (const auto& [g, n] : e.groups) {
    EXPECT_LT(e.residual.segment(r, n).norm() / std::sqrt(n), 1e-10) << g;
    r += n;
  }
}

TEST(Evaluate, JacobianMatchesFiniteDifferences) {
  const Simulation sim = shortRun(true);
  EstimatorConfig cfg = configFor(sim);
  cfg.standstill = 0.05;
  cfg.priors.plane_distance = true;
  const Problem p = buildProblem(sim.log, perturbedTruth(sim.truth, {}), sim.truth.ext,
                                 sim.truth.frames.front().pose(), cfg);
  ASSERT_GT(p.count("stereo"), 0);
  const Evaluation e = evaluate(p, p.initial);
  const Eigen::MatrixXd J = e.jacobian;
  const Eigen::MatrixXd N = numericJacobian(
      [&](const Eigen::VectorXd& d) { return evaluate(p, retract(p, p.initial, d, false)).residual; },
      Eigen::VectorXd::Zero(p.layout.dim), 1e-6);
  int r = 0;
  for (const auto& [g, n] : e.groups) {
    EXPECT_LT(relativeError(J.middleRows(r, n), N.middleRows(r, n)), 1e-4) << g;
    r += n;
  }
}

TEST(Solve, TruthInitializationIsAFixedPoint) {
  const Simulation sim = generate(noiseFree(profileScenario("varying")));
  const SolveResult r = solve(truthProblem(sim, configFor(sim)));
  EXPECT_TRUE(r.report.converged);
  EXPECT_LE(r.report.iterations, 2);
  EXPECT_LT(r.report.final_cost, 1e-16);
}

TEST(Solve, NoiseFreeRecoversParameters) {
  const Simulation sim = generate(noiseFree(profileScenario("varying")));
  EstimatorConfig cfg = configFor(sim);
  cfg.priors.rbf = false;
  const Problem p = buildProblem(sim.log, perturbedTruth(sim.truth, {}), sim.truth.ext,
                                 sim.truth.frames.front().pose(), cfg);
  const SolveResult r = solve(p);
  EXPECT_TRUE(r.report.converged) << r.report.termination;
  EXPECT_LT((r.estimate.rbf.toVector() - sim.truth.rbf.toVector()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT(planeAngleError(r.estimate.plane, sim.truth.plane), 1e-8);
  EXPECT_LT(std::abs(r.estimate.plane.distance - sim.truth.plane.distance), 1e-8);
  for (std::size_t i = 1; i < r.report.cost_history.size(); ++i) {
    EXPECT_LT(r.report.cost_history[i], r.report.cost_history[i - 1]);
  }
}

TEST(Solve, StraightStaysNearWeakRbfPrior) {
  const Simulation sim = generate(profileScenario("straight"));
  const EstimatorConfig cfg = configFor(sim);
  const Problem p = buildProblem(sim.log, perturbedTruth(sim.truth, {}), sim.truth.ext,
                                 sim.truth.frames.front().pose(), cfg);
  const SolveResult r = solve(p);
  EXPECT_TRUE(r.report.converged) << r.report.termination;
  const Vec6 d = r.estimate.rbf.toVector() - p.rbf_prior.toVector();
  Vec6 sigma;
  sigma << cfg.priors.rbf_sigma, cfg.priors.rbf_sigma;
  EXPECT_LT(d.cwiseQuotient(sigma).cwiseAbs().maxCoeff(), 3.0);
}

TEST(Solve, StationaryPlaneAngleAtDefaultNoise) {
  const Simulation sim = generate(profileScenario("stationary"));
  const EstimatorConfig cfg = configFor(sim);
  const Problem p = buildProblem(sim.log, perturbedTruth(sim.truth, {}), sim.truth.ext,
                                 sim.truth.frames.front().pose(), cfg);
  const SolveResult r = solve(p);
  EXPECT_TRUE(r.report.converged) << r.report.termination;
  EXPECT_LT(planeAngleError(r.estimate.plane, sim.truth.plane), 0.5 * kDeg);
}

TEST(Solve, SingularProblemReportsInsteadOfThrowing) {
  const Simulation sim = shortRun(false);
  EstimatorConfig cfg = configFor(sim);
  cfg.standstill = 0.05;
  cfg.residuals = {false, true, false, false};  // stereo only: gauge freedom everywhere
  cfg.priors = PriorConfig{false, false, false, false, false, false};
  const Problem p = buildProblem(sim.log, perturbedTruth(sim.truth, {}), sim.truth.ext, Pose3{}, cfg);
  SolveResult r;
  EXPECT_NO_THROW(r = solve(p));
  EXPECT_LE(r.report.final_cost, r.report.initial_cost);
}

TEST(Report, JsonHasDocumentedFields) {
  const Simulation sim = shortRun(true);
  EstimatorConfig cfg = configFor(sim);
  cfg.standstill = 0.05;
  const SolveResult r = solve(buildProblem(sim.log, perturbedTruth(sim.truth, {}), sim.truth.ext,
                                           sim.truth.frames.front().pose(), cfg));
  const auto j = nlohmann::json::parse(toJson(r.report));
  for (const char* key : {"iterations", "initial_cost", "final_cost", "converged", "termination", "cost_history",
                          "group_rms", "parameters", "warnings"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["parameters"].size(), 3u + 6u + 6u);
  EXPECT_EQ(j["parameters"][0]["name"], "plane_tilt_x");
  EXPECT_GE(j["parameters"][2]["stddev"].get<double>(), 0.0);
}

TEST(Metrics, GravityDirectionError) {
  VioState a, b;
  const GravityModel g;
  EXPECT_NEAR(gravityDirectionError(a, b, g), 0.0, 1e-15);
  b.orientation = so3Exp(Vec3(0.01, 0.0, 0.0));
  EXPECT_NEAR(gravityDirectionError(a, b, g), 0.01, 1e-12);
  b.orientation = so3Exp(Vec3(0.0, 0.0, 0.3));  // yaw does not move gravity
  EXPECT_NEAR(gravityDirectionError(a, b, g), 0.0, 1e-12);
}
