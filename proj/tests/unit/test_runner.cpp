#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "planarvio/runner.hpp"
#include "planarvio/scenario_io.hpp"

using namespace planarvio;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("planarvio_test_" + name);
  fs::remove_all(dir);
  return dir;
}

int runQuiet(const RunConfig& cfg, std::string* err_text = nullptr) {
  std::ostringstream log, err;
  const int code = run(cfg, log, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(ScenarioIo, RoundTripsEveryField) {
  Scenario s = profileScenario("varying");
  s.seed = 42;
  s.rates = {400, 40, 20};
  s.true_rbf.angular.width = 0.12;
  s.noise.pixel = 0.3;
  s.camera.baseline = 0.2;
  s.landmarks = 33;
  const Scenario r = parseScenario(scenarioToJson(s));
  EXPECT_EQ(scenarioToJson(r), scenarioToJson(s));
  EXPECT_EQ(r.seed, 42u);
  EXPECT_EQ(r.rates.imu, 400);
  EXPECT_DOUBLE_EQ(r.true_rbf.angular.width, 0.12);
  EXPECT_NEAR(r.roll, s.roll, 1e-15);
}

TEST(ScenarioIo, ProfileBaseWithOverrides) {
  const Scenario s = parseScenario(R"({"profile": "straight", "seed": 7, "noise": {"pixel": 0.0}})");
  EXPECT_EQ(s.name, "straight");
  EXPECT_EQ(s.seed, 7u);
  EXPECT_EQ(s.noise.pixel, 0.0);
  EXPECT_EQ(s.script.size(), profileScenario("straight").script.size());
}

TEST(ScenarioIo, ReportsBadConfigs) {
  EXPECT_THROW(parseScenario("{"), ScenarioError);
  EXPECT_THROW(parseScenario(R"({"profile": "straight", "extra": 1})"), ScenarioError);
  EXPECT_THROW(parseScenario(R"({"profile": "nope"})"), ScenarioError);
  EXPECT_THROW(parseScenario(R"({"seed": 3})"), ScenarioError);  // no script
  EXPECT_THROW(parseScenario(R"({"profile": "straight", "seed": "x"})"), ScenarioError);
  EXPECT_THROW(parseScenario(R"({"script": [{"duration": -1}]})"), ScenarioError);
  EXPECT_THROW(parseScenario(R"({"profile": "straight", "noise": {"gyro": -1}})"), ScenarioError);
  EXPECT_THROW(parseScenario(R"({"profile": "straight", "extrinsics": {"translation": [1, 2]}})"), ScenarioError);
  try {
    parseScenario(R"({"profile": "straight", "rates": {"imu": 200, "hz": 3}})");
    FAIL();
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find("hz"), std::string::npos);
  }
  EXPECT_THROW(resolveScenario("no-such-profile-or-file"), ScenarioError);
  EXPECT_EQ(resolveScenario("circle").name, "circle");
}

TEST(Flags, ParseAnalysisAndMeasurements) {
  EXPECT_EQ(parseAnalysis("both"), Analysis::Both);
  EXPECT_EQ(parseAnalysis("Observability"), Analysis::Observability);
  EXPECT_THROW(parseAnalysis("all"), std::invalid_argument);
  const MeasurementFlags m = parseMeasurements("plane, stereo,motion_forward");
  EXPECT_TRUE(m.plane && m.features && m.motion_forward);
  EXPECT_FALSE(m.imu || m.motion);
  EXPECT_THROW(parseMeasurements(""), std::invalid_argument);
  EXPECT_THROW(parseMeasurements("plane,lidar"), std::invalid_argument);
}

TEST(Flags, ChannelExcitation) {
  EXPECT_EQ(channelExcitation(scriptedProfile("straight"), true), Excitation::Constant);
  EXPECT_EQ(channelExcitation(scriptedProfile("varying"), true), Excitation::Varying);
  EXPECT_EQ(channelExcitation(scriptedProfile("varying"), false), Excitation::Varying);
  EXPECT_EQ(channelExcitation(scriptedProfile("stop-and-go"), true), Excitation::Mixed);
}

TEST(ListProfiles, StableAndComplete) {
  std::ostringstream a, b;
  listProfiles(a);
  listProfiles(b);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("straight"), std::string::npos);
  EXPECT_NE(a.str().find("varying"), std::string::npos);
  EXPECT_LT(a.str().find("stationary"), a.str().find("straight"));
}

TEST(Observability, StraightFlagsRbfShapeUnobservable) {
  const ObservabilityReport r = analyzeObservability(profileScenario("straight"), MeasurementFlags{});
  EXPECT_TRUE(r.linear_windows_constant);
  ASSERT_EQ(r.rbf_columns.size(), 6u);
  EXPECT_FALSE(r.rbf_columns[0].unobservable);
  EXPECT_TRUE(r.rbf_columns[1].unobservable);
  EXPECT_TRUE(r.rbf_columns[2].unobservable);
  EXPECT_LE(r.rbf_linear_rank, 1);
  for (const auto& c : observabilityChecks(r)) EXPECT_TRUE(c.pass) << c.name << " " << c.value;
}

TEST(Observability, VaryingReportsFullRbfRank) {
  const ObservabilityReport r = analyzeObservability(profileScenario("varying"), MeasurementFlags{});
  EXPECT_FALSE(r.linear_windows_constant);
  EXPECT_EQ(r.rbf_linear_rank, 3);
  EXPECT_GT(r.rbf_linear_condition, 1e-8);
  ASSERT_TRUE(r.plane_product.has_value());
  EXPECT_LT(*r.plane_product, 1e-8);
  EXPECT_EQ(*r.plane_distance_pattern, 0.0);
  for (const auto& c : observabilityChecks(r)) EXPECT_TRUE(c.pass) << c.name << " " << c.value;
}

TEST(Observability, SelectionControlsAnalyses) {
  MeasurementFlags m{false, false, true, false, false};
  const ObservabilityReport r = analyzeObservability(profileScenario("varying"), m);
  EXPECT_FALSE(r.plane_product.has_value());
  EXPECT_FALSE(r.tilt_content_plane.has_value());
  EXPECT_TRUE(r.forward_inverse_rank_equal.value_or(false));
  EXPECT_EQ(r.landmarks, 0);
}

TEST(Estimation, StationaryPlaneAngleWithPrior) {
  const EstimationReport r = runEstimation(profileScenario("stationary"), MeasurementFlags{});
  EXPECT_TRUE(r.solve.converged);
  EXPECT_LT(r.plane_angle_error, 0.5 * std::numbers::pi / 180.0);
  for (const auto& c : estimationChecks(r)) EXPECT_TRUE(c.pass) << c.name << " " << c.value;
}

TEST(Estimation, ChecksFollowExcitation) {
  EstimationReport r;
  r.solve.converged = true;
  r.linear = Excitation::Varying;
  r.angular = Excitation::Constant;
  r.errors = {{"rbf_lin_scale", 1.0, 1.0, 0.2}, {"rbf_ang_scale", 1.0, 1.0, 0.0}};
  r.rbf_prior_sigmas << 0, 0, 0, 4, 0, 0;
  const auto c = estimationChecks(r);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[1].name, "rbf_linear_relative_error");
  EXPECT_FALSE(c[1].pass);
  EXPECT_EQ(c[2].name, "rbf_angular_prior_sigmas");
  EXPECT_FALSE(c[2].pass);
}

TEST(Run, DeterministicReports) {
  RunConfig cfg;
  cfg.scenarios = {"varying"};
  cfg.out = scratch("det_a");
  ASSERT_EQ(runQuiet(cfg), 0);
  const fs::path a = cfg.out;
  cfg.out = scratch("det_b");
  ASSERT_EQ(runQuiet(cfg), 0);
  const fs::path b = cfg.out;
  int files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 1 + 8);
  const auto j = nlohmann::json::parse(slurp(a / "summary.json"));
  EXPECT_EQ(j["scenarios"][0]["name"], "varying");
  EXPECT_TRUE(j["scenarios"][0].contains("observability"));
  EXPECT_TRUE(j["scenarios"][0].contains("estimate"));
  EXPECT_EQ(slurp(a / "varying" / "observability_ranks.csv").substr(0, 6), "matrix");
}

TEST(Run, SeedOverrideChangesEstimate) {
  RunConfig cfg;
  cfg.scenarios = {"straight"};
  cfg.analysis = Analysis::Estimate;
  cfg.out = scratch("seed_a");
  ASSERT_EQ(runQuiet(cfg), 0);
  cfg.seed = 99;
  const fs::path a = cfg.out;
  cfg.out = scratch("seed_b");
  ASSERT_EQ(runQuiet(cfg), 0);
  EXPECT_NE(slurp(a / "straight" / "estimate_errors.csv"), slurp(cfg.out / "straight" / "estimate_errors.csv"));
  EXPECT_FALSE(fs::exists(cfg.out / "straight" / "observability_ranks.csv"));
}

TEST(Run, ExitStatus) {
  RunConfig cfg;
  cfg.out = scratch("exit");
  std::string err;
  EXPECT_EQ(runQuiet(cfg, &err), 2);
  cfg.scenarios = {"not-a-profile"};
  EXPECT_EQ(runQuiet(cfg, &err), 2);
  EXPECT_NE(err.find("not-a-profile"), std::string::npos);

  // An infeasible scenario file: frame rate above the command rate.
  const fs::path bad = scratch("bad_file");
  fs::create_directories(bad);
  std::ofstream(bad / "bad.json") << R"({"profile": "straight", "rates": {"imu": 200, "command": 10, "frame": 20}})";
  cfg.scenarios = {(bad / "bad.json").string()};
  EXPECT_EQ(runQuiet(cfg, &err), 2);
  EXPECT_NE(err.find("rates"), std::string::npos);

  // Loose noise makes the 0.5 deg plane check fail; only --check turns that into exit 1.
  const fs::path noisy = bad / "noisy.json";
  std::ofstream(noisy) << R"({"profile": "stationary", "prelude": 0.2, "noise": {"accel": 2.0}})";
  cfg.scenarios = {noisy.string()};
  cfg.analysis = Analysis::Estimate;
  EXPECT_EQ(runQuiet(cfg), 0);
  cfg.check = true;
  EXPECT_EQ(runQuiet(cfg), 1);
}
