#include "planarvio/scenario_io.hpp"

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace planarvio {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

constexpr double kDeg = std::numbers::pi / 180.0;

void allowKeys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ScenarioError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ScenarioError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError(where + "." + key + ": wrong type");
  }
}

void readAngle(const json& j, const char* key, const std::string& where, double& radians) {
  double deg = radians / kDeg;
  read(j, key, where, deg);
  radians = deg * kDeg;
}

Vec3 readVec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError(where + ": expected 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ScenarioError(where + ": expected 3 numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

void readChannel(const json& j, const std::string& where, RbfChannel& c) {
  allowKeys(j, where, {"scale", "center", "width"});
  read(j, "scale", where, c.scale);
  read(j, "center", where, c.center);
  read(j, "width", where, c.width);
}

ScriptSegment readSegment(const json& j, const std::string& where) {
  allowKeys(j, where, {"duration", "v", "omega", "v_amplitude", "v_period", "omega_amplitude", "omega_period"});
  ScriptSegment s;
  read(j, "duration", where, s.duration);
  read(j, "v", where, s.v);
  read(j, "omega", where, s.omega);
  read(j, "v_amplitude", where, s.v_amplitude);
  read(j, "v_period", where, s.v_period);
  read(j, "omega_amplitude", where, s.omega_amplitude);
  read(j, "omega_period", where, s.omega_period);
  if (!(s.duration > 0.0)) throw ScenarioError(where + ".duration: must be positive");
  if (s.v_period < 0.0 || s.omega_period < 0.0) throw ScenarioError(where + ": periods must be non-negative");
  return s;
}

Scenario fromJson(const json& j) {
  allowKeys(j, "scenario",
            {"profile", "name", "seed", "prelude", "rates", "script", "true_rbf", "window_size", "roll_deg",
             "pitch_deg", "initial_heading_deg", "extrinsics", "landmarks", "noise", "camera"});
  Scenario s;
  if (j.contains("profile")) {
    std::string profile;
    read(j, "profile", "scenario", profile);
    try {
      s = profileScenario(profile);
    } catch (const std::invalid_argument& e) {
      throw ScenarioError(std::string("scenario.profile: ") + e.what());
    }
  }
  read(j, "name", "scenario", s.name);
  read(j, "seed", "scenario", s.seed);
  read(j, "prelude", "scenario", s.prelude);
  read(j, "window_size", "scenario", s.window_size);
  readAngle(j, "roll_deg", "scenario", s.roll);
  readAngle(j, "pitch_deg", "scenario", s.pitch);
  readAngle(j, "initial_heading_deg", "scenario", s.initial_heading);

  if (j.contains("rates")) {
    const json& r = j["rates"];
    allowKeys(r, "rates", {"imu", "command", "frame"});
    read(r, "imu", "rates", s.rates.imu);
    read(r, "command", "rates", s.rates.command);
    read(r, "frame", "rates", s.rates.frame);
  }
  if (j.contains("script")) {
    const json& a = j["script"];
    if (!a.is_array()) throw ScenarioError("script: expected an array of segments");
    s.script.clear();
    for (std::size_t i = 0; i < a.size(); ++i) s.script.push_back(readSegment(a[i], "script[" + std::to_string(i) + "]"));
  }
  if (j.contains("true_rbf")) {
    const json& r = j["true_rbf"];
    allowKeys(r, "true_rbf", {"linear", "angular"});
    if (r.contains("linear")) readChannel(r["linear"], "true_rbf.linear", s.true_rbf.linear);
    if (r.contains("angular")) readChannel(r["angular"], "true_rbf.angular", s.true_rbf.angular);
  }
  if (j.contains("extrinsics")) {
    const json& e = j["extrinsics"];
    allowKeys(e, "extrinsics", {"quaternion_wxyz", "translation"});
    if (e.contains("quaternion_wxyz")) {
      const json& q = e["quaternion_wxyz"];
      if (!q.is_array() || q.size() != 4) throw ScenarioError("extrinsics.quaternion_wxyz: expected 4 numbers");
      const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
      if (quat.norm() < 1e-9) throw ScenarioError("extrinsics.quaternion_wxyz: zero quaternion");
      s.ext.base_from_imu.rotation = Rotation3(quat);
    }
    if (e.contains("translation")) s.ext.base_from_imu.translation = readVec3(e["translation"], "extrinsics.translation");
  }
  if (j.contains("landmarks")) {
    const json& l = j["landmarks"];
    allowKeys(l, "landmarks", {"count", "margin", "min_height", "max_height"});
    read(l, "count", "landmarks", s.landmarks);
    read(l, "margin", "landmarks", s.landmark_margin);
    read(l, "min_height", "landmarks", s.landmark_min_height);
    read(l, "max_height", "landmarks", s.landmark_max_height);
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    allowKeys(n, "noise", {"gyro", "accel", "pixel", "command", "gyro_bias", "accel_bias"});
    read(n, "gyro", "noise", s.noise.gyro);
    read(n, "accel", "noise", s.noise.accel);
    read(n, "pixel", "noise", s.noise.pixel);
    read(n, "command", "noise", s.noise.command);
    read(n, "gyro_bias", "noise", s.noise.gyro_bias);
    read(n, "accel_bias", "noise", s.noise.accel_bias);
  }
  if (j.contains("camera")) {
    const json& c = j["camera"];
    allowKeys(c, "camera", {"fx", "fy", "cx", "cy", "baseline", "width", "height"});
    read(c, "fx", "camera", s.camera.fx);
    read(c, "fy", "camera", s.camera.fy);
    read(c, "cx", "camera", s.camera.cx);
    read(c, "cy", "camera", s.camera.cy);
    read(c, "baseline", "camera", s.camera.baseline);
    read(c, "width", "camera", s.camera.width);
    read(c, "height", "camera", s.camera.height);
  }
  if (s.script.empty()) throw ScenarioError("scenario: needs a 'profile' or a non-empty 'script'");
  const NoiseLevels& n = s.noise;
  for (double v : {n.gyro, n.accel, n.pixel, n.command, n.gyro_bias, n.accel_bias}) {
    if (v < 0.0) throw ScenarioError("noise: levels must be non-negative");
  }
  if (s.landmark_min_height > s.landmark_max_height) throw ScenarioError("landmarks: min_height > max_height");
  return s;
}

ordered channelJson(const RbfChannel& c) { return {{"scale", c.scale}, {"center", c.center}, {"width", c.width}}; }

}  // namespace

Scenario parseScenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario: JSON syntax error: ") + e.what());
  }
  return fromJson(j);
}

Scenario loadScenarioFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot read scenario file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parseScenario(ss.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
}

std::string scenarioToJson(const Scenario& s) {
  ordered j;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["prelude"] = s.prelude;
  j["rates"] = {{"imu", s.rates.imu}, {"command", s.rates.command}, {"frame", s.rates.frame}};
  ordered script = ordered::array();
  for (const auto& seg : s.script) {
    script.push_back({{"duration", seg.duration},
                      {"v", seg.v},
                      {"omega", seg.omega},
                      {"v_amplitude", seg.v_amplitude},
                      {"v_period", seg.v_period},
                      {"omega_amplitude", seg.omega_amplitude},
                      {"omega_period", seg.omega_period}});
  }
  j["script"] = script;
  j["true_rbf"] = {{"linear", channelJson(s.true_rbf.linear)}, {"angular", channelJson(s.true_rbf.angular)}};
  j["window_size"] = s.window_size;
  j["roll_deg"] = s.roll / kDeg;
  j["pitch_deg"] = s.pitch / kDeg;
  j["initial_heading_deg"] = s.initial_heading / kDeg;
  const auto& q = s.ext.base_from_imu.rotation.quaternion();
  const Vec3& t = s.ext.base_from_imu.translation;
  j["extrinsics"] = {{"quaternion_wxyz", {q.w(), q.x(), q.y(), q.z()}}, {"translation", {t.x(), t.y(), t.z()}}};
  j["landmarks"] = {{"count", s.landmarks},
                    {"margin", s.landmark_margin},
                    {"min_height", s.landmark_min_height},
                    {"max_height", s.landmark_max_height}};
  j["noise"] = {{"gyro", s.noise.gyro},           {"accel", s.noise.accel},
                {"pixel", s.noise.pixel},         {"command", s.noise.command},
                {"gyro_bias", s.noise.gyro_bias}, {"accel_bias", s.noise.accel_bias}};
  j["camera"] = {{"fx", s.camera.fx},       {"fy", s.camera.fy},       {"cx", s.camera.cx},
                 {"cy", s.camera.cy},       {"baseline", s.camera.baseline},
                 {"width", s.camera.width}, {"height", s.camera.height}};
  return j.dump(2) + "\n";
}

Scenario resolveScenario(const std::string& path_or_name) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(path_or_name, ec)) return loadScenarioFile(path_or_name);
  for (const auto& p : profileList()) {
    if (p.name == path_or_name) return profileScenario(p.name);
  }
  throw ScenarioError("'" + path_or_name + "' is neither a readable scenario file nor a built-in profile");
}

}  // namespace planarvio
