#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "planarvio/runner.hpp"
#include "planarvio/scenario_io.hpp"

namespace py = pybind11;
using namespace planarvio;

namespace {

// Profile name, scenario file, or inline JSON text.
Scenario toScenario(const std::string& source, std::optional<std::uint64_t> seed) {
  Scenario s = (!source.empty() && source.front() == '{') ? parseScenario(source) : resolveScenario(source);
  if (seed) s.seed = *seed;
  return s;
}

py::object optional(const std::optional<double>& v) { return v ? py::cast(*v) : py::none(); }

py::dict observabilityDict(const ObservabilityReport& r) {
  py::list ranks, candidates, rbf;
  for (const auto& m : r.ranks) {
    py::dict d;
    d["matrix"] = m.matrix;
    d["rows"] = m.rows;
    d["columns"] = m.columns;
    d["rank"] = m.rank;
    d["nullspace_dim"] = m.nullspace_dim;
    d["sigma_max"] = m.sigma_max;
    d["sigma_min"] = m.sigma_min;
    ranks.append(d);
  }
  for (const auto& c : r.candidates) {
    py::dict d;
    d["matrix"] = c.matrix;
    d["candidate"] = c.candidate;
    d["columns"] = c.columns;
    d["residual"] = c.residual;
    d["max_principal_angle"] = c.max_principal_angle;
    candidates.append(d);
  }
  for (const auto& c : r.rbf_columns) {
    py::dict d;
    d["channel"] = c.channel;
    d["parameter"] = c.parameter;
    d["norm"] = c.norm;
    d["unobservable"] = c.unobservable;
    rbf.append(d);
  }
  py::dict out;
  out["frames"] = r.frames;
  out["landmarks"] = r.landmarks;
  out["ranks"] = ranks;
  out["candidates"] = candidates;
  out["rbf_columns"] = rbf;
  out["linear_windows_constant"] = r.linear_windows_constant;
  out["rbf_linear_rank"] = r.rbf_linear_rank;
  out["rbf_linear_condition"] = r.rbf_linear_condition;
  out["plane_product"] = optional(r.plane_product);
  out["plane_distance_pattern"] = optional(r.plane_distance_pattern);
  out["plane_distance_in_nullspace"] = optional(r.plane_distance_in_nullspace);
  out["tilt_content_features"] = optional(r.tilt_content_features);
  out["tilt_content_plane"] = optional(r.tilt_content_plane);
  out["forward_inverse_rank_equal"] =
      r.forward_inverse_rank_equal ? py::cast(*r.forward_inverse_rank_equal) : py::none();
  out["warnings"] = r.warnings;
  return out;
}

py::dict checksDict(const std::vector<CheckResult>& checks) {
  py::dict out;
  for (const auto& c : checks) out[py::str(c.name)] = c.pass;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Planar-robot VIO model: simulation, observability analysis and batch estimation";

  m.def("profiles", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& p : profileList()) out.emplace_back(p.name, p.description);
    return out;
  }, "Built-in scenario profiles as (name, description) pairs.");

  m.def("scenario_json", [](const std::string& source, std::optional<std::uint64_t> seed) {
    return scenarioToJson(toScenario(source, seed));
  }, py::arg("scenario"), py::arg("seed") = py::none(),
        "Fully expanded scenario config for a profile name, file path or JSON text.");

  m.def("analyze_observability", [](const std::string& source, const std::string& measurements, int frames,
                                     int landmarks) {
    const ObservabilityReport r =
        analyzeObservability(toScenario(source, std::nullopt), parseMeasurements(measurements), {frames, landmarks});
    py::dict d = observabilityDict(r);
    d["checks"] = checksDict(observabilityChecks(r));
    return d;
  }, py::arg("scenario"), py::arg("measurements") = "imu,features,motion,plane", py::arg("frames") = 10,
        py::arg("landmarks") = 8);

  m.def("estimate", [](const std::string& source, std::optional<std::uint64_t> seed, const std::string& measurements) {
    const EstimationReport r = runEstimation(toScenario(source, seed), parseMeasurements(measurements));
    py::dict errors;
    for (const auto& e : r.errors) errors[py::str(e.quantity)] = py::make_tuple(e.estimate, e.truth, e.error);
    py::dict d;
    d["converged"] = r.solve.converged;
    d["termination"] = r.solve.termination;
    d["iterations"] = r.solve.iterations;
    d["initial_cost"] = r.solve.initial_cost;
    d["final_cost"] = r.solve.final_cost;
    d["cost_history"] = r.solve.cost_history;
    d["errors"] = errors;
    d["plane_angle_error_deg"] = r.plane_angle_error * 180.0 / 3.14159265358979323846;
    d["gravity_error_deg"] = r.gravity_error * 180.0 / 3.14159265358979323846;
    d["rbf_max_relative_error"] = r.rbf_max_relative_error;
    d["warnings"] = r.warnings;
    d["checks"] = checksDict(estimationChecks(r));
    return d;
  }, py::arg("scenario"), py::arg("seed") = py::none(), py::arg("measurements") = "imu,features,motion,plane");

  m.def("run", [](const std::vector<std::string>& scenarios, const std::filesystem::path& out,
                  const std::string& analysis, std::optional<std::uint64_t> seed, bool check,
                  const std::string& measurements) {
    RunConfig cfg;
    cfg.scenarios = scenarios;
    cfg.out = out;
    cfg.analysis = parseAnalysis(analysis);
    cfg.seed = seed;
    cfg.check = check;
    cfg.measurements = parseMeasurements(measurements);
    std::ostringstream log, err;
    const int code = run(cfg, log, err);
    return py::make_tuple(code, log.str(), err.str());
  }, py::arg("scenarios"), py::arg("out"), py::arg("analysis") = "both", py::arg("seed") = py::none(),
        py::arg("check") = false, py::arg("measurements") = "imu,features,motion,plane",
        "Same as the command line runner. Returns (exit status, log text, error text).");

  m.def("so3_exp", [](const Vec3& w) -> Mat3 { return so3Exp(w).matrix(); });
  m.def("so3_log", [](const Mat3& R) -> Vec3 { return so3Log(R); });

  m.def("effective_control", [](const Eigen::MatrixXd& commands, double stamp, const Vec6& rbf) {
    if (commands.cols() != 3) throw std::invalid_argument("commands must be an N x 3 array of (t, v, omega)");
    CommandWindow w;
    w.stamp = stamp;
    for (Eigen::Index i = 0; i < commands.rows(); ++i) w.commands.push_back({commands(i, 0), commands(i, 1), commands(i, 2)});
    const Twist2 xi = effectiveControl(w, RbfParams::fromVector(rbf));
    return py::make_tuple(xi(0), xi(2));
  }, py::arg("commands"), py::arg("stamp"), py::arg("rbf"),
        "RBF-weighted effective (v, omega) at `stamp`; rbf = (s, mu, sigma) linear then angular.");

  py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
}
