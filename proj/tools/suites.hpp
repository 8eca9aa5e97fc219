#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "feec/projection.hpp"

namespace feecproj {

using json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

/// Bad flags, unknown names, inadmissible epsilon. Maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string domain = "unit_square";
  int level = 2;
  std::string mesh_file;
  std::string complex = "P1-minus";
  std::string epsilon = "auto";
  std::string p = "2";
  std::uint64_t seed = 7;
  int quad_degree = -1;
  json thresholds;

  double p_value() const;
  json to_json() const;
};

/// Defaults file merged with an optional override file (objects merge key by key).
json load_thresholds(const std::string& override_path = "");
std::string default_thresholds_path();

struct Check {
  std::string name;
  std::string invariant;
  double value = 0.0;
  json threshold;  // number (value <= threshold) or [lo, hi]
  bool pass = false;
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;
  json data = json::object();
  bool pass() const;
  void check_le(const std::string& name, const std::string& invariant, double value, double tol);
  void check_range(const std::string& name, const std::string& invariant, double value, double lo, double hi);
  void check_flag(const std::string& name, const std::string& invariant, bool ok);
  /// Records a check that could not be evaluated meaningfully (kept in data["skipped"]).
  void skip(const std::string& name, const std::string& reason, double value);
};

/// Mesh, geometry and constants for one run, built once and shared by the suites.
struct Context {
  RunConfig cfg;
  std::unique_ptr<feec::LevelSetup> setup;
  feec::ConstantLedger ledger2;  // p = 2, at the run epsilon
  feec::ConstantLedger ledger;   // requested p
  double epsilon = 0.0;

  /// Throws ConfigError when the explicit epsilon violates an admissibility bound.
  explicit Context(const RunConfig& cfg);
  int ball_degree() const;
};

feec::Triangulation load_or_generate_mesh(const RunConfig& cfg);
/// Raises ConfigError naming the first violated bound (most specific first).
void check_admissible(const feec::EpsilonBounds& b, double epsilon);

SuiteResult run_calculus(const RunConfig& cfg);
SuiteResult run_spaces(const Context& ctx);
SuiteResult run_geometry(const Context& ctx);
SuiteResult run_mollifier(const Context& ctx);
SuiteResult run_projection_suite(const Context& ctx);

const std::vector<std::string>& suite_names();
/// Runs the named suite ("all" for every suite) and returns the results in order.
std::vector<SuiteResult> run_suites(const std::string& which, const RunConfig& cfg, json* ledger_out = nullptr);

json ledger_json(const feec::ConstantLedger& L);
json suite_json(const SuiteResult& s);
json make_report(const std::string& command, const RunConfig& cfg, const json& ledger,
                 const std::vector<SuiteResult>& suites);
/// Parses a report and rejects unknown schema versions (ConfigError).
json load_report(const std::string& text);

struct StudyTable {
  std::string key;  // "epsilon" or "level"
  std::vector<std::vector<std::string>> rows;
  json report;
  bool pass = true;
  std::string csv() const;
};

StudyTable study_epsilon_scaling(const RunConfig& cfg);
StudyTable study_refinement(const RunConfig& cfg);

std::string format_number(double x);

}  // namespace feecproj
