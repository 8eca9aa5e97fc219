#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "suites.hpp"

using namespace feecproj;

namespace {

const std::filesystem::path& tmpdir() {
  static const std::filesystem::path d = [] {
    auto p = std::filesystem::temp_directory_path() / ("feecproj_cli_" + std::to_string(::getpid()));
    std::filesystem::create_directories(p);
    return p;
  }();
  return d;
}

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const auto out = tmpdir() / "stdout.txt", err = tmpdir() / "stderr.txt";
  const std::string cmd = std::string(FEECPROJ_EXE) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("mesh info reports the shape constant and eps_h") {
  auto r = run("mesh info --domain unit_square --level 2");
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["C_mesh"].get<double>() == doctest::Approx(4.0));
  CHECK(j["eps_h"].get<double>() > 0.0);
  CHECK(j["cells"].get<int>() == 32);
}

TEST_CASE("config errors exit 2") {
  CHECK(run("mesh info --domain moebius").code == 2);
  CHECK(run("verify calculus --no-such-flag").code == 2);
  CHECK(run("verify calculus --complex P1-sideways").code == 2);
  CHECK(run("verify calculus --mesh-file /nonexistent/mesh.json").code == 2);
  CHECK(run("verify nothing").code == 2);
}

TEST_CASE("an inadmissible epsilon names the violated constraint") {
  auto r = run("verify projection --epsilon 0.1");
  CHECK(r.code == 2);
  CHECK(r.err.find("violated") != std::string::npos);
  CHECK(r.err.find("eps_h") != std::string::npos);
}

TEST_CASE("verify writes a versioned report that echoes thresholds") {
  const auto path = tmpdir() / "calc.json";
  auto r = run("verify calculus --seed 3 --out " + path.string());
  REQUIRE(r.code == 0);
  auto j = load_report(slurp(path));
  CHECK(j["schema_version"].get<int>() == kReportSchemaVersion);
  CHECK(j["config"]["thresholds"]["calculus"]["stokes_tol"].get<double>() == 1e-10);
  CHECK(j["pass"].get<bool>());
  CHECK(run("report check " + path.string()).code == 0);
}

TEST_CASE("report check rejects unknown versions") {
  auto j = json::parse(R"({"schema_version": 99, "suites": []})");
  CHECK_THROWS_AS(load_report(j.dump()), ConfigError);
  const auto path = tmpdir() / "future.json";
  std::ofstream(path) << j.dump();
  CHECK(run("report check " + path.string()).code == 2);
}

TEST_CASE("threshold overrides are applied and a failed invariant exits 1") {
  const auto path = tmpdir() / "strict.json";
  std::ofstream(path) << R"({"calculus": {"stokes_tol": -1.0}})";
  auto t = load_thresholds(path.string());
  CHECK(t["calculus"]["stokes_tol"].get<double>() == -1.0);
  CHECK(t["calculus"]["instances"].get<int>() == 100);
  auto r = run("verify calculus --thresholds " + path.string());
  CHECK(r.code == 1);
  CHECK(r.err.find("FAIL") != std::string::npos);
}

TEST_CASE("study CSV layout") {
  auto e = run("study epsilon-scaling --domain unit_interval --level 2");
  CHECK(e.code == 0);
  CHECK(first_line(e.out) == "epsilon,value,ceiling,pass");
  CHECK(e.out.find("\nslope,") != std::string::npos);

  auto l = run("study refinement-boundedness --domain unit_interval");
  CHECK(l.code == 0);
  CHECK(first_line(l.out) == "level,value,ceiling,pass");
  CHECK(l.out.find("\nratio,") != std::string::npos);
  CHECK(run("study nonsense").code == 2);
}
