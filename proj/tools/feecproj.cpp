#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "suites.hpp"

using namespace feecproj;

namespace {

constexpr int kPass = 0, kInvariantFailure = 1, kConfigError = 2;

struct Flags {
  RunConfig cfg;
  std::string thresholds_file;
  std::string out;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--domain", f.cfg.domain, "unit_interval, unit_square, unit_cube, l_shape, crossed_bricks");
  app->add_option("--level", f.cfg.level, "uniform refinement level");
  app->add_option("--mesh-file", f.cfg.mesh_file, "mesh JSON (overrides --level)");
  app->add_option("--complex", f.cfg.complex, "e.g. P1-minus, P2-full");
  app->add_option("--epsilon", f.cfg.epsilon, "'auto' or a value inside the admissible range");
  app->add_option("--p", f.cfg.p, "Lebesgue exponent for the ledger: number >= 1 or 'inf'");
  app->add_option("--seed", f.cfg.seed, "seed for every random draw");
  app->add_option("--quad-degree", f.cfg.quad_degree, "face quadrature degree for sampled inputs (-1: auto)");
  app->add_option("--thresholds", f.thresholds_file, "JSON overriding entries of the defaults file");
  app->add_option("--out", f.out, "output file (stdout when omitted)");
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os << text;
}

std::string report_text(const json& r) { return r.dump(2) + "\n"; }

int cmd_mesh_generate(const Flags& f) {
  emit(f.out, feec::mesh_to_json(load_or_generate_mesh(f.cfg)));
  return kPass;
}

int cmd_mesh_info(const Flags& f) {
  const auto mesh = load_or_generate_mesh(f.cfg);
  const auto geom = feec::DomainGeometry::make(f.cfg.domain, f.cfg.thresholds.at("collar_width").get<double>());
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["domain"] = f.cfg.domain;
  j["dim"] = mesh.dim();
  j["vertices"] = mesh.num_vertices();
  j["cells"] = mesh.num_cells();
  j["h_min"] = mesh.h_min();
  j["h_max"] = mesh.h_max();
  j["C_mesh"] = feec::shape_constant(mesh);
  j["C_N"] = feec::neighbor_count_constant(mesh);
  j["eps_h"] = feec::neighborhood_constant(mesh, geom);
  emit(f.out, report_text(j));
  return kPass;
}

void print_summary(const std::vector<SuiteResult>& suites) {
  for (const auto& s : suites) {
    for (const auto& c : s.checks)
      if (!c.pass)
        std::cerr << "  FAIL " << s.name << "." << c.name << ": " << c.invariant << " (value " << format_number(c.value)
                  << ", tolerance " << c.threshold.dump() << ")\n";
    if (s.data.contains("skipped"))
      for (const auto& k : s.data["skipped"])
        std::cerr << "  SKIP " << s.name << "." << k["name"].get<std::string>() << ": " << k["reason"].get<std::string>()
                  << "\n";
  }
}

int cmd_verify(const Flags& f, const std::string& suite) {
  json ledger;
  const auto results = run_suites(suite, f.cfg, &ledger);
  const json report = make_report("verify " + suite, f.cfg, ledger, results);
  emit(f.out, report_text(report));
  print_summary(results);
  return report["pass"].get<bool>() ? kPass : kInvariantFailure;
}

int cmd_study(const Flags& f, const std::string& kind, const std::string& report_path) {
  StudyTable tab;
  if (kind == "epsilon-scaling") tab = study_epsilon_scaling(f.cfg);
  else if (kind == "refinement-boundedness") tab = study_refinement(f.cfg);
  else throw ConfigError("unknown study '" + kind + "'");
  emit(f.out, tab.csv());
  if (!report_path.empty()) emit(report_path, report_text(tab.report));
  return tab.pass ? kPass : kInvariantFailure;
}

int cmd_report_check(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const json r = load_report(ss.str());
  std::cout << "schema_version " << r["schema_version"].get<int>() << " ok\n";
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feecproj: smoothed projections for finite element exterior calculus"};
  app.require_subcommand(1);
  Flags f;

  auto* mesh = app.add_subcommand("mesh", "generate a mesh or report its constants");
  mesh->require_subcommand(1);
  auto* gen = mesh->add_subcommand("generate", "write a refined domain mesh as JSON");
  auto* info = mesh->add_subcommand("info", "C_mesh, C_N, eps_h and sizes");
  add_common(gen, f);
  add_common(info, f);

  auto* verify = app.add_subcommand("verify", "run invariant suites and write a JSON report");
  std::string suite = "all";
  verify->add_option("suite", suite, "calculus, spaces, geometry, mollifier, projection or all");
  add_common(verify, f);

  auto* study = app.add_subcommand("study", "epsilon-scaling or refinement-boundedness (CSV)");
  std::string kind, study_report;
  study->add_option("kind", kind, "epsilon-scaling or refinement-boundedness")->required();
  study->add_option("--report", study_report, "also write the JSON report here");
  add_common(study, f);

  auto* report = app.add_subcommand("report", "report utilities");
  report->require_subcommand(1);
  auto* check = report->add_subcommand("check", "validate a report's schema version");
  std::string report_file;
  check->add_option("file", report_file, "report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*report) return cmd_report_check(report_file);
    f.cfg.thresholds = load_thresholds(f.thresholds_file);
    if (*gen) return cmd_mesh_generate(f);
    if (*info) return cmd_mesh_info(f);
    if (*verify) return cmd_verify(f, suite);
    if (*study) return cmd_study(f, kind, study_report);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const feec::MeshFormatError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const feec::IncompatibleComplex& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const feec::EmptyAdmissibleRange& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const feec::CollarTooWide& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const feec::GeometryMismatch& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "invariant failure: " << e.what() << "\n";
    return kInvariantFailure;
  }
  return kConfigError;
}
