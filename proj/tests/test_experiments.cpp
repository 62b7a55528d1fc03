#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "carnot/experiments.hpp"

using namespace carnot;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& tag) {
  const auto d = std::filesystem::temp_directory_path() / ("carnot_test_" + tag);
  std::filesystem::create_directories(d);
  return d.string();
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(
      "# comment\n"
      "experiments = kernel_props, norm_diagnostics\n"
      "group = r2\n"
      "norm = euclidean  # trailing comment\n"
      "p = 1.5\n"
      "eps_levels = 4\n"
      "seed = 7\n"
      "field_coeffs = 0.5, -0.25\n");
  const ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.experiments.size() == 2);
  CHECK(cfg.experiments[0] == "kernel_props");
  CHECK(cfg.group_id == "r2");
  CHECK(cfg.p == doctest::Approx(1.5));
  CHECK(cfg.eps_levels == 4);
  CHECK(cfg.seed == 7);
  CHECK(cfg.field_coeffs.size() == 2);
  CHECK(cfg.field_coeffs[1] == doctest::Approx(-0.25));

  std::istringstream bad("no_such_key = 1\n");
  CHECK_THROWS(parse_config(bad));
  std::istringstream noeq("just a line\n");
  CHECK_THROWS(parse_config(noeq));
}

TEST_CASE("id resolution") {
  CHECK(resolve_group("r1").n() == 1);
  CHECK(resolve_group("h1").Q() == 4);
  CHECK_THROWS(resolve_group("h2"));

  const GroupSpec r2 = resolve_group("r2");
  CHECK(resolve_norm(r2, "euclidean").name == "euclidean");
  CHECK(resolve_norm(r2, "l4").name.substr(0, 2) == "l4");
  CHECK(resolve_norm(r2, "lq:6").eval(Point{}) == 0.0);
  CHECK_THROWS(resolve_norm(r2, "koranyi"));  // specific to h1
  const GroupSpec h1 = resolve_group("h1");
  CHECK(resolve_norm(h1, "koranyi").name == "koranyi");
  CHECK_THROWS(resolve_norm(h1, "euclidean"));
  CHECK_THROWS(resolve_norm(h1, "nope"));

  ExperimentConfig cfg;
  cfg.field_id = "bump";
  CHECK(resolve_field(h1, resolve_norm(h1, "koranyi"), cfg).name == "bump");
  cfg.field_id = "mystery";
  CHECK_THROWS(resolve_field(h1, resolve_norm(h1, "koranyi"), cfg));
}

TEST_CASE("step-2 group from a JSON file") {
  const std::string dir = temp_dir("json");
  const std::string path = dir + "/group.json";
  {
    std::ofstream out(path);
    out << R"({"m1": 2, "skew": [[0, 2, -2, 0]]})";
  }
  const GroupSpec g = group_from_json(path);
  CHECK(g.m1() == 2);
  CHECK(g.m2() == 1);
  CHECK(g.Q() == 4);
  // product correction uses the loaded matrix: <x, B y> = 2 (x1 y2 - x2 y1)
  Point x, y;
  x[0] = 1.0;
  y[1] = 1.0;
  CHECK(g.multiply(x, y)[2] == doctest::Approx(1.0));
  CHECK(resolve_group("file:" + path).m1() == 2);
  CHECK_THROWS(group_from_json(dir + "/missing.json"));
}

TEST_CASE("log-log slope fitting") {
  std::vector<double> eps = {0.4, 0.2, 0.1, 0.05};
  std::vector<double> err;
  for (double e : eps) err.push_back(3.0 * e * e);
  CHECK(detail::loglog_slope(eps, err) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(detail::loglog_slope({0.1}, {1.0}) == 0.0);
}

TEST_CASE("experiment catalog is complete") {
  const auto& d = experiment_descriptions();
  for (const char* name : {"grad_convergence", "repr_formula", "energy_limit", "taylor", "ludwig",
                           "reconstruction", "bv_mass", "kernel_props", "norm_diagnostics"}) {
    CHECK(d.count(name) == 1);
    CHECK(d.at(name).find("CSV") != std::string::npos);
  }
  ExperimentConfig cfg;
  CHECK_THROWS(run_experiment("unknown", cfg));
}

TEST_CASE("kernel_props runs and reruns byte-identically") {
  ExperimentConfig cfg;
  cfg.group_id = "r1";
  cfg.norm_id = "euclidean";
  cfg.eps_levels = 3;
  cfg.p = 2.0;
  cfg.out_dir = temp_dir("kp1");
  const ExperimentResult res = run_experiment("kernel_props", cfg);
  CHECK(res.all_pass());
  const std::string first = slurp(cfg.out_dir + "/kernel_props.csv");
  CHECK(first.find("family,eps,kernel_mass") == 0);

  cfg.out_dir = temp_dir("kp2");
  run_experiment("kernel_props", cfg);
  CHECK(first == slurp(cfg.out_dir + "/kernel_props.csv"));
}

TEST_CASE("run_all records a failing experiment and continues") {
  ExperimentConfig cfg;
  cfg.group_id = "r1";
  cfg.norm_id = "euclidean";
  cfg.eps_levels = 2;
  cfg.error_samples = 200;  // norm_diagnostics uses max(error_samples, 10000)
  cfg.experiments = {"energy_limit", "norm_diagnostics"};
  cfg.p = 1.5;  // energy_limit requires p = 2 and must be recorded as failed
  cfg.out_dir = temp_dir("runall");
  std::ostringstream log;
  const bool ok = run_all(cfg, log);
  CHECK(!ok);
  CHECK(log.str().find("FAIL energy_limit") != std::string::npos);
  CHECK(log.str().find("PASS norm_diagnostics") != std::string::npos);
  const std::string summary = slurp(cfg.out_dir + "/summary.json");
  CHECK(summary.find("\"experiment\": \"energy_limit\"") != std::string::npos);
  CHECK(summary.find("\"pass\": true") != std::string::npos);
}
