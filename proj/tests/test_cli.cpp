#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "grushin/report.hpp"

using namespace grushin;
namespace fs = std::filesystem;

namespace {

/// Cheap configuration for runner tests: tiny grids, short ladders.
ExperimentConfig small_config() {
  ExperimentConfig cfg = default_config("desk1d");
  cfg.disc.K = 8;
  cfg.disc.Mp = 96;
  cfg.disc.Mpp = 16;
  cfg.disc.Lambda = 4;
  cfg.disc.Lp = 7.0;
  cfg.disc.Lpp = 6.283185307179586;
  cfg.cv_steps = 2;
  cfg.geometry_pairs = 1000;
  cfg.geometry_doublings = 5;
  cfg.output.dir.clear();
  return cfg;
}

}  // namespace

TEST_CASE("default_config: profiles populated and validated") {
  ExperimentConfig d1 = default_config("desk1d");
  CHECK(d1.disc.n1 == 1);
  CHECK(d1.disc.K == 32);
  CHECK(d1.disc.Mp == 384);
  CHECK(d1.disc.Lambda == 16);
  CHECK(d1.tol("plancherel_spread") == doctest::Approx(2.0));
  CHECK(d1.seed == 20240901);

  ExperimentConfig d2 = default_config("desk2d");
  CHECK(d2.disc.n1 == 2);
  CHECK(d2.disc.K == 16);
  CHECK(d2.cotlar_box.lo.size() == 3);

  CHECK_THROWS_AS(default_config("laptop"), ConfigError);
}

TEST_CASE("parse_config: overlay, comments, lists, line-anchored errors") {
  ExperimentConfig base = default_config("desk1d");

  std::istringstream good(
      "# comment\n"
      "[discretization]\n"
      "K = 16          # inline comment\n"
      "Lp = 9.5\n"
      "[symbol]\n"
      "name = heat\n"
      "[symbol.params]\n"
      "t = 0.25\n"
      "[experiment]\n"
      "seed = 7\n"
      "plancherel_R = 1, 2\n"
      "[tolerances]\n"
      "plancherel_spread = 3.5\n"
      "[output]\n"
      "dir = results\n");
  ExperimentConfig cfg = parse_config(good, base);
  CHECK(cfg.disc.K == 16);
  CHECK(cfg.disc.Lp == doctest::Approx(9.5));
  CHECK(cfg.disc.Mp == 384);  // untouched keys keep the base value
  CHECK(cfg.symbol_name == "heat");
  CHECK(cfg.symbol_params.at("t") == doctest::Approx(0.25));
  CHECK(cfg.seed == 7);
  CHECK(cfg.plancherel_R == std::vector<double>{1.0, 2.0});
  CHECK(cfg.tol("plancherel_spread") == doctest::Approx(3.5));
  CHECK(cfg.output.dir == "results");

  auto parse_lines = [&base](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, base);
  };

  // malformed number, anchored to its line
  try {
    parse_lines("[experiment]\nseed = 1\ncotlar_C0 = fast\n");
    CHECK(false);
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("cotlar_C0") != std::string::npos);
  }

  // unknown key / section / tolerance
  CHECK_THROWS_AS(parse_lines("[experiment]\nseed = 1\nwarp = 9\n"), ConfigError);
  CHECK_THROWS_AS(parse_lines("[engine]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_lines("[experiment]\nseed = 1\n[tolerances]\nfoo = 1\n"), ConfigError);

  // mandatory seed
  CHECK_THROWS_AS(parse_lines("[discretization]\nK = 8\n"), ConfigError);

  // semantic validation: positive tolerances, known built-in
  CHECK_THROWS_AS(parse_lines("[experiment]\nseed = 1\n[tolerances]\ncv_growth = 0\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_lines("[experiment]\nseed = 1\n[symbol]\nname = nonsense\n"), ConfigError);
}

TEST_CASE("report JSON: schema, config echo, meta stripping") {
  ExperimentConfig cfg = small_config();
  RunReport rep = run_suite("kernel-id", cfg);
  REQUIRE(rep.checks.size() == 1);
  CHECK(rep.checks[0].verdict == "PASS");
  CHECK(rep.all_pass());

  nlohmann::json j = nlohmann::json::parse(report_json(rep));
  CHECK(j["version"] == artifact_version());
  CHECK(j["subcommand"] == "kernel-id");
  CHECK(j["seed"] == cfg.seed);
  CHECK(j["config"]["discretization.K"] == "8");
  CHECK(j["checks"][0]["name"] == "kernel-id");
  CHECK(j["checks"][0]["values"].contains("five_term_residual"));
  CHECK(j["meta"].contains("threads"));
  CHECK(j["meta"]["check_runtime_sec"].contains("kernel-id"));
  CHECK(j["all_pass"] == true);

  nlohmann::json js = nlohmann::json::parse(report_json_stable(rep));
  CHECK_FALSE(js.contains("meta"));

  CHECK_THROWS_AS(run_suite("fly-to-the-moon", cfg), std::invalid_argument);
}

TEST_CASE("run_suite is thread-count invariant (stable JSON)") {
  ExperimentConfig cfg = small_config();
  cfg.threads = 1;
  RunReport r1 = run_suite("cv", cfg);
  cfg.threads = 3;
  RunReport r2 = run_suite("cv", cfg);
  CHECK(report_json_stable(r1) == report_json_stable(r2));
  CHECK(report_json(r1) != report_json(r2));  // meta differs
}

TEST_CASE("apply: unit symbol output equals the band projection on disk") {
  ExperimentConfig cfg = small_config();
  cfg.symbol_name = "constant";
  cfg.symbol_params = {{"value", 1.0}};
  fs::path dir = fs::temp_directory_path() / "grushin_cli_apply_test";
  fs::remove_all(dir);
  cfg.output.dir = dir.string();

  RunReport rep = run_suite("apply", cfg);
  write_report(rep, cfg.output.dir, true);
  CHECK(rep.all_pass());
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "checks" / "apply.csv"));
  REQUIRE(fs::exists(dir / "fields" / "apply_output.bin"));

  auto d = Discretization::create(cfg.disc);
  GridFunction in = load_grid((dir / "fields" / "apply_input.bin").string(), d);
  GridFunction out = load_grid((dir / "fields" / "apply_output.bin").string(), d);
  GridFunction band = backward(forward(in));
  band.values -= out.values;
  CHECK(band.norm() <= 1e-12 * in.norm());
  fs::remove_all(dir);
}

TEST_CASE("CLI binary: exit codes, report files, config diagnostics") {
  const std::string bin = GRUSHIN_CLI_PATH;
  fs::path dir = fs::temp_directory_path() / "grushin_cli_e2e";
  fs::remove_all(dir);

  std::string cmd = bin + " kernel-id --out " + dir.string() + " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "checks" / "kernel-id.csv"));

  // seed override lands in the report
  cmd = bin + " kernel-id --seed 42 --out " + dir.string() + " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  {
    std::ifstream is(dir / "report.json");
    nlohmann::json j = nlohmann::json::parse(is);
    CHECK(j["seed"] == 42);
  }

  // config parse failure: exit code 2
  fs::path bad = dir / "bad.cfg";
  std::ofstream(bad) << "[experiment]\nseed = banana\n";
  cmd = bin + " kernel-id --config " + bad.string() + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 2);

  // unknown subcommand rejected by the parser
  cmd = bin + " transmogrify > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) != 0);
  fs::remove_all(dir);
}
