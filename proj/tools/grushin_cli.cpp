// grushin-verify: experiment front end. Builds a configuration (profile
// defaults + optional config file + flag overrides), runs one named check or
// the full suite, and writes report.json / checks/*.csv / fields/*.bin.
// Exit status: 0 when every verdict is PASS (or WARN), 1 on a FAIL verdict,
// 2 on configuration errors.
#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "grushin/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification suite for Hermite / Grushin spectral calculus"};
  app.require_subcommand(1);

  std::string config_path, out_dir, profile = "desk1d";
  int threads = 0;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "configuration file (sectioned key = value)");
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
  app.add_option("--threads", threads, "worker thread cap (0: hardware)");
  auto* seed_opt = app.add_option("--seed", seed, "seed override (reproducibility)");
  app.add_option("--profile", profile, "base profile: desk1d or desk2d")
      ->check(CLI::IsMember({"desk1d", "desk2d"}));

  static const std::vector<std::string> subs = {"verify-hermite", "verify-geometry", "apply",
                                                "cv",             "cotlar",          "plancherel",
                                                "kernel-id",      "dilation",        "all"};
  for (const auto& s : subs) app.add_subcommand(s)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  grushin::ExperimentConfig cfg;
  try {
    cfg = grushin::default_config(profile);
    if (!config_path.empty()) cfg = grushin::load_config_file(config_path, cfg);
  } catch (const grushin::ConfigError& e) {
    std::fprintf(stderr, "%s:%d: %s\n", config_path.empty() ? "<defaults>" : config_path.c_str(),
                 e.line, e.what());
    return 2;
  }
  if (seed_opt->count() > 0) cfg.seed = seed;
  if (threads > 0) cfg.threads = threads;
  if (!out_dir.empty()) cfg.output.dir = out_dir;

  grushin::RunReport rep;
  try {
    rep = grushin::run_suite(sub, cfg);
    grushin::write_report(rep, cfg.output.dir, cfg.output.emit_csv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  for (const auto& c : rep.checks) {
    std::printf("%-16s %s", c.name.c_str(), c.verdict.c_str());
    for (const auto& n : c.notes) std::printf("  [%s]", n.c_str());
    std::printf("\n");
  }
  std::printf("%s: %s (seed %llu, %d thread%s, %.1f s)\n", sub.c_str(),
              rep.all_pass() ? "PASS" : "FAIL", static_cast<unsigned long long>(rep.seed),
              rep.threads, rep.threads == 1 ? "" : "s", rep.total_runtime_sec);
  if (!cfg.output.dir.empty()) std::printf("report: %s/report.json\n", cfg.output.dir.c_str());
  return rep.all_pass() ? 0 : 1;
}
