#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "grushin/config.hpp"

namespace grushin {

/// One named check: verdict, named scalar measurements (deterministic order),
/// free-form notes, and an optional long-format table for plot-ready export.
struct CheckRecord {
  std::string name;
  std::string verdict = "PASS";  // PASS | WARN | FAIL
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::string> notes;
  std::vector<std::string> table_header;
  std::vector<std::vector<double>> table;
  double runtime_sec = 0.0;  // reported under "meta" only

  void value(const std::string& key, double v) { values.emplace_back(key, v); }
  /// Downgrades the verdict to FAIL when `ok` is false, keeping the note.
  void require(bool ok, const std::string& what) {
    if (!ok) {
      verdict = "FAIL";
      notes.push_back("FAIL: " + what);
    }
  }
  /// Convergence policy: WARN (still passing) or FAIL per config.
  void converged_or(bool converged, const std::string& policy, const std::string& what) {
    if (converged) return;
    if (policy == "fail") {
      verdict = "FAIL";
      notes.push_back("FAIL: " + what);
    } else {
      if (verdict == "PASS") verdict = "WARN";
      notes.push_back("WARN: " + what);
    }
  }
};

/// Complete run artifact. Everything outside the runtime metadata is a pure
/// function of (config, seed), independent of the worker count.
struct RunReport {
  std::string version;
  std::string subcommand;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<CheckRecord> checks;
  double total_runtime_sec = 0.0;

  bool all_pass() const {
    for (const auto& c : checks)
      if (c.verdict == "FAIL") return false;
    return !checks.empty();
  }
};

const char* artifact_version();

/// JSON serialization of the full report; `stable` variant omits the "meta"
/// object (thread count and runtimes), leaving only seed-determined content.
std::string report_json(const RunReport& rep);
std::string report_json_stable(const RunReport& rep);

/// Writes report.json plus checks/<name>.csv (key,value) and
/// checks/<name>_data.csv (long-format tables) under out_dir. No-op when
/// out_dir is empty.
void write_report(const RunReport& rep, const std::string& out_dir, bool emit_csv = true);

/// Executes one subcommand ("verify-hermite", "verify-geometry", "apply",
/// "cv", "cotlar", "plancherel", "kernel-id", "dilation") or "all", honoring
/// cfg.threads, and returns the populated report. Unknown names throw.
RunReport run_suite(const std::string& subcommand, const ExperimentConfig& cfg);

}  // namespace grushin
