#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "grushin/discretization.hpp"
#include "grushin/geometry.hpp"
#include "grushin/symbol.hpp"

namespace grushin {

/// Parse/validation failure with a line anchor (0 = whole file / not line-bound).
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& msg, int line_no)
      : std::runtime_error(msg), line(line_no) {}
  int line = 0;
};

struct OutputConfig {
  std::string dir = "out";  // empty: no files are written
  bool emit_csv = true;
  bool emit_fields = true;
};

/// Full experiment configuration: discretization, symbol, per-check knobs,
/// verdict tolerances, output. `default_config` fills every field for a named
/// profile; a parsed file overlays selective overrides on such a base.
struct ExperimentConfig {
  std::string profile = "desk1d";

  // [discretization]
  DiscretizationParams disc;

  // [symbol] + [symbol.params]: used by the `apply` and `plancherel` checks
  std::string symbol_name = "cancellation-boost";
  std::map<std::string, double> symbol_params;
  SymbolClassParams symbol_class;

  // [experiment]
  std::uint64_t seed = 20240901;
  int threads = 0;  // 0: hardware concurrency
  std::string nonconvergence_policy = "warn";  // warn | fail

  std::vector<double> plancherel_R{1.0, 2.0, 4.0};
  int plancherel_r = 4;
  int plancherel_p = 2;
  std::vector<double> plancherel_x{0.0, 0.5};  // x'_1 sample coordinates

  Box cotlar_box{{-4.0, 0.0}, {4.0, 0.5}};
  double cotlar_C0 = 1.0;
  int cotlar_l_max = 6;
  int cotlar_S = 2;

  double norm_tol = 1e-3;  // power-iteration options for the piece matrices
  int norm_max_iter = 20;
  int norm_restarts = 2;

  int cv_K0 = 4;  // refinement ladder (K0 2^i, Lambda0 2^i), i < cv_steps
  int cv_Lambda0 = 2;
  int cv_steps = 3;
  int cv_Mp = 160;  // dedicated ladder grid (band params come from the ladder)
  double cv_Lp = 9.0;

  double dilation_t = 1.4142135623730951;

  int geometry_pairs = 10000;
  int geometry_doublings = 8;

  // [tolerances]: verdict thresholds, all > 0, all echoed in the report
  std::map<std::string, double> tolerances;

  // [output]
  OutputConfig output;

  /// Threshold lookup; throws std::out_of_range for unknown names.
  double tol(const std::string& name) const { return tolerances.at(name); }
};

/// Fully populated defaults for "desk1d" or "desk2d"; throws ConfigError for
/// any other profile name.
ExperimentConfig default_config(const std::string& profile = "desk1d");

/// Parses the sectioned key = value format, overlaying onto `base`. Errors
/// (unknown section/key, malformed value, missing mandatory seed, invalid
/// symbol or tolerance) throw ConfigError with the offending line number.
ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base);
ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base);

/// Semantic validation shared by default and parsed configs: the named
/// built-in symbol must exist, tolerances must be positive, grids sane.
void validate_config(const ExperimentConfig& cfg);

/// Deterministic flat key/value listing (echoed verbatim into reports).
std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg);

/// Instantiates the configured built-in symbol.
SymbolFn config_symbol(const ExperimentConfig& cfg);

}  // namespace grushin
