#include "grushin/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace grushin {

namespace {

const std::map<std::string, double> kDefaultTolerances = {
    {"hermite_gram", 1e-8},
    {"hermite_ladder", 1e-12},
    {"hermite_lambda_derivative", 1e-5},
    {"geometry_ratio_low", 0.25},
    {"geometry_ratio_high", 4.0},
    {"partition_sum", 1e-10},
    {"apply_identity", 1e-12},
    {"cv_growth", 0.10},
    {"cv_control_growth", 0.30},
    {"cotlar_vanish", 1e-12},
    {"cotlar_bound_slack", 0.05},
    {"plancherel_spread", 2.0},
    {"kernel_five_term", 1e-5},
    {"kernel_commutator", 1e-8},
    {"heat_semigroup", 1e-8},
    {"dilation_residual", 1e-8},
};

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": expected a number for '" + key +
                          "', got '" + v + "'",
                      line);
  }
}

long long parse_int(const std::string& v, const std::string& key, int line) {
  try {
    std::size_t used = 0;
    long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": expected an integer for '" + key +
                          "', got '" + v + "'",
                      line);
  }
}

bool parse_bool(const std::string& v, const std::string& key, int line) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError(
      "line " + std::to_string(line) + ": expected a boolean (0/1/true/false) for '" + key + "'",
      line);
}

std::vector<double> parse_list(const std::string& v, const std::string& key, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), key, line));
  if (out.empty())
    throw ConfigError("line " + std::to_string(line) + ": empty list for '" + key + "'", line);
  return out;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
  return s;
}

}  // namespace

ExperimentConfig default_config(const std::string& profile) {
  ExperimentConfig cfg;
  cfg.profile = profile;
  cfg.tolerances = kDefaultTolerances;
  if (profile == "desk1d") {
    cfg.disc = Discretization::desk1d()->params();
  } else if (profile == "desk2d") {
    cfg.disc = Discretization::desk2d()->params();
    cfg.cotlar_box = Box{{-4.0, -4.0, 0.0}, {4.0, 4.0, 0.5}};
    cfg.cotlar_l_max = 4;
  } else {
    throw ConfigError("unknown profile '" + profile + "' (expected desk1d or desk2d)", 0);
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  try {
    (void)make_builtin_symbol(cfg.symbol_name, cfg.symbol_params);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid symbol block: ") + e.what(), 0);
  }
  for (const auto& [name, value] : cfg.tolerances)
    if (!(value > 0.0))
      throw ConfigError("tolerance '" + name + "' must be > 0 (got " + fmt_double(value) + ")", 0);
  if (cfg.disc.n1 < 1 || cfg.disc.n1 > 2 || cfg.disc.n2 < 0 || cfg.disc.n2 > 1)
    throw ConfigError("discretization: need n1 in {1,2} and n2 in {0,1}", 0);
  if (cfg.disc.K < 1 || cfg.disc.Mp < 2 || cfg.disc.Lambda < 1 || cfg.disc.Lp <= 0.0 ||
      cfg.disc.Lpp <= 0.0)
    throw ConfigError("discretization: K, Mp, Lambda, Lp, Lpp must be positive", 0);
  if (cfg.cotlar_box.lo.size() != static_cast<std::size_t>(cfg.disc.n1 + cfg.disc.n2) ||
      cfg.cotlar_box.hi.size() != cfg.cotlar_box.lo.size())
    throw ConfigError("cotlar box dimension does not match n1 + n2", 0);
  if (cfg.nonconvergence_policy != "warn" && cfg.nonconvergence_policy != "fail")
    throw ConfigError("nonconvergence policy must be 'warn' or 'fail'", 0);
  if (cfg.plancherel_R.empty() || cfg.plancherel_x.empty())
    throw ConfigError("plancherel_R and plancherel_x must be non-empty", 0);
  for (double R : cfg.plancherel_R)
    if (!(R > 0.0)) throw ConfigError("plancherel_R entries must be > 0", 0);
  if (cfg.plancherel_p != 0 && cfg.plancherel_p != 2)
    throw ConfigError("plancherel_p must be 2 or 0 (infinity)", 0);
  if (cfg.cotlar_l_max < 0 || cfg.cv_steps < 2 || cfg.norm_restarts < 1 || cfg.norm_max_iter < 1)
    throw ConfigError("experiment counters out of range", 0);
  if (!(cfg.dilation_t > 0.0)) throw ConfigError("dilation_t must be > 0", 0);
}

ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  std::string section;
  std::string line;
  int line_no = 0;
  bool seed_seen = false;

  auto fail = [&](const std::string& msg) {
    throw ConfigError("line " + std::to_string(line_no) + ": " + msg, line_no);
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known = {"discretization", "symbol", "symbol.params",
                                                     "experiment",     "tolerances", "output"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        fail("unknown section [" + section + "]");
      continue;
    }

    std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) fail("expected 'key = value'");
    if (section.empty()) fail("key '" + key + "' before any [section]");

    if (section == "discretization") {
      if (key == "n1") cfg.disc.n1 = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "n2") cfg.disc.n2 = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "K") cfg.disc.K = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "Mp") cfg.disc.Mp = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "Mpp") cfg.disc.Mpp = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "Lambda") cfg.disc.Lambda = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "Lp") cfg.disc.Lp = parse_double(val, key, line_no);
      else if (key == "Lpp") cfg.disc.Lpp = parse_double(val, key, line_no);
      else fail("unknown key '" + key + "' in [discretization]");
    } else if (section == "symbol") {
      if (key == "name") { cfg.symbol_name = val; cfg.symbol_params.clear(); }
      else if (key == "sigma") cfg.symbol_class.sigma = parse_double(val, key, line_no);
      else if (key == "rho") cfg.symbol_class.rho = parse_double(val, key, line_no);
      else if (key == "delta") cfg.symbol_class.delta = parse_double(val, key, line_no);
      else if (key == "N") cfg.symbol_class.N = static_cast<int>(parse_int(val, key, line_no));
      else fail("unknown key '" + key + "' in [symbol]");
    } else if (section == "symbol.params") {
      cfg.symbol_params[key] = parse_double(val, key, line_no);
    } else if (section == "experiment") {
      if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(val, key, line_no));
        seed_seen = true;
      }
      else if (key == "threads") cfg.threads = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "nonconvergence") cfg.nonconvergence_policy = val;
      else if (key == "plancherel_R") cfg.plancherel_R = parse_list(val, key, line_no);
      else if (key == "plancherel_r") cfg.plancherel_r = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "plancherel_p") cfg.plancherel_p = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "plancherel_x") cfg.plancherel_x = parse_list(val, key, line_no);
      else if (key == "cotlar_box_lo") cfg.cotlar_box.lo = parse_list(val, key, line_no);
      else if (key == "cotlar_box_hi") cfg.cotlar_box.hi = parse_list(val, key, line_no);
      else if (key == "cotlar_C0") cfg.cotlar_C0 = parse_double(val, key, line_no);
      else if (key == "cotlar_l_max") cfg.cotlar_l_max = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "cotlar_S") cfg.cotlar_S = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "norm_tol") cfg.norm_tol = parse_double(val, key, line_no);
      else if (key == "norm_max_iter") cfg.norm_max_iter = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "norm_restarts") cfg.norm_restarts = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "cv_K0") cfg.cv_K0 = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "cv_Lambda0") cfg.cv_Lambda0 = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "cv_steps") cfg.cv_steps = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "cv_Mp") cfg.cv_Mp = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "cv_Lp") cfg.cv_Lp = parse_double(val, key, line_no);
      else if (key == "dilation_t") cfg.dilation_t = parse_double(val, key, line_no);
      else if (key == "geometry_pairs") cfg.geometry_pairs = static_cast<int>(parse_int(val, key, line_no));
      else if (key == "geometry_doublings") cfg.geometry_doublings = static_cast<int>(parse_int(val, key, line_no));
      else fail("unknown key '" + key + "' in [experiment]");
    } else if (section == "tolerances") {
      if (!kDefaultTolerances.count(key)) fail("unknown tolerance '" + key + "'");
      cfg.tolerances[key] = parse_double(val, key, line_no);
    } else if (section == "output") {
      if (key == "dir") cfg.output.dir = val;
      else if (key == "emit_csv") cfg.output.emit_csv = parse_bool(val, key, line_no);
      else if (key == "emit_fields") cfg.output.emit_fields = parse_bool(val, key, line_no);
      else fail("unknown key '" + key + "' in [output]");
    }
  }

  if (!seed_seen)
    throw ConfigError("config must set an explicit seed in [experiment] (reproducibility)", 0);
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
  return parse_config(in, base);
}

std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> kv;
  auto put = [&kv](const std::string& k, const std::string& v) { kv.emplace_back(k, v); };
  put("profile", cfg.profile);
  put("discretization.n1", std::to_string(cfg.disc.n1));
  put("discretization.n2", std::to_string(cfg.disc.n2));
  put("discretization.K", std::to_string(cfg.disc.K));
  put("discretization.Mp", std::to_string(cfg.disc.Mp));
  put("discretization.Mpp", std::to_string(cfg.disc.Mpp));
  put("discretization.Lambda", std::to_string(cfg.disc.Lambda));
  put("discretization.Lp", fmt_double(cfg.disc.Lp));
  put("discretization.Lpp", fmt_double(cfg.disc.Lpp));
  put("symbol.name", cfg.symbol_name);
  for (const auto& [k, v] : cfg.symbol_params) put("symbol.params." + k, fmt_double(v));
  put("symbol.sigma", fmt_double(cfg.symbol_class.sigma));
  put("symbol.rho", fmt_double(cfg.symbol_class.rho));
  put("symbol.delta", fmt_double(cfg.symbol_class.delta));
  put("symbol.N", std::to_string(cfg.symbol_class.N));
  put("experiment.seed", std::to_string(cfg.seed));
  put("experiment.nonconvergence", cfg.nonconvergence_policy);
  put("experiment.plancherel_R", fmt_list(cfg.plancherel_R));
  put("experiment.plancherel_r", std::to_string(cfg.plancherel_r));
  put("experiment.plancherel_p", std::to_string(cfg.plancherel_p));
  put("experiment.plancherel_x", fmt_list(cfg.plancherel_x));
  put("experiment.cotlar_box_lo", fmt_list(cfg.cotlar_box.lo));
  put("experiment.cotlar_box_hi", fmt_list(cfg.cotlar_box.hi));
  put("experiment.cotlar_C0", fmt_double(cfg.cotlar_C0));
  put("experiment.cotlar_l_max", std::to_string(cfg.cotlar_l_max));
  put("experiment.cotlar_S", std::to_string(cfg.cotlar_S));
  put("experiment.norm_tol", fmt_double(cfg.norm_tol));
  put("experiment.norm_max_iter", std::to_string(cfg.norm_max_iter));
  put("experiment.norm_restarts", std::to_string(cfg.norm_restarts));
  put("experiment.cv_K0", std::to_string(cfg.cv_K0));
  put("experiment.cv_Lambda0", std::to_string(cfg.cv_Lambda0));
  put("experiment.cv_steps", std::to_string(cfg.cv_steps));
  put("experiment.cv_Mp", std::to_string(cfg.cv_Mp));
  put("experiment.cv_Lp", fmt_double(cfg.cv_Lp));
  put("experiment.dilation_t", fmt_double(cfg.dilation_t));
  put("experiment.geometry_pairs", std::to_string(cfg.geometry_pairs));
  put("experiment.geometry_doublings", std::to_string(cfg.geometry_doublings));
  for (const auto& [k, v] : cfg.tolerances) put("tolerances." + k, fmt_double(v));
  put("output.dir", cfg.output.dir);
  put("output.emit_csv", cfg.output.emit_csv ? "1" : "0");
  put("output.emit_fields", cfg.output.emit_fields ? "1" : "0");
  return kv;
}

SymbolFn config_symbol(const ExperimentConfig& cfg) {
  return make_builtin_symbol(cfg.symbol_name, cfg.symbol_params);
}

}  // namespace grushin
