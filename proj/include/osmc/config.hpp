#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "osmc/csv.hpp"
#include "osmc/experiment.hpp"

namespace osmc {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string trim_copy(const std::string& s) {
  return std::string(trim(std::string_view(s)));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t comma = s.find(',', start);
    const std::string item =
        trim_copy(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& value, const std::string& key) {
  T out{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ParseError("key '" + key + "': cannot parse number '" + value + "'");
  }
  return out;
}

inline double parse_real(const std::string& value, const std::string& key) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
    throw ParseError("key '" + key + "': cannot parse real '" + value + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& value, const std::string& key) {
  const std::string v = lower(value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ParseError("key '" + key + "': expected a boolean, got '" + value + "'");
}

}  // namespace detail

// Flat key = value configuration. '#' starts a comment, blank lines are
// skipped and bracketed section headers are allowed for organization but
// carry no meaning. Unknown or duplicate keys are rejected.
inline ExperimentConfig parse_config_text(const std::string& text,
                                          const std::string& origin = "<string>") {
  static const std::vector<std::string> known = {
      "family",  "design",   "csv",       "response", "standardize", "n",
      "dim",     "beta0",    "r_p",       "r_grid",   "s",           "criteria",
      "methods", "pilot",    "p_m",       "trim_alpha", "seed",      "intercept",
      "protocol", "noise_sd", "output"};

  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim_copy(line);
    if (stripped.empty()) continue;
    if (stripped.front() == '[' && stripped.back() == ']') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::lower(detail::trim_copy(stripped.substr(0, eq)));
    const std::string value = detail::trim_copy(stripped.substr(eq + 1));
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (kv.count(key) != 0) {
      throw ParseError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv[key] = value;
  }

  const auto has = [&](const char* key) { return kv.count(key) != 0; };
  const auto get = [&](const char* key) { return kv.at(key); };

  ExperimentConfig cfg;
  std::vector<std::string> violations;

  if (!has("family")) throw ParseError(origin + ": required key 'family' missing");
  cfg.family = parse_family(detail::lower(get("family")));

  if (has("design") == has("csv")) {
    throw ParseError(origin + ": exactly one of 'design' or 'csv' must be set");
  }
  if (has("design")) {
    DesignSpec spec;
    spec.kind = parse_design(detail::lower(get("design")));
    spec.dim = has("dim") ? detail::parse_number<Index>(get("dim"), "dim") : default_dim(spec.kind);
    cfg.design = spec;
    cfg.trim_alpha = default_trim_alpha(spec.kind);
    cfg.intercept_mode = Intercept::None;  // coefficients match the raw covariate dimension
    if (!has("n")) {
      violations.push_back("'n' is required with a synthetic design");
    } else {
      cfg.n = detail::parse_number<Index>(get("n"), "n");
    }
  } else {
    cfg.csv_path = get("csv");
    cfg.intercept_mode = Intercept::Prepend;
    cfg.protocol = Protocol::Conditional;
    if (!has("response")) {
      violations.push_back("'response' is required with a csv source");
    } else {
      cfg.response_column = get("response");
    }
    if (has("standardize")) cfg.standardize = detail::parse_bool(get("standardize"), "standardize");
    if (has("dim")) violations.push_back("'dim' is not meaningful with a csv source");
  }

  if (has("beta0")) {
    const std::string value = get("beta0");
    if (detail::lower(value) == "linear-30") {
      cfg.beta0.kind = Beta0Spec::Kind::PresetLinear30;
    } else if (value.find(',') != std::string::npos) {
      const auto items = detail::split_list(value);
      cfg.beta0.kind = Beta0Spec::Kind::List;
      cfg.beta0.list.resize(static_cast<Index>(items.size()));
      for (std::size_t i = 0; i < items.size(); ++i) {
        cfg.beta0.list[static_cast<Index>(i)] = detail::parse_real(items[i], "beta0");
      }
    } else {
      cfg.beta0.kind = Beta0Spec::Kind::Constant;
      cfg.beta0.constant = detail::parse_real(value, "beta0");
    }
  } else {
    switch (cfg.family) {
      case GlmFamily::Logistic:
        cfg.beta0 = Beta0Spec{Beta0Spec::Kind::Constant, 1.0, {}};
        break;
      case GlmFamily::Poisson:
        cfg.beta0 = Beta0Spec{Beta0Spec::Kind::Constant, 0.5, {}};
        break;
      case GlmFamily::Linear:
        cfg.beta0 = Beta0Spec{Beta0Spec::Kind::PresetLinear30, 0.0, {}};
        break;
    }
  }

  if (has("r_p")) cfg.r_p = detail::parse_number<Index>(get("r_p"), "r_p");
  if (has("r_grid")) {
    for (const auto& item : detail::split_list(get("r_grid"))) {
      cfg.r_grid.push_back(detail::parse_number<Index>(item, "r_grid"));
    }
  } else {
    violations.push_back("'r_grid' is required");
  }
  if (has("s")) {
    cfg.repetitions = detail::parse_number<int>(get("s"), "s");
  } else {
    violations.push_back("'s' (number of repetitions) is required");
  }

  if (has("criteria")) {
    cfg.criteria.clear();
    for (const auto& item : detail::split_list(get("criteria"))) {
      const std::string v = detail::lower(item);
      if (v == "aopt" || v == "a-os") {
        cfg.criteria.push_back(Criterion::Kind::AOpt);
      } else if (v == "lopt" || v == "l-os") {
        cfg.criteria.push_back(Criterion::Kind::LOpt);
      } else {
        throw ParseError("key 'criteria': unknown criterion '" + item + "'");
      }
    }
  }
  if (has("methods")) {
    cfg.methods.clear();
    for (const auto& item : detail::split_list(get("methods"))) {
      const std::string v = detail::lower(item);
      if (v == "unweighted") {
        cfg.methods.push_back(Method::Unweighted);
      } else if (v == "weighted") {
        cfg.methods.push_back(Method::Weighted);
      } else {
        throw ParseError("key 'methods': unknown method '" + item + "'");
      }
    }
  }
  if (has("pilot")) {
    const std::string v = detail::lower(get("pilot"));
    if (v == "srs") {
      cfg.pilot_method = PilotMethod::SimpleRandom;
    } else if (v == "case-control") {
      cfg.pilot_method = PilotMethod::CaseControl;
    } else {
      throw ParseError("key 'pilot': expected srs|case-control, got '" + v + "'");
    }
  }
  if (has("p_m")) cfg.p_m = detail::parse_real(get("p_m"), "p_m");
  if (has("trim_alpha")) cfg.trim_alpha = detail::parse_real(get("trim_alpha"), "trim_alpha");
  if (has("seed")) cfg.seed = detail::parse_number<std::uint64_t>(get("seed"), "seed");
  if (has("intercept")) {
    const std::string v = detail::lower(get("intercept"));
    if (v == "none") {
      cfg.intercept_mode = Intercept::None;
    } else if (v == "prepend") {
      cfg.intercept_mode = Intercept::Prepend;
    } else {
      throw ParseError("key 'intercept': expected none|prepend, got '" + v + "'");
    }
  }
  if (has("protocol")) {
    const std::string v = detail::lower(get("protocol"));
    if (v == "unconditional") {
      cfg.protocol = Protocol::Unconditional;
    } else if (v == "conditional") {
      cfg.protocol = Protocol::Conditional;
    } else {
      throw ParseError("key 'protocol': expected unconditional|conditional, got '" + v + "'");
    }
  }
  if (has("noise_sd")) cfg.noise_sd = detail::parse_real(get("noise_sd"), "noise_sd");
  if (has("output")) cfg.output_path = get("output");

  // Collected validation, reported in one shot.
  if (cfg.repetitions < 1 && has("s")) violations.push_back("'s' must be at least 1");
  if (cfg.r_p < 1) violations.push_back("'r_p' must be at least 1");
  if (!(cfg.trim_alpha >= 0.0) || cfg.trim_alpha >= 0.5) {
    violations.push_back("'trim_alpha' must lie in [0, 0.5)");
  }
  if (cfg.p_m.has_value() && (!(*cfg.p_m > 0.0) || !(*cfg.p_m < 1.0))) {
    violations.push_back("'p_m' must lie strictly between 0 and 1");
  }
  if (cfg.design.has_value()) {
    if (cfg.n < 1) violations.push_back("'n' must be at least 1");
    if (cfg.design->dim < 1) violations.push_back("'dim' must be at least 1");
    if (cfg.n >= 1 && cfg.r_p > cfg.n) violations.push_back("'r_p' exceeds 'n'");
    for (const Index r : cfg.r_grid) {
      if (r < 1 || (cfg.n >= 1 && r > cfg.n)) {
        violations.push_back("r_grid entry " + std::to_string(r) + " outside [1, n]");
      }
    }
    Index model_dim = cfg.design->dim;
    if (cfg.intercept_mode == Intercept::Prepend) ++model_dim;
    try {
      (void)cfg.beta0.resolve(model_dim);
    } catch (const ValidationError& e) {
      violations.push_back(e.what());
    }
  } else {
    for (const Index r : cfg.r_grid) {
      if (r < 1) violations.push_back("r_grid entry " + std::to_string(r) + " must be positive");
    }
  }

  if (!violations.empty()) {
    std::string msg = origin + ": invalid configuration:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw ValidationError(msg);
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace osmc
