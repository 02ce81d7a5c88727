#pragma once

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dsda/driver.hpp"
#include "dsda/matrix_market.hpp"

namespace dsda {

/// Parsed run description: solver settings plus the matrix files to load.
struct RunSpec {
  SolveConfig config;
  std::map<std::string, std::string> matrices;  // key (A, B, ...) -> path
};

inline Family parse_family(const std::string& v) {
  if (v == "care") return Family::care;
  if (v == "dare") return Family::dare;
  if (v == "mare") return Family::mare;
  if (v == "bsep") return Family::bsep;
  throw Error(ErrorCode::ConfigError, "family: unknown value '" + v + "'");
}

inline Method parse_method(const std::string& v) {
  if (v == "sda") return Method::sda;
  if (v == "dsda") return Method::dsda;
  if (v == "adda") return Method::adda;
  throw Error(ErrorCode::ConfigError, "method: unknown value '" + v + "'");
}

inline const std::set<std::string>& matrix_keys() {
  static const std::set<std::string> keys{"A", "B", "C", "D", "Bl", "Br", "Cl", "Cr", "LB"};
  return keys;
}

inline std::vector<std::string> required_matrices(Family f) {
  switch (f) {
    case Family::care:
    case Family::dare: return {"A", "B", "C"};
    case Family::mare: return {"A", "D", "Bl", "Br", "Cl", "Cr"};
    case Family::bsep: return {"A", "LB"};
  }
  return {};
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double config_double(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* e = nullptr;
  errno = 0;
  const double d = std::strtod(b, &e);
  if (e == b || *e != '\0' || errno == ERANGE || !std::isfinite(d)) {
    throw Error(ErrorCode::ConfigError, key + ": '" + v + "' is not a number");
  }
  return d;
}

inline long long config_int(const std::string& key, const std::string& v) {
  const char* b = v.c_str();
  char* e = nullptr;
  errno = 0;
  const long long d = std::strtoll(b, &e, 10);
  if (e == b || *e != '\0' || errno == ERANGE) {
    throw Error(ErrorCode::ConfigError, key + ": '" + v + "' is not an integer");
  }
  return d;
}

}  // namespace detail

/// key = value per line, '#' starts a comment. Relative matrix paths are
/// resolved against base_dir.
inline RunSpec parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  RunSpec spec;
  std::set<std::string> seen;
  bool have_family = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": empty key");
    if (!seen.insert(key).second) throw Error(ErrorCode::ConfigError, key + ": given twice");
    if (val.empty()) throw Error(ErrorCode::ConfigError, key + ": empty value");

    SolveConfig& c = spec.config;
    if (key == "family") {
      c.family = parse_family(val);
      have_family = true;
    } else if (key == "method") {
      c.method = parse_method(val);
    } else if (key == "tol") {
      c.tol = detail::config_double(key, val);
      if (!(c.tol > 0.0)) throw Error(ErrorCode::ConfigError, "tol: must be positive, got '" + val + "'");
    } else if (key == "max_iter") {
      const long long v = detail::config_int(key, val);
      if (v < 1 || v > 64) throw Error(ErrorCode::ConfigError, "max_iter: must be in [1, 64], got '" + val + "'");
      c.max_iter = int(v);
    } else if (key == "column_budget") {
      const long long v = detail::config_int(key, val);
      if (v < 1) throw Error(ErrorCode::ConfigError, "column_budget: must be positive, got '" + val + "'");
      c.column_budget = std::size_t(v);
    } else if (key == "gamma" || key == "alpha" || key == "beta") {
      const double v = detail::config_double(key, val);
      if (!(v > 0.0)) throw Error(ErrorCode::ConfigError, key + ": must be positive, got '" + val + "'");
      (key == "gamma" ? c.gamma : key == "alpha" ? c.alpha : c.beta) = v;
    } else if (matrix_keys().count(key)) {
      std::filesystem::path p(val);
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      spec.matrices[key] = p.string();
    } else {
      throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
    }
  }
  if (!have_family) throw Error(ErrorCode::ConfigError, "family: missing");
  spec.config.validate();
  return spec;
}

inline RunSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_config(in, std::filesystem::path(path).parent_path());
}

/// Loads the matrices named in spec for its family.
inline Problem load_problem(const RunSpec& spec) {
  const Family f = spec.config.family;
  for (const auto& key : required_matrices(f)) {
    if (!spec.matrices.count(key)) {
      throw Error(ErrorCode::ConfigError, std::string(to_string(f)) + " needs matrix " + key);
    }
  }
  for (const auto& [key, path] : spec.matrices) {
    const auto need = required_matrices(f);
    if (std::find(need.begin(), need.end(), key) == need.end()) {
      throw Error(ErrorCode::ConfigError, "matrix " + key + " is not used by family " + to_string(f));
    }
  }
  auto get = [&](const char* k) { return load_matrix_market(spec.matrices.at(k)); };
  switch (f) {
    case Family::care: {
      CareProblem p{get("A"), get("B"), get("C"), spec.config.gamma.value_or(1.0)};
      validate(p);
      return p;
    }
    case Family::dare: {
      DareProblem p{get("A"), get("B"), get("C")};
      validate(p);
      return p;
    }
    case Family::mare: {
      MareProblem p;
      p.A = get("A");
      p.D = get("D");
      p.Bl = get("Bl");
      p.Br = get("Br");
      p.Cl = get("Cl");
      p.Cr = get("Cr");
      p.gamma = spec.config.gamma;
      p.alpha = spec.config.alpha;
      p.beta = spec.config.beta;
      validate(p);
      return p;
    }
    case Family::bsep: {
      BsepProblem p;
      p.A = load_matrix_market_complex(spec.matrices.at("A"));
      p.LB = load_matrix_market_complex(spec.matrices.at("LB"));
      p.alpha = spec.config.alpha;
      validate(p);
      return p;
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown family");
}

}  // namespace dsda
