#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dsda/driver.hpp"

namespace dsda {

enum class ReportFormat { csv, json };

inline std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", r);
  return buf;
}

inline void write_csv(const ConvergenceReport& r, std::ostream& out) {
  out << "k,residual,rank,basis_cols,elapsed_ms\n";
  char ms[32];
  for (const auto& it : r.iterations) {
    std::snprintf(ms, sizeof ms, "%.3f", it.elapsed_ms);
    out << it.k << ',' << format_residual(it.residual) << ',' << it.rank << ',' << it.basis_cols << ','
        << ms << '\n';
  }
}

namespace detail {

inline nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json report_json(const ConvergenceReport& r) {
  using nlohmann::json;
  json j;
  j["family"] = to_string(r.family);
  j["method"] = to_string(r.method);
  j["status"] = to_string(r.status);
  if (!r.message.empty()) j["message"] = r.message;
  j["config"] = {
      {"tol", r.config.tol},
      {"max_iter", r.config.max_iter},
      {"column_budget", r.config.column_budget},
      {"gamma", detail::optional_json(r.config.gamma)},
      {"alpha", detail::optional_json(r.config.alpha)},
      {"beta", detail::optional_json(r.config.beta)},
  };
  j["shifts"] = {{"gamma", detail::optional_json(r.gamma)},
                 {"alpha", detail::optional_json(r.alpha)},
                 {"beta", detail::optional_json(r.beta)}};
  json its = json::array();
  for (const auto& it : r.iterations) {
    its.push_back({{"k", it.k},
                   {"residual", it.residual},
                   {"rank", it.rank},
                   {"basis_cols", it.basis_cols},
                   {"elapsed_ms", it.elapsed_ms},
                   {"increment", detail::finite_or_null(it.increment)},
                   {"kernel_min_eig", detail::finite_or_null(it.kernel_min_eig)}});
  }
  j["iterations"] = its;
  if (r.family == Family::bsep) {
    json ev = json::array();
    for (const auto& z : r.eigenvalues) ev.push_back({z.real(), z.imag()});
    j["eigenvalues"] = ev;
  }
  return j;
}

inline void write_json(const ConvergenceReport& r, std::ostream& out) {
  out << report_json(r).dump(2) << '\n';
}

inline void emit_report(const ConvergenceReport& r, ReportFormat fmt, std::ostream& out) {
  if (fmt == ReportFormat::csv) write_csv(r, out);
  else write_json(r, out);
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "failed to write report");
}

inline void emit_report(const ConvergenceReport& r, ReportFormat fmt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  emit_report(r, fmt, out);
}

}  // namespace dsda
