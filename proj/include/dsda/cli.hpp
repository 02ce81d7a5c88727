#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsda/config.hpp"
#include "dsda/report.hpp"

namespace dsda {

inline int exit_code(Status s) {
  switch (s) {
    case Status::Converged: return 0;
    case Status::MaxIter: return 2;
    case Status::BudgetExceeded: return 3;
    case Status::SingularEncountered: return 4;
  }
  return 1;
}

namespace cli_detail {

struct SelftestLine {
  std::string name;
  Method method;
  Status status;
  double value;
  double expected;
  bool pass;
};

inline std::vector<SelftestLine> run_selftest(double tol = 1e-10) {
  std::vector<SelftestLine> out;
  for (const auto& c : gen_scalar_suite()) {
    for (Method m : {Method::sda, Method::dsda}) {
      SolveConfig cfg;
      cfg.family = family_of(c.problem);
      cfg.method = m;
      cfg.max_iter = 8;
      const ConvergenceReport r = solve_driver(c.problem, cfg);
      double v = std::nan("");
      if (cfg.family == Family::bsep) {
        if (!r.eigenvalues.empty()) v = r.eigenvalues.front().real();
      } else if (!r.iterations.empty()) {
        v = r.real_solution()(0, 0);
      }
      out.push_back({c.name, m, r.status, v, c.expected, std::abs(v - c.expected) <= tol});
    }
  }
  return out;
}

inline void write_generated(const Problem& p, const std::filesystem::path& dir, std::ostream& log) {
  std::filesystem::create_directories(dir);
  std::map<std::string, std::string> files;
  auto put = [&](const std::string& key, const auto& m) {
    const std::string name = key + ".mtx";
    save_matrix_market((dir / name).string(), Mat<typename std::decay_t<decltype(m)>::Scalar>(m));
    files[key] = name;
  };
  std::ofstream cfg((dir / "problem.cfg").string());
  if (!cfg) throw Error(ErrorCode::IoError, "cannot write " + (dir / "problem.cfg").string());
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, CareProblem>) {
          put("A", q.A), put("B", q.B), put("C", q.C);
          char g[40];
          std::snprintf(g, sizeof g, "%.17g", q.gamma);
          cfg << "family = care\nmethod = dsda\ngamma = " << g << "\n";
        } else if constexpr (std::is_same_v<T, DareProblem>) {
          put("A", q.A), put("B", q.B), put("C", q.C);
          cfg << "family = dare\nmethod = dsda\n";
        } else if constexpr (std::is_same_v<T, MareProblem>) {
          put("A", q.A), put("D", q.D), put("Bl", q.Bl), put("Br", q.Br), put("Cl", q.Cl), put("Cr", q.Cr);
          cfg << "family = mare\nmethod = dsda\n";
        } else {
          put("A", q.A), put("LB", q.LB);
          cfg << "family = bsep\nmethod = dsda\n";
        }
      },
      p);
  for (const auto& [k, f] : files) cfg << k << " = " << f << "\n";
  log << "wrote " << files.size() << " matrices and problem.cfg to " << dir.string() << "\n";
}

}  // namespace cli_detail

/// solve | selftest | gen. Returns the process exit code.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Doubling solvers for Riccati equations and the Bethe-Salpeter eigenproblem", "dsda"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Run a solver and print its convergence report");
  std::string config_path, family_s, method_s, output_s = "csv", out_path;
  std::map<std::string, std::string> mats;
  double tol = 0, gamma = 0, alpha = 0, beta = 0;
  int max_iter = 0;
  long long budget = 0;
  solve->add_option("--config", config_path, "key=value problem file");
  auto* o_family = solve->add_option("--family", family_s, "care | dare | mare | bsep");
  auto* o_method = solve->add_option("--method", method_s, "sda | dsda | adda");
  for (const auto& key : matrix_keys()) solve->add_option("--" + key, mats[key], "Matrix Market file for " + key);
  auto* o_tol = solve->add_option("--tol", tol, "stopping tolerance (default 1e-13)");
  auto* o_iter = solve->add_option("--max-iter", max_iter, "maximum doublings (default 20)");
  auto* o_budget = solve->add_option("--column-budget", budget, "basis column cap (default 4096)");
  auto* o_gamma = solve->add_option("--gamma", gamma, "shift for care, single-shift mare");
  auto* o_alpha = solve->add_option("--alpha", alpha, "shift for bsep, first adda shift");
  auto* o_beta = solve->add_option("--beta", beta, "second adda shift");
  solve->add_option("--output", output_s, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  solve->add_option("--out-path", out_path, "write the report here instead of stdout");

  // selftest
  auto* selftest = app.add_subcommand("selftest", "Check scalar closed forms with both methods");

  // gen
  auto* gen = app.add_subcommand("gen", "Write a seeded random problem as Matrix Market files");
  std::string gen_family, gen_dir;
  int gn = 8, gm = 2, gl = 2, gm1 = 1, gn1 = 1, gp = 2;
  std::uint64_t seed = 1;
  double gen_gamma = 1.0;
  gen->add_option("--family", gen_family, "care | dare | mare | bsep")->required();
  gen->add_option("--out-path", gen_dir, "output directory")->required();
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--n", gn, "state dimension (mare: size of D)");
  gen->add_option("--m", gm, "input width (mare: size of A)");
  gen->add_option("--l", gl, "output width");
  gen->add_option("--m1", gm1, "mare: rank of B");
  gen->add_option("--n1", gn1, "mare: rank of C");
  gen->add_option("--p", gp, "bsep: width of LB");
  gen->add_option("--gamma", gen_gamma, "care shift written to problem.cfg");

  std::vector<std::string> argv_store;
  argv_store.push_back("dsda");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*selftest) {
      bool ok = true;
      char buf[160];
      for (const auto& l : cli_detail::run_selftest()) {
        std::snprintf(buf, sizeof buf, "%-5s %-5s %-19s value=% .15f expected=% .15f %s\n", l.name.c_str(),
                      to_string(l.method), to_string(l.status), l.value, l.expected, l.pass ? "ok" : "FAIL");
        out << buf;
        ok = ok && l.pass;
      }
      return ok ? 0 : 1;
    }

    if (*gen) {
      if (gn < 1 || gm < 0 || gl < 0 || gm1 < 0 || gn1 < 0 || gp < 0) {
        throw Error(ErrorCode::ConfigError, "dimensions must be nonnegative and n positive");
      }
      Problem p;
      switch (parse_family(gen_family)) {
        case Family::care: p = gen_random_care(gn, gm, gl, seed, gen_gamma); break;
        case Family::dare: p = gen_random_dare(gn, gm, gl, seed); break;
        case Family::mare: p = gen_random_mare(gm, gn, gm1, gn1, seed); break;
        case Family::bsep: p = gen_random_bsep(gn, gp, seed); break;
      }
      cli_detail::write_generated(p, gen_dir, out);
      return 0;
    }

    // solve
    RunSpec spec;
    bool have_family = false;
    if (!config_path.empty()) {
      spec = load_config(config_path);
      have_family = true;
    }
    SolveConfig& cfg = spec.config;
    if (o_family->count()) {
      cfg.family = parse_family(family_s);
      have_family = true;
    }
    if (!have_family) throw Error(ErrorCode::ConfigError, "--family is required (or --config)");
    if (o_method->count()) cfg.method = parse_method(method_s);
    if (o_tol->count()) {
      if (!(tol > 0.0)) throw Error(ErrorCode::ConfigError, "--tol must be positive");
      cfg.tol = tol;
    }
    if (o_iter->count()) cfg.max_iter = max_iter;
    if (o_budget->count()) {
      if (budget < 1) throw Error(ErrorCode::ConfigError, "--column-budget must be positive");
      cfg.column_budget = std::size_t(budget);
    }
    if (o_gamma->count()) cfg.gamma = gamma;
    if (o_alpha->count()) cfg.alpha = alpha;
    if (o_beta->count()) cfg.beta = beta;
    for (const auto& [key, path] : mats) {
      if (!path.empty()) spec.matrices[key] = path;
    }
    if (cfg.family == Family::care && !cfg.gamma) {
      throw Error(ErrorCode::ConfigError, "--gamma is required for family care");
    }
    cfg.validate();
    const Problem problem = load_problem(spec);
    const ConvergenceReport report = solve_driver(problem, cfg);
    const ReportFormat fmt = output_s == "json" ? ReportFormat::json : ReportFormat::csv;
    if (out_path.empty()) emit_report(report, fmt, out);
    else emit_report(report, fmt, out_path);
    if (report.status != Status::Converged) {
      err << "status: " << to_string(report.status);
      if (!report.message.empty()) err << " (" << report.message << ")";
      err << "\n";
    }
    return exit_code(report.status);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace dsda
