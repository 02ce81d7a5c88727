#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dsda/decoupled.hpp"
#include "dsda/residuals.hpp"
#include "dsda/sda.hpp"

namespace dsda {

/// sda: coupled recursions. dsda: decoupled recursions. adda: decoupled
/// recursions with the two-shift MARE start (MARE only).
enum class Method { sda, dsda, adda };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::sda: return "sda";
    case Method::dsda: return "dsda";
    case Method::adda: return "adda";
  }
  return "?";
}

enum class Status { Converged, MaxIter, BudgetExceeded, SingularEncountered };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::MaxIter: return "MaxIter";
    case Status::BudgetExceeded: return "BudgetExceeded";
    case Status::SingularEncountered: return "SingularEncountered";
  }
  return "?";
}

struct SolveConfig {
  Family family = Family::care;
  Method method = Method::dsda;
  double tol = 1e-13;
  int max_iter = 20;
  std::size_t column_budget = default_column_budget();
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<double> beta;

  void validate() const {
    if (!(tol > 0.0) || !std::isfinite(tol)) throw Error(ErrorCode::ConfigError, "tol must be positive");
    if (max_iter < 1) throw Error(ErrorCode::ConfigError, "max_iter must be at least 1");
    if (column_budget < 1) throw Error(ErrorCode::ConfigError, "column_budget must be at least 1");
    if (method == Method::adda && family != Family::mare) {
      throw Error(ErrorCode::ConfigError, "method adda applies to family mare only");
    }
  }
};

struct IterationRecord {
  int k = 0;
  double residual = 0.0;
  int rank = 0;
  long long basis_cols = 0;
  double elapsed_ms = 0.0;
  /// ||X_k - X_{k-1}|| / ||X_k||; NaN at k = 0.
  double increment = std::numeric_limits<double>::quiet_NaN();
  /// Smallest eigenvalue of I + Y^T Y for the decoupled DARE/CARE path when
  /// the kernel has at most 512 rows; NaN otherwise.
  double kernel_min_eig = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceReport {
  Family family = Family::care;
  Method method = Method::dsda;
  Status status = Status::MaxIter;
  std::string message;
  SolveConfig config;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::vector<IterationRecord> iterations;
  /// Last evaluated H (F for BSEP); empty if initialisation failed.
  std::variant<MatrixR, MatrixC> solution;
  std::optional<LowRankSolution<double>> factors;
  std::optional<LowRankSolution<Complex>> complex_factors;
  /// Approximate stable eigenvalues for BSEP, ascending real part.
  std::vector<Complex> eigenvalues;

  const MatrixR& real_solution() const { return std::get<MatrixR>(solution); }
  const MatrixC& complex_solution() const { return std::get<MatrixC>(solution); }
  double final_residual() const {
    return iterations.empty() ? std::numeric_limits<double>::quiet_NaN() : iterations.back().residual;
  }
};

namespace detail {

struct Evaluation {
  std::variant<MatrixR, MatrixC> dense;
  double residual = 0.0;
  long long basis_cols = 0;
  double kernel_min_eig = std::numeric_limits<double>::quiet_NaN();
  std::optional<LowRankSolution<double>> factors;
  std::optional<LowRankSolution<Complex>> complex_factors;
};

inline double increment_of(const Evaluation& now, const Evaluation& prev) {
  if (const auto* a = std::get_if<MatrixR>(&now.dense)) return bsep_increment(*a, std::get<MatrixR>(prev.dense));
  return bsep_increment(std::get<MatrixC>(now.dense), std::get<MatrixC>(prev.dense));
}

inline int rank_of(const Evaluation& e) {
  if (const auto* a = std::get_if<MatrixR>(&e.dense)) return numerical_rank(*a);
  return numerical_rank(std::get<MatrixC>(e.dense));
}

template <typename State, typename Init, typename Step, typename Eval>
void run_loop(ConvergenceReport& rep, const SolveConfig& cfg, Init init, Step step, Eval eval) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  std::optional<Evaluation> last;
  auto record = [&](int k, Evaluation ev) {
    IterationRecord r;
    r.k = k;
    r.residual = ev.residual;
    r.rank = rank_of(ev);
    r.basis_cols = ev.basis_cols;
    r.kernel_min_eig = ev.kernel_min_eig;
    if (last) r.increment = increment_of(ev, *last);
    r.elapsed_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    rep.iterations.push_back(r);
    last = std::move(ev);
  };
  try {
    State st = init();
    record(0, eval(st, static_cast<const Evaluation*>(nullptr)));
    for (;;) {
      if (rep.iterations.back().residual <= cfg.tol) {
        rep.status = Status::Converged;
        break;
      }
      if (st.k >= cfg.max_iter) {
        rep.status = Status::MaxIter;
        break;
      }
      st = step(st);
      Evaluation ev = eval(st, last ? &*last : nullptr);
      record(st.k, std::move(ev));
    }
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::BudgetExceeded: rep.status = Status::BudgetExceeded; break;
      case ErrorCode::SingularMatrix:
      case ErrorCode::NotSpd: rep.status = Status::SingularEncountered; break;
      default: throw;
    }
    rep.message = e.what();
  }
  if (last) {
    rep.solution = std::move(last->dense);
    rep.factors = std::move(last->factors);
    rep.complex_factors = std::move(last->complex_factors);
  }
}

inline double kernel_min_eig_if_small(const DsdaRealState& s) {
  if (s.Y.cols() == 0 || s.Y.cols() > 512) return std::numeric_limits<double>::quiet_NaN();
  return kernel_extreme_eigenvalues(s).first;
}

}  // namespace detail

inline ConvergenceReport solve_driver(const CareProblem& problem, const SolveConfig& cfg) {
  cfg.validate();
  CareProblem p = problem;
  if (cfg.gamma) p.gamma = *cfg.gamma;
  validate(p);
  ConvergenceReport rep;
  rep.family = Family::care;
  rep.method = cfg.method;
  rep.config = cfg;
  rep.gamma = p.gamma;
  using detail::Evaluation;
  if (cfg.method == Method::sda) {
    detail::run_loop<SymSdaState>(
        rep, cfg, [&] { return care_init(p); }, sym_sda_step,
        [&](const SymSdaState& s, const Evaluation*) {
          Evaluation e;
          e.dense = s.H;
          e.residual = care_residual(p, s.H);
          e.basis_cols = s.H.cols();
          return e;
        });
  } else {
    detail::run_loop<DsdaRealState>(
        rep, cfg, [&] { return dsda_care_init(p, cfg.column_budget); }, dsda_sym_step<double>,
        [&](const DsdaRealState& s, const Evaluation*) {
          Evaluation e;
          auto h = dsda_eval_H(s);
          MatrixR dense = symmetrize(h.dense());
          e.residual = care_residual(p, dense);
          e.dense = std::move(dense);
          e.basis_cols = s.basis_cols();
          e.kernel_min_eig = detail::kernel_min_eig_if_small(s);
          e.factors = std::move(h);
          return e;
        });
  }
  return rep;
}

inline ConvergenceReport solve_driver(const DareProblem& p, const SolveConfig& cfg) {
  cfg.validate();
  validate(p);
  ConvergenceReport rep;
  rep.family = Family::dare;
  rep.method = cfg.method;
  rep.config = cfg;
  using detail::Evaluation;
  if (cfg.method == Method::sda) {
    detail::run_loop<SymSdaState>(
        rep, cfg, [&] { return dare_init(p); }, sym_sda_step,
        [&](const SymSdaState& s, const Evaluation*) {
          Evaluation e;
          e.dense = s.H;
          e.residual = dare_residual(p, s.H);
          e.basis_cols = s.H.cols();
          return e;
        });
  } else {
    detail::run_loop<DsdaRealState>(
        rep, cfg, [&] { return dsda_dare_init(p, cfg.column_budget); }, dsda_sym_step<double>,
        [&](const DsdaRealState& s, const Evaluation*) {
          Evaluation e;
          auto h = dsda_eval_H(s);
          MatrixR dense = symmetrize(h.dense());
          e.residual = dare_residual(p, dense);
          e.dense = std::move(dense);
          e.basis_cols = s.basis_cols();
          e.kernel_min_eig = detail::kernel_min_eig_if_small(s);
          e.factors = std::move(h);
          return e;
        });
  }
  return rep;
}

inline ConvergenceReport solve_driver(const MareProblem& problem, const SolveConfig& cfg) {
  cfg.validate();
  MareProblem p = problem;
  if (cfg.gamma) p.gamma = cfg.gamma;
  if (cfg.alpha) p.alpha = cfg.alpha;
  if (cfg.beta) p.beta = cfg.beta;
  validate(p);
  const MareMode mode = cfg.method == Method::adda ? MareMode::adda : MareMode::sda;
  const MareShifts sh = resolve_mare_shifts(p, mode);
  ConvergenceReport rep;
  rep.family = Family::mare;
  rep.method = cfg.method;
  rep.config = cfg;
  if (mode == MareMode::sda) {
    rep.gamma = sh.alpha;
  } else {
    rep.alpha = sh.alpha;
    rep.beta = sh.beta;
  }
  using detail::Evaluation;
  if (cfg.method == Method::sda) {
    detail::run_loop<MareSdaState>(
        rep, cfg, [&] { return mare_init(p, mode); }, mare_sda_step,
        [&](const MareSdaState& s, const Evaluation*) {
          Evaluation e;
          e.dense = s.H;
          e.residual = mare_residual(p, s.H);
          e.basis_cols = std::max(s.H.rows(), s.H.cols());
          return e;
        });
  } else {
    detail::run_loop<DsdaMareState>(
        rep, cfg, [&] { return dsda_mare_init(p, mode, cfg.column_budget); }, dsda_mare_step,
        [&](const DsdaMareState& s, const Evaluation*) {
          Evaluation e;
          auto h = dsda_mare_eval_H(s);
          MatrixR dense = h.dense();
          e.residual = mare_residual(p, dense);
          e.dense = std::move(dense);
          e.basis_cols = s.basis_cols();
          e.factors = std::move(h);
          return e;
        });
  }
  return rep;
}

inline ConvergenceReport solve_driver(const BsepProblem& problem, const SolveConfig& cfg) {
  cfg.validate();
  BsepProblem p = problem;
  if (cfg.alpha) p.alpha = cfg.alpha;
  validate(p);
  ConvergenceReport rep;
  rep.family = Family::bsep;
  rep.method = cfg.method;
  rep.config = cfg;
  double alpha = 0.0;
  try {
    alpha = resolve_bsep_shift(p);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularMatrix) throw;
    rep.status = Status::SingularEncountered;
    rep.message = e.what();
    rep.alpha = p.alpha;
    return rep;
  }
  rep.alpha = alpha;
  const Eigen::Index n = p.A.rows();
  using detail::Evaluation;
  auto increment = [&](const MatrixC& f, const Evaluation* prev) {
    const MatrixC old = prev ? std::get<MatrixC>(prev->dense) : MatrixC(MatrixC::Zero(n, n));
    return bsep_increment(f, old);
  };
  if (cfg.method == Method::sda) {
    detail::run_loop<BsepSdaState>(
        rep, cfg, [&] { return bsep_init(p, alpha); }, bsep_sda_step,
        [&](const BsepSdaState& s, const Evaluation* prev) {
          Evaluation e;
          e.residual = increment(s.F, prev);
          e.dense = s.F;
          e.basis_cols = n;
          return e;
        });
  } else {
    detail::run_loop<DsdaComplexState>(
        rep, cfg, [&] { return dsda_bsep_init(p, alpha, cfg.column_budget); }, dsda_sym_step<Complex>,
        [&](const DsdaComplexState& s, const Evaluation* prev) {
          Evaluation e;
          auto f = bsep_eval_F(s);
          MatrixC dense = symmetrize(f.dense());
          e.residual = increment(dense, prev);
          e.dense = std::move(dense);
          e.basis_cols = s.basis_cols();
          e.complex_factors = std::move(f);
          return e;
        });
  }
  if (!rep.iterations.empty()) {
    rep.eigenvalues = bsep_eigen_extract(rep.complex_solution(), p.A, p.B());
  }
  return rep;
}

inline ConvergenceReport solve_driver(const Problem& p, const SolveConfig& cfg) {
  return std::visit([&](const auto& q) { return solve_driver(q, cfg); }, p);
}

}  // namespace dsda
