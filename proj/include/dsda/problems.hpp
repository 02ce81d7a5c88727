#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dsda/matkit.hpp"

namespace dsda {

enum class Family { care, dare, mare, bsep };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::care: return "care";
    case Family::dare: return "dare";
    case Family::mare: return "mare";
    case Family::bsep: return "bsep";
  }
  return "?";
}

/// A^T X + X A - X B B^T X + C^T C = 0.
struct CareProblem {
  MatrixR A;  // n x n
  MatrixR B;  // n x m
  MatrixR C;  // l x n
  double gamma = 1.0;
};

/// X = A^T X (I + B B^T X)^{-1} A + C^T C.
struct DareProblem {
  MatrixR A;
  MatrixR B;
  MatrixR C;
};

/// X C X - X D - A X + B = 0 with B = Bl Br^T, C = Cl Cr^T.
struct MareProblem {
  MatrixR A;   // m x m
  MatrixR D;   // n x n
  MatrixR Bl;  // m x m1
  MatrixR Br;  // n x m1
  MatrixR Cl;  // n x n1
  MatrixR Cr;  // m x n1
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<double> beta;

  MatrixR B() const { return Bl * Br.transpose(); }
  MatrixR C() const { return Cl * Cr.transpose(); }
};

/// H = [[A, B], [-conj(B), -conj(A)]] with A Hermitian and B = LB LB^T.
struct BsepProblem {
  MatrixC A;   // n x n
  MatrixC LB;  // n x p
  std::optional<double> alpha;

  MatrixC B() const { return LB * LB.transpose(); }
  MatrixC hamiltonian() const {
    const Eigen::Index n = A.rows();
    MatrixC h(2 * n, 2 * n);
    const MatrixC b = B();
    h << A, b, -b.conjugate(), -A.conjugate();
    return h;
  }
};

using Problem = std::variant<CareProblem, DareProblem, MareProblem, BsepProblem>;

inline Family family_of(const Problem& p) {
  return static_cast<Family>(p.index());
}

// ---------------------------------------------------------------------------
// validation

inline void validate(const CareProblem& p) {
  require_square(p.A.rows(), p.A.cols(), "A");
  require_rows(p.B.rows(), p.A.rows(), "B");
  if (p.C.cols() != p.A.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "C must have as many columns as A");
  }
  if (!(p.gamma > 0.0)) throw Error(ErrorCode::InvalidShift, "gamma must be positive");
}

inline void validate(const DareProblem& p) {
  require_square(p.A.rows(), p.A.cols(), "A");
  require_rows(p.B.rows(), p.A.rows(), "B");
  if (p.C.cols() != p.A.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "C must have as many columns as A");
  }
}

inline void validate(const MareProblem& p) {
  require_square(p.A.rows(), p.A.cols(), "A");
  require_square(p.D.rows(), p.D.cols(), "D");
  const Eigen::Index m = p.A.rows();
  const Eigen::Index n = p.D.rows();
  require_rows(p.Bl.rows(), m, "Bl");
  require_rows(p.Br.rows(), n, "Br");
  require_rows(p.Cl.rows(), n, "Cl");
  require_rows(p.Cr.rows(), m, "Cr");
  if (p.Bl.cols() != p.Br.cols()) throw Error(ErrorCode::DimensionMismatch, "Bl and Br widths differ");
  if (p.Cl.cols() != p.Cr.cols()) throw Error(ErrorCode::DimensionMismatch, "Cl and Cr widths differ");
}

inline void validate(const BsepProblem& p) {
  require_square(p.A.rows(), p.A.cols(), "A");
  require_rows(p.LB.rows(), p.A.rows(), "LB");
  const double herm = frobenius_norm(MatrixC(p.A - p.A.adjoint()));
  if (herm > 1e-12 * std::max(1.0, frobenius_norm(p.A))) {
    throw Error(ErrorCode::DimensionMismatch, "A is not Hermitian");
  }
  if (p.alpha && !(*p.alpha > 0.0)) throw Error(ErrorCode::InvalidShift, "alpha must be positive");
}

inline void validate(const Problem& p) {
  std::visit([](const auto& q) { validate(q); }, p);
}

// ---------------------------------------------------------------------------
// shifts

/// Shifts used by the MARE recursions: A is shifted by beta, D by alpha, and
/// the Cayley scale is alpha + beta. The single-shift form has alpha = beta.
struct MareShifts {
  double alpha;
  double beta;
  double sum() const { return alpha + beta; }
};

enum class MareMode { sda, adda };

inline MareShifts resolve_mare_shifts(const MareProblem& p, MareMode mode) {
  const double amax = p.A.size() ? p.A.diagonal().maxCoeff() : 0.0;
  const double dmax = p.D.size() ? p.D.diagonal().maxCoeff() : 0.0;
  if (mode == MareMode::sda) {
    const double lo = std::max(amax, dmax);
    const double g = p.gamma.value_or(lo);
    if (!(g >= lo) || !(g > 0.0)) {
      throw Error(ErrorCode::InvalidShift,
                  "gamma must be at least the largest diagonal entry of A and D (" +
                      std::to_string(lo) + ")");
    }
    return {g, g};
  }
  const double a = p.alpha.value_or(amax);
  const double b = p.beta.value_or(dmax);
  if (!(a >= amax)) throw Error(ErrorCode::InvalidShift, "alpha is below the largest diagonal entry of A");
  if (!(b >= dmax)) throw Error(ErrorCode::InvalidShift, "beta is below the largest diagonal entry of D");
  if (!(a + b > 0.0)) throw Error(ErrorCode::InvalidShift, "alpha + beta must be positive");
  return {a, b};
}

/// Checks that alpha*I - A and R = I - (aI - conj A)^{-1} conj(B) (aI - A)^{-1} B
/// are invertible. Throws SingularMatrix otherwise.
inline void check_bsep_shift(const BsepProblem& p, double alpha) {
  const Eigen::Index n = p.A.rows();
  const MatrixC I = MatrixC::Identity(n, n);
  const MatrixC shifted = alpha * I - p.A;
  auto lu = checked_lu(shifted, "alpha*I - A");
  auto luc = checked_lu(MatrixC(shifted.conjugate()), "alpha*I - conj(A)");
  const MatrixC b = p.B();
  const MatrixC r = I - luc.solve(MatrixC(b.conjugate() * lu.solve(b)));
  checked_lu(r, "R");
}

/// Default alpha is 1, doubled up to 8 times while the shift is unusable.
/// A user-supplied alpha is never altered.
inline double resolve_bsep_shift(const BsepProblem& p) {
  if (p.alpha) {
    if (!(*p.alpha > 0.0)) throw Error(ErrorCode::InvalidShift, "alpha must be positive");
    check_bsep_shift(p, *p.alpha);
    return *p.alpha;
  }
  double alpha = 1.0;
  for (int attempt = 0;; ++attempt) {
    try {
      check_bsep_shift(p, alpha);
      return alpha;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularMatrix || attempt == 8) throw;
      alpha *= 2.0;
    }
  }
}

inline void require_full_column_rank(const MatrixR& f, const char* what) {
  if (f.cols() == 0) return;
  if (numerical_rank(f, 1e-12) < f.cols()) {
    throw Error(ErrorCode::RankDeficientFactor, std::string(what) + " is not of full column rank");
  }
}

// ---------------------------------------------------------------------------
// generators

namespace detail {

inline MatrixR gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double sd = 1.0) {
  std::normal_distribution<double> dist(0.0, sd);
  MatrixR m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = dist(rng);
  return m;
}

inline MatrixR uniform(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  MatrixR m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = dist(rng);
  return m;
}

inline MatrixC complex_gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> dist(0.0, 1.0);
  MatrixC m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) {
      const double re = dist(rng);
      const double im = dist(rng);
      m(i, j) = Complex(re, im);
    }
  return m;
}

// Haar-distributed orthogonal matrix from the QR of a Gaussian matrix.
inline MatrixR random_orthogonal(std::mt19937_64& rng, Eigen::Index n) {
  const MatrixR g = gaussian(rng, n, n);
  Eigen::HouseholderQR<MatrixR> qr(g);
  MatrixR q = qr.householderQ();
  const MatrixR r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace detail

/// A = -(W W^T + I) with W ~ N(0, 1/n): symmetric negative definite.
inline CareProblem gen_random_care(int n, int m, int l, std::uint64_t seed, double gamma = 1.0) {
  std::mt19937_64 rng(seed);
  const MatrixR w = detail::gaussian(rng, n, n, 1.0 / std::sqrt(double(n)));
  CareProblem p;
  p.A = -(w * w.transpose() + MatrixR::Identity(n, n));
  p.B = detail::gaussian(rng, n, m);
  p.C = detail::gaussian(rng, l, n);
  p.gamma = gamma;
  return p;
}

/// A = Q/2 with Q Haar orthogonal, small Gaussian B and C.
inline DareProblem gen_random_dare(int n, int m, int l, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DareProblem p;
  p.A = 0.5 * detail::random_orthogonal(rng, n);
  p.B = detail::gaussian(rng, n, m, 0.3 / std::sqrt(double(m)));
  p.C = detail::gaussian(rng, l, n, 0.3 / std::sqrt(double(l)));
  return p;
}

/// M = [[D, -C], [-B, A]] = s I - N with N >= 0 uniform and s = 1.5 rho(N).
inline MareProblem gen_random_mare(int m, int n, int m1, int n1, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MareProblem p;
  p.Bl = detail::uniform(rng, m, m1);
  p.Br = detail::uniform(rng, n, m1);
  p.Cl = detail::uniform(rng, n, n1);
  p.Cr = detail::uniform(rng, m, n1);
  const MatrixR na = detail::uniform(rng, m, m);
  const MatrixR nd = detail::uniform(rng, n, n);
  MatrixR big(m + n, m + n);
  big << nd, p.C(), p.B(), na;
  const double rho = big.eigenvalues().cwiseAbs().maxCoeff();
  const double s = 1.5 * rho;
  p.A = s * MatrixR::Identity(m, m) - na;
  p.D = s * MatrixR::Identity(n, n) - nd;
  return p;
}

/// A = -(X X^H / n + I) Hermitian negative definite, LB = 0.3 * complex Gaussian
/// rescaled so ||LB||_2^2 <= 1/2. Since -A >= I, [[A, B], [conj(B), conj(A)]] stays
/// negative definite and the spectrum of the Hamiltonian is real and split.
inline BsepProblem gen_random_bsep(int n, int p_cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const MatrixC x = detail::complex_gaussian(rng, n, n);
  BsepProblem p;
  p.A = -(x * x.adjoint() / double(n) + MatrixC::Identity(n, n));
  p.A = (p.A + p.A.adjoint()) * 0.5;
  p.LB = 0.3 * detail::complex_gaussian(rng, n, p_cols);
  if (p.LB.size()) {
    const double top = Eigen::JacobiSVD<MatrixC>(p.LB).singularValues()(0);
    if (top * top > 0.5) p.LB *= std::sqrt(0.5) / top;
  }
  return p;
}

// ---------------------------------------------------------------------------
// scalar instances with closed-form answers

struct ScalarCase {
  std::string name;
  Problem problem;
  double expected;  // solution for the Riccati families, stable eigenvalue for bsep
};

inline MatrixR scalar(double v) { return MatrixR::Constant(1, 1, v); }

inline std::vector<ScalarCase> gen_scalar_suite() {
  std::vector<ScalarCase> out;
  out.push_back({"care", CareProblem{scalar(-1.0), scalar(1.0), scalar(1.0), 1.0}, std::sqrt(2.0) - 1.0});
  out.push_back({"dare", DareProblem{scalar(0.5), scalar(1.0), scalar(1.0)},
                 (0.25 + std::sqrt(4.0625)) / 2.0});
  MareProblem mp;
  mp.A = scalar(2.0);
  mp.D = scalar(3.0);
  mp.Bl = scalar(1.0);
  mp.Br = scalar(1.0);
  mp.Cl = scalar(1.0);
  mp.Cr = scalar(1.0);
  out.push_back({"mare", mp, (5.0 - std::sqrt(21.0)) / 2.0});
  BsepProblem bp;
  bp.A = MatrixC::Constant(1, 1, Complex(2.0, 0.0));
  bp.LB = MatrixC::Constant(1, 1, Complex(1.0, 0.0));
  out.push_back({"bsep", bp, -std::sqrt(3.0)});
  return out;
}

}  // namespace dsda
