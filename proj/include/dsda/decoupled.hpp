#pragma once

// Decoupled doubling: every iterate is a growing block basis times a small
// kernel. Only the bases and the kernels Y (and Z for MARE) are carried.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdlib>
#include <string>
#include <variant>
#include <vector>

#include "dsda/matkit.hpp"
#include "dsda/problems.hpp"

namespace dsda {

inline constexpr std::size_t kDefaultColumnBudget = 4096;
inline constexpr Eigen::Index kDenseEvalLimit = 512;

/// RICCATI_COLUMN_BUDGET overrides the built-in default when set to a positive integer.
inline std::size_t default_column_budget() {
  if (const char* env = std::getenv("RICCATI_COLUMN_BUDGET")) {
    char* end = nullptr;
    const long long v = std::strtoll(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return kDefaultColumnBudget;
}

inline void check_budget(int k, Eigen::Index width, std::size_t budget) {
  const double next = std::ldexp(double(width), k + 1);
  if (next > double(budget)) {
    throw Error(ErrorCode::BudgetExceeded,
                "doubling to k=" + std::to_string(k + 1) + " needs " +
                    std::to_string(static_cast<long long>(next)) + " columns, budget is " +
                    std::to_string(budget));
  }
}

// ---------------------------------------------------------------------------
// factored solutions

/// X = scale * left * K^{-1} * right^T with K kept in factored form.
template <typename Scalar>
class LowRankSolution {
 public:
  using Llt = Eigen::LLT<Mat<Scalar>>;
  using Lu = Eigen::PartialPivLU<Mat<Scalar>>;

  LowRankSolution() = default;

  static LowRankSolution spd(Mat<Scalar> left, Mat<Scalar> right, const Mat<Scalar>& kernel,
                             Scalar scale, const char* what) {
    LowRankSolution s(std::move(left), std::move(right), scale);
    if (kernel.size()) s.kernel_ = checked_llt(kernel, what);
    s.kernel_dim_ = kernel.rows();
    return s;
  }

  static LowRankSolution general(Mat<Scalar> left, Mat<Scalar> right, const Mat<Scalar>& kernel,
                                 Scalar scale, const char* what) {
    LowRankSolution s(std::move(left), std::move(right), scale);
    if (kernel.size()) s.kernel_ = checked_lu(kernel, what);
    s.kernel_dim_ = kernel.rows();
    return s;
  }

  const Mat<Scalar>& left() const { return left_; }
  const Mat<Scalar>& right() const { return right_; }
  Scalar scale() const { return scale_; }
  Eigen::Index kernel_dim() const { return kernel_dim_; }
  bool kernel_is_spd() const { return std::holds_alternative<Llt>(kernel_); }

  Mat<Scalar> kernel_solve(const Mat<Scalar>& b) const {
    if (const auto* llt = std::get_if<Llt>(&kernel_)) return llt->solve(b);
    if (const auto* lu = std::get_if<Lu>(&kernel_)) return lu->solve(b);
    return b;
  }

  Mat<Scalar> dense() const {
    if (kernel_dim_ == 0) return Mat<Scalar>::Zero(left_.rows(), right_.rows());
    return scale_ * left_ * kernel_solve(Mat<Scalar>(right_.transpose()));
  }

  /// X * x without forming X.
  Mat<Scalar> apply(const Mat<Scalar>& x) const {
    require_rows(x.rows(), right_.rows(), "LowRankSolution::apply operand");
    if (kernel_dim_ == 0) return Mat<Scalar>::Zero(left_.rows(), x.cols());
    return scale_ * left_ * kernel_solve(Mat<Scalar>(right_.transpose() * x));
  }

 private:
  LowRankSolution(Mat<Scalar> left, Mat<Scalar> right, Scalar scale)
      : left_(std::move(left)), right_(std::move(right)), scale_(scale) {}

  Mat<Scalar> left_;
  Mat<Scalar> right_;
  Scalar scale_ = Scalar(1);
  std::variant<std::monostate, Llt, Lu> kernel_;
  Eigen::Index kernel_dim_ = 0;
};

// ---------------------------------------------------------------------------
// DARE / CARE / BSEP

enum class SymFamily { dare, care, bsep };

/// Bases U = [U_0 .. U_{2^k-1}], V = [V_0 .. V_{2^k-1}], kernel Y and the
/// cached Gram block T = U^T V. U_j = P U_{j-1}, V_j = PV V_{j-1}.
template <typename Scalar>
struct DsdaSymState {
  SymFamily family = SymFamily::dare;
  Mat<Scalar> P;
  Mat<Scalar> PV;
  Mat<Scalar> U;
  Mat<Scalar> V;
  Mat<Scalar> Y;
  Mat<Scalar> T;
  Eigen::Index m = 0;  // width of one U block
  Eigen::Index l = 0;  // width of one V block
  double c = 1.0;      // evaluation scale
  int sigma = 1;       // kernel I + sigma Y^T Y
  Scalar mu = Scalar(1);
  int k = 0;
  std::size_t column_budget = kDefaultColumnBudget;

  Eigen::Index blocks() const { return Eigen::Index(1) << k; }
  Eigen::Index basis_cols() const { return std::max(U.cols(), V.cols()); }
};

using DsdaRealState = DsdaSymState<double>;
using DsdaComplexState = DsdaSymState<Complex>;

inline DsdaRealState dsda_dare_init(const DareProblem& p,
                                    std::size_t budget = default_column_budget()) {
  validate(p);
  DsdaRealState s;
  s.family = SymFamily::dare;
  s.P = p.A;
  s.PV = p.A.transpose();
  s.U = p.B;
  s.V = p.C.transpose();
  s.m = p.B.cols();
  s.l = p.C.rows();
  s.Y = MatrixR::Zero(s.m, s.l);
  s.T = s.U.transpose() * s.V;
  s.c = 1.0;
  s.sigma = 1;
  s.mu = 1.0;
  s.column_budget = budget;
  return s;
}

inline DsdaRealState dsda_care_init(const CareProblem& p,
                                    std::size_t budget = default_column_budget()) {
  validate(p);
  const Eigen::Index n = p.A.rows();
  const double g = p.gamma;
  const MatrixR I = MatrixR::Identity(n, n);
  auto lu = checked_lu(MatrixR(p.A - g * I), "A - gamma*I");
  DsdaRealState s;
  s.family = SymFamily::care;
  s.P = I + 2.0 * g * lu.solve(I);
  s.PV = s.P.transpose();
  s.U = lu.solve(p.B);
  s.V = lu.transpose().solve(MatrixR(p.C.transpose()));
  s.m = p.B.cols();
  s.l = p.C.rows();
  s.Y = p.B.transpose() * s.V;
  s.T = s.U.transpose() * s.V;
  s.c = 2.0 * g;
  s.sigma = 1;
  s.mu = 2.0 * g;
  s.column_budget = budget;
  return s;
}

/// V carries V_j, U is its entrywise conjugate; F = -2a V (I - Y^T Y)^{-1} V^T.
inline DsdaComplexState dsda_bsep_init(const BsepProblem& p, double alpha,
                                       std::size_t budget = default_column_budget()) {
  validate(p);
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidShift, "alpha must be positive");
  check_bsep_shift(p, alpha);
  const Eigen::Index n = p.A.rows();
  const MatrixC I = MatrixC::Identity(n, n);
  const MatrixC shifted = alpha * I - p.A;
  auto lu = checked_lu(shifted, "alpha*I - A");
  auto luc = checked_lu(MatrixC(shifted.conjugate()), "alpha*I - conj(A)");
  DsdaComplexState s;
  s.family = SymFamily::bsep;
  s.P = I - 2.0 * alpha * lu.solve(I);
  s.PV = s.P.conjugate();
  s.V = luc.solve(MatrixC(p.LB.conjugate()));
  s.U = s.V.conjugate();
  s.m = p.LB.cols();
  s.l = p.LB.cols();
  s.Y = p.LB.transpose() * s.V;
  s.T = s.U.transpose() * s.V;
  s.c = 2.0 * alpha;
  s.sigma = -1;
  s.mu = Complex(-2.0 * alpha, 0.0);
  s.column_budget = budget;
  return s;
}

namespace detail {

template <typename Scalar>
Mat<Scalar> grow_basis(const Mat<Scalar>& basis, const Mat<Scalar>& prop, Eigen::Index width,
                       Eigen::Index blocks) {
  Mat<Scalar> out(basis.rows(), 2 * blocks * width);
  out.leftCols(blocks * width) = basis;
  if (width == 0) return out;
  Mat<Scalar> x = basis.rightCols(width);
  for (Eigen::Index j = 0; j < blocks; ++j) {
    x = prop * x;
    out.middleCols((blocks + j) * width, width) = x;
  }
  return out;
}

// [[T, U_old^T V_new], [U_new^T V_old, U_new^T V_new]]; T is reused as is.
template <typename Scalar>
Mat<Scalar> extend_gram(const Mat<Scalar>& t, const Mat<Scalar>& u, const Mat<Scalar>& v) {
  const Eigen::Index ro = t.rows();
  const Eigen::Index co = t.cols();
  Mat<Scalar> out(u.cols(), v.cols());
  out.topLeftCorner(ro, co) = t;
  const auto u_new = u.rightCols(u.cols() - ro);
  const auto v_new = v.rightCols(v.cols() - co);
  out.topRightCorner(ro, v.cols() - co) = u.leftCols(ro).transpose() * v_new;
  out.bottomLeftCorner(u.cols() - ro, co) = u_new.transpose() * v.leftCols(co);
  out.bottomRightCorner(u.cols() - ro, v.cols() - co) = u_new.transpose() * v_new;
  return out;
}

// [[0, Y], [Y, mu * T]]
template <typename Scalar>
Mat<Scalar> double_kernel(const Mat<Scalar>& y, const Mat<Scalar>& t, Scalar mu) {
  const Eigen::Index r = y.rows();
  const Eigen::Index c = y.cols();
  Mat<Scalar> out = Mat<Scalar>::Zero(2 * r, 2 * c);
  out.topRightCorner(r, c) = y;
  out.bottomLeftCorner(r, c) = y;
  out.bottomRightCorner(r, c) = mu * t;
  return out;
}

}  // namespace detail

template <typename Scalar>
DsdaSymState<Scalar> dsda_sym_step(const DsdaSymState<Scalar>& s) {
  check_budget(s.k, std::max(s.m, s.l), s.column_budget);
  const Eigen::Index nb = s.blocks();
  DsdaSymState<Scalar> out = s;
  out.V = detail::grow_basis(s.V, s.PV, s.l, nb);
  if (s.family == SymFamily::bsep) {
    out.U = out.V.conjugate();
  } else {
    out.U = detail::grow_basis(s.U, s.P, s.m, nb);
  }
  out.T = detail::extend_gram(s.T, out.U, out.V);
  out.Y = detail::double_kernel(s.Y, s.T, s.mu);
  out.k = s.k + 1;
  return out;
}

template <typename Scalar>
Mat<Scalar> sym_kernel_right(const DsdaSymState<Scalar>& s) {
  const Eigen::Index w = s.Y.cols();
  return Mat<Scalar>::Identity(w, w) + Scalar(double(s.sigma)) * s.Y.transpose() * s.Y;
}

template <typename Scalar>
Mat<Scalar> sym_kernel_left(const DsdaSymState<Scalar>& s) {
  const Eigen::Index w = s.Y.rows();
  return Mat<Scalar>::Identity(w, w) + Scalar(double(s.sigma)) * s.Y * s.Y.transpose();
}

/// H_k = c V (I + Y^T Y)^{-1} V^T (DARE, CARE).
template <typename Scalar>
LowRankSolution<Scalar> dsda_eval_H(const DsdaSymState<Scalar>& s) {
  if (s.sigma != 1) throw Error(ErrorCode::DimensionMismatch, "eval_H needs a positive-definite kernel");
  return LowRankSolution<Scalar>::spd(s.V, s.V, sym_kernel_right(s), Scalar(s.c), "I + Y^T Y");
}

/// G_k = c U (I + Y Y^T)^{-1} U^T (DARE, CARE).
template <typename Scalar>
LowRankSolution<Scalar> dsda_eval_G(const DsdaSymState<Scalar>& s) {
  if (s.sigma != 1) throw Error(ErrorCode::DimensionMismatch, "eval_G needs a positive-definite kernel");
  return LowRankSolution<Scalar>::spd(s.U, s.U, sym_kernel_left(s), Scalar(s.c), "I + Y Y^T");
}

/// F_k = -2a V (I - Y^T Y)^{-1} V^T (BSEP).
inline LowRankSolution<Complex> bsep_eval_F(const DsdaComplexState& s) {
  if (s.family != SymFamily::bsep) throw Error(ErrorCode::DimensionMismatch, "bsep_eval_F on a non-BSEP state");
  return LowRankSolution<Complex>::general(s.V, s.V, sym_kernel_right(s), Complex(-s.c, 0.0), "I - Y^T Y");
}

/// A_k = P^(2^k) - c U (I + sigma Y Y^T)^{-1} Y V^T; this is E_k for BSEP.
/// Dense, so limited to n <= 512.
template <typename Scalar>
Mat<Scalar> dsda_eval_A(const DsdaSymState<Scalar>& s) {
  if (s.P.rows() > kDenseEvalLimit) {
    throw Error(ErrorCode::BudgetExceeded, "dense propagator evaluation is limited to n <= 512");
  }
  Mat<Scalar> out = power_of_two(s.P, s.k);
  if (s.Y.size() == 0) return out;
  const Mat<Scalar> kl = sym_kernel_left(s);
  const Mat<Scalar> rhs = s.Y * s.V.transpose();
  const Mat<Scalar> mid = s.sigma == 1 ? Mat<Scalar>(checked_llt(kl, "I + Y Y^T").solve(rhs))
                                       : Mat<Scalar>(checked_lu(kl, "I - Y Y^T").solve(rhs));
  out -= Scalar(s.c) * s.U * mid;
  return out;
}

/// Smallest and largest eigenvalue of the Hermitian kernel I + sigma Y^T Y.
template <typename Scalar>
std::pair<double, double> kernel_extreme_eigenvalues(const DsdaSymState<Scalar>& s) {
  const Mat<Scalar> kr = sym_kernel_right(s);
  if (kr.size() == 0) return {1.0, 1.0};
  const Mat<Scalar> h = (kr + kr.adjoint()) * Scalar(0.5);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(h, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

// ---------------------------------------------------------------------------
// BSEP post-processing

/// Eigenvalues of [I, -F^H] H [I; -F] (I + F^H F)^{-1}, ascending real part.
inline std::vector<Complex> bsep_eigen_extract(const MatrixC& F, const MatrixC& A, const MatrixC& B) {
  const Eigen::Index n = A.rows();
  require_square(A.rows(), A.cols(), "A");
  if (F.rows() != n || F.cols() != n || B.rows() != n || B.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "F, A, B must share one square dimension");
  }
  const MatrixC I = MatrixC::Identity(n, n);
  // [I, -F^H] H [I; -F] expanded blockwise
  const MatrixC left = A - B * F;
  const MatrixC bottom = -B.conjugate() + A.conjugate() * F;
  const MatrixC core = left - F.adjoint() * bottom;
  const MatrixC gram = I + F.adjoint() * F;
  const MatrixC hk = checked_llt(gram, "I + F^H F").solve(MatrixC(core.adjoint())).adjoint();
  Eigen::ComplexEigenSolver<MatrixC> es(hk, false);
  std::vector<Complex> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

namespace detail {

inline MatrixC hermitian_function(const MatrixC& m, double (*f)(double)) {
  const MatrixC h = (m + m.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<MatrixC> es(h);
  Eigen::VectorXcd d(h.rows());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = f(es.eigenvalues()(i));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Theta(W, Z) = arccos[(I+conj(Z)Z)^{-1/2} (I-conj(Z)W) (I+conj(W)W)^{-1} (I-conj(W)Z)
/// (I+conj(Z)Z)^{-1/2}]^{1/2} for complex symmetric W, Z. Vanishes for W = -Z.
inline MatrixC subspace_angle(const MatrixC& W, const MatrixC& Z) {
  const Eigen::Index n = W.rows();
  if (W.cols() != n || Z.rows() != n || Z.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "subspace_angle operands must be square and equal");
  }
  const MatrixC I = MatrixC::Identity(n, n);
  const MatrixC zz = I + Z.conjugate() * Z;
  checked_lu(zz, "I + conj(Z) Z");
  const MatrixC ww = I + W.conjugate() * W;
  auto ww_lu = checked_lu(ww, "I + conj(W) W");
  const MatrixC isq = detail::hermitian_function(zz, [](double x) { return 1.0 / std::sqrt(x); });
  const MatrixC inner = isq * (I - Z.conjugate() * W) * ww_lu.solve(MatrixC(I - W.conjugate() * Z)) * isq;
  return detail::hermitian_function(inner, [](double x) {
    return std::acos(std::sqrt(std::clamp(x, 0.0, 1.0)));
  });
}

// ---------------------------------------------------------------------------
// MARE

/// H_k = s U (I - Y Z)^{-1} Q^T, G_k = s W (I - Z Y)^{-1} V^T.
struct DsdaMareState {
  MatrixR Pa;  // I - s (A + bI)^{-1}
  MatrixR Pd;  // I - s (D + aI)^{-1}
  MatrixR U, V, W, Q;
  MatrixR Y, Z;
  MatrixR T;  // Q^T W
  MatrixR S;  // V^T U
  Eigen::Index m1 = 0;
  Eigen::Index n1 = 0;
  MareShifts shifts{0.0, 0.0};
  int k = 0;
  std::size_t column_budget = kDefaultColumnBudget;

  double s() const { return shifts.sum(); }
  Eigen::Index blocks() const { return Eigen::Index(1) << k; }
  Eigen::Index basis_cols() const { return std::max(U.cols(), W.cols()); }
};

inline DsdaMareState dsda_mare_init(const MareProblem& p, MareMode mode = MareMode::sda,
                                    std::size_t budget = default_column_budget()) {
  validate(p);
  require_full_column_rank(p.Bl, "Bl");
  require_full_column_rank(p.Br, "Br");
  require_full_column_rank(p.Cl, "Cl");
  require_full_column_rank(p.Cr, "Cr");
  const MareShifts sh = resolve_mare_shifts(p, mode);
  const Eigen::Index m = p.A.rows();
  const Eigen::Index n = p.D.rows();
  const double s = sh.sum();
  const MatrixR Im = MatrixR::Identity(m, m);
  const MatrixR In = MatrixR::Identity(n, n);
  auto a_lu = checked_lu(MatrixR(p.A + sh.beta * Im), "A + beta*I");
  auto d_lu = checked_lu(MatrixR(p.D + sh.alpha * In), "D + alpha*I");
  DsdaMareState st;
  st.shifts = sh;
  st.Pa = Im - s * a_lu.solve(Im);
  st.Pd = In - s * d_lu.solve(In);
  st.U = a_lu.solve(p.Bl);
  st.V = a_lu.transpose().solve(p.Cr);
  st.W = d_lu.solve(p.Cl);
  st.Q = d_lu.transpose().solve(p.Br);
  st.Y = p.Br.transpose() * st.W;
  st.Z = p.Cr.transpose() * st.U;
  st.T = st.Q.transpose() * st.W;
  st.S = st.V.transpose() * st.U;
  st.m1 = p.Bl.cols();
  st.n1 = p.Cl.cols();
  st.column_budget = budget;
  return st;
}

inline DsdaMareState dsda_mare_step(const DsdaMareState& st) {
  check_budget(st.k, std::max(st.m1, st.n1), st.column_budget);
  const Eigen::Index nb = st.blocks();
  const double s = st.s();
  DsdaMareState out = st;
  out.U = detail::grow_basis(st.U, st.Pa, st.m1, nb);
  out.V = detail::grow_basis(st.V, MatrixR(st.Pa.transpose()), st.n1, nb);
  out.W = detail::grow_basis(st.W, st.Pd, st.n1, nb);
  out.Q = detail::grow_basis(st.Q, MatrixR(st.Pd.transpose()), st.m1, nb);
  out.T = detail::extend_gram(st.T, out.Q, out.W);
  out.S = detail::extend_gram(st.S, out.V, out.U);
  out.Y = detail::double_kernel(st.Y, st.T, -s);
  out.Z = detail::double_kernel(st.Z, st.S, -s);
  out.k = st.k + 1;
  return out;
}

enum class MareIterate { H, G, F, E };

inline MatrixR mare_kernel_yz(const DsdaMareState& st) {
  return MatrixR::Identity(st.Y.rows(), st.Y.rows()) - st.Y * st.Z;
}

inline MatrixR mare_kernel_zy(const DsdaMareState& st) {
  return MatrixR::Identity(st.Z.rows(), st.Z.rows()) - st.Z * st.Y;
}

inline LowRankSolution<double> dsda_mare_eval_H(const DsdaMareState& st) {
  return LowRankSolution<double>::general(st.U, st.Q, mare_kernel_yz(st), st.s(), "I - Y Z");
}

inline LowRankSolution<double> dsda_mare_eval_G(const DsdaMareState& st) {
  return LowRankSolution<double>::general(st.W, st.V, mare_kernel_zy(st), st.s(), "I - Z Y");
}

/// Dense evaluation of any of the four iterates; F and E need n <= 512.
inline MatrixR dsda_mare_eval(const DsdaMareState& st, MareIterate which) {
  switch (which) {
    case MareIterate::H: return dsda_mare_eval_H(st).dense();
    case MareIterate::G: return dsda_mare_eval_G(st).dense();
    case MareIterate::F: {
      if (st.Pa.rows() > kDenseEvalLimit) {
        throw Error(ErrorCode::BudgetExceeded, "dense propagator evaluation is limited to n <= 512");
      }
      MatrixR out = power_of_two(st.Pa, st.k);
      if (st.Y.size()) {
        out -= st.s() * st.U * checked_lu(mare_kernel_yz(st), "I - Y Z").solve(MatrixR(st.Y * st.V.transpose()));
      }
      return out;
    }
    case MareIterate::E: {
      if (st.Pd.rows() > kDenseEvalLimit) {
        throw Error(ErrorCode::BudgetExceeded, "dense propagator evaluation is limited to n <= 512");
      }
      MatrixR out = power_of_two(st.Pd, st.k);
      if (st.Z.size()) {
        out -= st.s() * st.W * checked_lu(mare_kernel_zy(st), "I - Z Y").solve(MatrixR(st.Z * st.Q.transpose()));
      }
      return out;
    }
  }
  return {};
}

}  // namespace dsda
