#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "dsda/error.hpp"

namespace dsda {

using Complex = std::complex<double>;
using MatrixR = Eigen::MatrixXd;
using MatrixC = Eigen::MatrixXcd;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Relative pivot threshold used by solve_general and the LU-backed kernels.
inline constexpr double kSingularPivotTol = 1e-14;

template <typename Scalar>
double frobenius_norm(const Mat<Scalar>& m) {
  return m.size() == 0 ? 0.0 : m.norm();
}

template <typename Scalar>
Mat<Scalar> symmetrize(const Mat<Scalar>& m) {
  return (m + m.transpose()) * Scalar(0.5);
}

inline void require_square(Eigen::Index rows, Eigen::Index cols, const char* what) {
  if (rows != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " must be square, got " + std::to_string(rows) + "x" +
                    std::to_string(cols));
  }
}

inline void require_rows(Eigen::Index have, Eigen::Index want, const char* what) {
  if (have != want) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": expected " + std::to_string(want) + " rows, got " +
                    std::to_string(have));
  }
}

/// Pivoted LU with an explicit smallness test on the diagonal of U.
template <typename Scalar>
Eigen::PartialPivLU<Mat<Scalar>> checked_lu(const Mat<Scalar>& k, const char* what = "matrix") {
  require_square(k.rows(), k.cols(), what);
  Eigen::PartialPivLU<Mat<Scalar>> lu(k);
  if (k.size() == 0) return lu;
  const double scale = frobenius_norm(k);
  const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(min_pivot >= kSingularPivotTol * scale) || scale == 0.0) {
    throw Error(ErrorCode::SingularMatrix,
                std::string(what) + " is numerically singular (pivot " + std::to_string(min_pivot) +
                    ", norm " + std::to_string(scale) + ")");
  }
  return lu;
}

template <typename Scalar>
Eigen::LLT<Mat<Scalar>> checked_llt(const Mat<Scalar>& k, const char* what = "matrix") {
  require_square(k.rows(), k.cols(), what);
  Eigen::LLT<Mat<Scalar>> llt(k);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotSpd, std::string(what) + " is not positive definite");
  }
  return llt;
}

template <typename Scalar>
Mat<Scalar> solve_general(const Mat<Scalar>& k, const Mat<Scalar>& b) {
  require_rows(b.rows(), k.rows(), "solve_general right-hand side");
  if (k.size() == 0) return b;
  return checked_lu(k, "solve_general operand").solve(b);
}

template <typename Scalar>
Mat<Scalar> solve_spd(const Mat<Scalar>& k, const Mat<Scalar>& b) {
  require_rows(b.rows(), k.rows(), "solve_spd right-hand side");
  if (k.size() == 0) return b;
  return checked_llt(k, "solve_spd operand").solve(b);
}

template <typename Scalar>
Mat<Scalar> inverse(const Mat<Scalar>& k, const char* what = "matrix") {
  return checked_lu(k, what).solve(Mat<Scalar>::Identity(k.rows(), k.cols()));
}

/// Factors of M + U*D*V^T.
template <typename Scalar>
struct SmwFactors {
  Mat<Scalar> M;
  Mat<Scalar> U;
  Mat<Scalar> D;
  Mat<Scalar> V;
};

template <typename Scalar>
Mat<Scalar> smw_inverse(const SmwFactors<Scalar>& f) {
  const Eigen::Index n = f.M.rows();
  require_square(f.M.rows(), f.M.cols(), "SMW base M");
  require_square(f.D.rows(), f.D.cols(), "SMW core D");
  require_rows(f.U.rows(), n, "SMW factor U");
  require_rows(f.V.rows(), n, "SMW factor V");
  if (f.U.cols() != f.D.rows() || f.V.cols() != f.D.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "SMW factors are not conformable");
  }
  auto m_lu = checked_lu(f.M, "SMW base M");
  const Mat<Scalar> m_inv = m_lu.solve(Mat<Scalar>::Identity(n, n));
  if (f.D.size() == 0) return m_inv;
  const Mat<Scalar> d_inv = inverse(f.D, "SMW core D");
  const Mat<Scalar> minv_u = m_inv * f.U;
  const Mat<Scalar> core = d_inv + f.V.transpose() * minv_u;
  const Mat<Scalar> rhs = f.V.transpose() * m_inv;
  return m_inv - minv_u * checked_lu(core, "SMW capacitance").solve(rhs);
}

/// Default relative threshold: machine epsilon times the larger dimension.
inline double default_rank_tol(Eigen::Index rows, Eigen::Index cols) {
  return std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(rows, cols));
}

template <typename Scalar>
int numerical_rank(const Mat<Scalar>& m, double rel_tol = -1.0) {
  if (m.size() == 0) return 0;
  if (rel_tol <= 0.0) rel_tol = default_rank_tol(m.rows(), m.cols());
  Eigen::BDCSVD<Mat<Scalar>> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cut = rel_tol * s(0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) ++r;
  }
  return r;
}

/// P^(2^k) by repeated squaring.
template <typename Scalar>
Mat<Scalar> power_of_two(const Mat<Scalar>& p, int k) {
  Mat<Scalar> out = p;
  for (int i = 0; i < k; ++i) out = out * out;
  return out;
}

template <typename Scalar>
double relative_error(const Mat<Scalar>& approx, const Mat<Scalar>& ref) {
  const double den = std::max(frobenius_norm(ref), 1e-300);
  return frobenius_norm(Mat<Scalar>(approx - ref)) / den;
}

}  // namespace dsda
