#pragma once

#include <algorithm>

#include "dsda/matkit.hpp"
#include "dsda/problems.hpp"

namespace dsda {

namespace detail {

inline double ratio_or_zero(double num, double den) {
  if (den == 0.0) return num == 0.0 ? 0.0 : 1.0;
  return num / den;
}

}  // namespace detail

/// ||A^T H + H A - H G H + C^T C|| / (2||A^T H|| + ||H G H|| + ||C^T C||)
inline double care_residual(const CareProblem& p, const MatrixR& H) {
  require_square(H.rows(), H.cols(), "H");
  require_rows(H.rows(), p.A.rows(), "H");
  const MatrixR ath = p.A.transpose() * H;
  const MatrixR hb = H * p.B;
  const MatrixR hgh = hb * hb.transpose();
  const MatrixR ctc = p.C.transpose() * p.C;
  const MatrixR r = ath + ath.transpose() - hgh + ctc;
  return detail::ratio_or_zero(frobenius_norm(r),
                               2.0 * frobenius_norm(ath) + frobenius_norm(hgh) + frobenius_norm(ctc));
}

/// ||-H + A^T H (I + G H)^{-1} A + C^T C|| over the sum of the three term norms.
inline double dare_residual(const DareProblem& p, const MatrixR& H) {
  require_square(H.rows(), H.cols(), "H");
  require_rows(H.rows(), p.A.rows(), "H");
  const Eigen::Index n = H.rows();
  const MatrixR gh = p.B * (p.B.transpose() * H);
  auto lu = checked_lu(MatrixR(MatrixR::Identity(n, n) + gh), "I + G H");
  const MatrixR mid = p.A.transpose() * H * lu.solve(p.A);
  const MatrixR ctc = p.C.transpose() * p.C;
  const MatrixR r = -H + mid + ctc;
  return detail::ratio_or_zero(frobenius_norm(r),
                               frobenius_norm(H) + frobenius_norm(mid) + frobenius_norm(ctc));
}

/// ||X C X - X D - A X + B|| over the sum of the four term norms.
inline double mare_residual(const MareProblem& p, const MatrixR& X) {
  require_rows(X.rows(), p.A.rows(), "X");
  if (X.cols() != p.D.rows()) throw Error(ErrorCode::DimensionMismatch, "X has the wrong column count");
  const MatrixR xcx = (X * p.Cl) * (p.Cr.transpose() * X);
  const MatrixR xd = X * p.D;
  const MatrixR ax = p.A * X;
  const MatrixR b = p.B();
  const MatrixR r = xcx - xd - ax + b;
  return detail::ratio_or_zero(
      frobenius_norm(r),
      frobenius_norm(xcx) + frobenius_norm(xd) + frobenius_norm(ax) + frobenius_norm(b));
}

template <typename Scalar>
double bsep_increment(const Mat<Scalar>& f_new, const Mat<Scalar>& f_old) {
  if (f_new.rows() != f_old.rows() || f_new.cols() != f_old.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "increment operands differ in shape");
  }
  return frobenius_norm(Mat<Scalar>(f_new - f_old)) / std::max(frobenius_norm(f_new), 1e-300);
}

}  // namespace dsda
