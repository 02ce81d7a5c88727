#pragma once

// Coupled doubling recursions, stored densely. Used as the reference for the
// decoupled form and as the `sda` method of the driver.

#include "dsda/matkit.hpp"
#include "dsda/problems.hpp"

namespace dsda {

/// (A_k, G_k, H_k) for DARE and CARE.
struct SymSdaState {
  MatrixR A;
  MatrixR G;
  MatrixR H;
  int k = 0;
};

/// (E_k, F_k, G_k, H_k) for MARE. E is n x n, F is m x m, G is n x m, H is m x n.
struct MareSdaState {
  MatrixR E;
  MatrixR F;
  MatrixR G;
  MatrixR H;
  MareShifts shifts{0.0, 0.0};
  int k = 0;
};

/// (E_k, F_k) for the Bethe-Salpeter problem.
struct BsepSdaState {
  MatrixC E;
  MatrixC F;
  double alpha = 0.0;
  int k = 0;
};

inline SymSdaState dare_init(const DareProblem& p) {
  validate(p);
  return {p.A, p.B * p.B.transpose(), p.C.transpose() * p.C, 0};
}

enum class CareInitRoute { smw, dense };

inline SymSdaState care_init(const CareProblem& p, CareInitRoute route = CareInitRoute::smw) {
  validate(p);
  const Eigen::Index n = p.A.rows();
  const double g = p.gamma;
  const MatrixR I = MatrixR::Identity(n, n);
  const MatrixR a_g = p.A - g * I;
  auto lu = checked_lu(a_g, "A - gamma*I");

  SymSdaState s;
  if (route == CareInitRoute::dense) {
    const MatrixR G = p.B * p.B.transpose();
    const MatrixR H = p.C.transpose() * p.C;
    const MatrixR k_g = a_g.transpose() + H * lu.solve(G);
    auto klu = checked_lu(k_g, "K_gamma");
    const MatrixR k_inv = klu.solve(I);
    s.A = I + 2.0 * g * k_inv.transpose();
    s.G = 2.0 * g * lu.solve(G) * k_inv;
    s.H = 2.0 * g * k_inv * H * lu.solve(I);
  } else {
    const MatrixR u0 = lu.solve(p.B);
    const MatrixR v0 = lu.transpose().solve(MatrixR(p.C.transpose()));
    const MatrixR y0 = p.B.transpose() * v0;
    const Eigen::Index m = p.B.cols();
    const Eigen::Index l = p.C.rows();
    const MatrixR e0 = MatrixR::Identity(m, m) + y0 * y0.transpose();
    const MatrixR f0 = MatrixR::Identity(l, l) + y0.transpose() * y0;
    auto e_llt = checked_llt(e0, "I + Y0 Y0^T");
    auto f_llt = checked_llt(f0, "I + Y0^T Y0");
    const MatrixR cayley = I + 2.0 * g * lu.solve(I);
    s.A = cayley - 2.0 * g * u0 * y0 * f_llt.solve(MatrixR(v0.transpose()));
    s.G = 2.0 * g * u0 * e_llt.solve(MatrixR(u0.transpose()));
    s.H = 2.0 * g * v0 * f_llt.solve(MatrixR(v0.transpose()));
  }
  s.G = symmetrize(s.G);
  s.H = symmetrize(s.H);
  return s;
}

inline SymSdaState sym_sda_step(const SymSdaState& s) {
  const Eigen::Index n = s.A.rows();
  auto lu = checked_lu(MatrixR(MatrixR::Identity(n, n) + s.G * s.H), "I + G_k H_k");
  const MatrixR wa = lu.solve(s.A);  // (I + GH)^{-1} A
  SymSdaState out;
  out.A = s.A * wa;
  out.G = symmetrize(MatrixR(s.G + s.A * lu.solve(MatrixR(s.G * s.A.transpose()))));
  out.H = symmetrize(MatrixR(s.H + s.A.transpose() * s.H * wa));
  out.k = s.k + 1;
  return out;
}

inline MareSdaState mare_init(const MareProblem& p, MareMode mode = MareMode::sda) {
  validate(p);
  const MareShifts sh = resolve_mare_shifts(p, mode);
  const Eigen::Index m = p.A.rows();
  const Eigen::Index n = p.D.rows();
  const double s = sh.sum();
  const MatrixR Im = MatrixR::Identity(m, m);
  const MatrixR In = MatrixR::Identity(n, n);
  const MatrixR B = p.B();
  const MatrixR C = p.C();
  auto a_lu = checked_lu(MatrixR(p.A + sh.beta * Im), "A + beta*I");
  auto d_lu = checked_lu(MatrixR(p.D + sh.alpha * In), "D + alpha*I");
  const MatrixR w = p.A + sh.beta * Im - B * d_lu.solve(C);
  const MatrixR v = p.D + sh.alpha * In - C * a_lu.solve(B);
  auto w_lu = checked_lu(w, "W");
  auto v_lu = checked_lu(v, "V");
  MareSdaState st;
  st.shifts = sh;
  st.E = In - s * v_lu.solve(In);
  st.F = Im - s * w_lu.solve(Im);
  // G0 = s (D + aI)^{-1} C W^{-1};  H0 = s W^{-1} B (D + aI)^{-1}
  const MatrixR c_winv = MatrixR(w_lu.transpose().solve(MatrixR(C.transpose()))).transpose();
  const MatrixR b_dinv = MatrixR(d_lu.transpose().solve(MatrixR(B.transpose()))).transpose();
  st.G = s * d_lu.solve(c_winv);
  st.H = s * w_lu.solve(b_dinv);
  return st;
}

inline MareSdaState mare_sda_step(const MareSdaState& st) {
  const Eigen::Index m = st.F.rows();
  const Eigen::Index n = st.E.rows();
  auto p_lu = checked_lu(MatrixR(MatrixR::Identity(m, m) - st.H * st.G), "I - H_k G_k");
  auto q_lu = checked_lu(MatrixR(MatrixR::Identity(n, n) - st.G * st.H), "I - G_k H_k");
  MareSdaState out;
  out.shifts = st.shifts;
  out.E = st.E * q_lu.solve(st.E);
  out.F = st.F * p_lu.solve(st.F);
  out.G = st.G + st.E * q_lu.solve(MatrixR(st.G * st.F));
  out.H = st.H + st.F * p_lu.solve(MatrixR(st.H * st.E));
  out.k = st.k + 1;
  return out;
}

inline BsepSdaState bsep_init(const BsepProblem& p, double alpha) {
  validate(p);
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidShift, "alpha must be positive");
  const Eigen::Index n = p.A.rows();
  const MatrixC I = MatrixC::Identity(n, n);
  const MatrixC shifted = alpha * I - p.A;
  auto lu = checked_lu(shifted, "alpha*I - A");
  auto luc = checked_lu(MatrixC(shifted.conjugate()), "alpha*I - conj(A)");
  const MatrixC b = p.B();
  const MatrixC ai = lu.solve(I);
  const MatrixC r = I - luc.solve(MatrixC(b.conjugate() * ai * b));
  auto rc_lu = checked_lu(MatrixC(r.conjugate()), "conj(R)");
  BsepSdaState st;
  st.alpha = alpha;
  st.E = I - 2.0 * alpha * rc_lu.solve(ai);
  st.F = -2.0 * alpha * luc.solve(MatrixC(b.conjugate() * rc_lu.solve(ai)));
  st.F = symmetrize(st.F);
  return st;
}

inline BsepSdaState bsep_init(const BsepProblem& p) {
  return bsep_init(p, resolve_bsep_shift(p));
}

inline BsepSdaState bsep_sda_step(const BsepSdaState& st) {
  const Eigen::Index n = st.E.rows();
  auto lu = checked_lu(MatrixC(MatrixC::Identity(n, n) - st.F.conjugate() * st.F), "I - conj(F_k) F_k");
  const MatrixC we = lu.solve(st.E);
  BsepSdaState out;
  out.alpha = st.alpha;
  out.E = st.E * we;
  out.F = symmetrize(MatrixC(st.F + st.E.conjugate() * st.F * we));
  out.k = st.k + 1;
  return out;
}

}  // namespace dsda
