// Classical doubling oracle, decoupled iteration, and the driver.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dsda/dsda.hpp"

using namespace dsda;

namespace {

MatrixR m11(double v) { return MatrixR::Constant(1, 1, v); }
MatrixC c11(double v) { return MatrixC::Constant(1, 1, Complex(v, 0.0)); }

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no dsda::Error thrown";
  return ErrorCode::IoError;
}

const CareProblem& scalar_care() {
  static const CareProblem p = std::get<CareProblem>(gen_scalar_suite()[0].problem);
  return p;
}
const DareProblem& scalar_dare() {
  static const DareProblem p = std::get<DareProblem>(gen_scalar_suite()[1].problem);
  return p;
}
const MareProblem& scalar_mare() {
  static const MareProblem p = std::get<MareProblem>(gen_scalar_suite()[2].problem);
  return p;
}
const BsepProblem& scalar_bsep() {
  static const BsepProblem p = std::get<BsepProblem>(gen_scalar_suite()[3].problem);
  return p;
}

// Stable eigenvector oracle for the 2x2 scalar BSEP: -X2/X1 of the eigenvector for -sqrt(3).
Complex scalar_bsep_limit() {
  const MatrixC h = scalar_bsep().hamiltonian();
  Eigen::ComplexEigenSolver<MatrixC> es(h);
  Eigen::Index i = 0;
  es.eigenvalues().real().minCoeff(&i);
  const auto x = es.eigenvectors().col(i);
  return -x(1) / x(0);
}

}  // namespace

// ---------------------------------------------------------------------------
// classical iteration

TEST(DareInit, Scalar) {
  const SymSdaState s = dare_init(scalar_dare());
  EXPECT_EQ(s.A(0, 0), 0.5);
  EXPECT_EQ(s.G(0, 0), 1.0);
  EXPECT_EQ(s.H(0, 0), 1.0);
  EXPECT_EQ(s.k, 0);
}

TEST(DareInit, ZeroBGivesZeroG) {
  DareProblem p = gen_random_dare(4, 2, 1, 3);
  p.B.setZero();
  EXPECT_EQ(dare_init(p).G, MatrixR::Zero(4, 4));
}

TEST(DareInit, HPsdWithBoundedRank) {
  const DareProblem p = gen_random_dare(3, 1, 1, 17);
  const SymSdaState s = dare_init(p);
  Eigen::SelfAdjointEigenSolver<MatrixR> es(s.H);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-14);
  EXPECT_LE(numerical_rank(s.H), 1);
}

TEST(CareInit, ScalarHandEvaluation) {
  // K = A_g + G A_g^{-T} H = -2 - 0.5 = -2.5; A0 = 1 + 2/K, G0 = H0 = 2 * 0.5 / 2.5.
  for (CareInitRoute route : {CareInitRoute::smw, CareInitRoute::dense}) {
    const SymSdaState s = care_init(scalar_care(), route);
    EXPECT_NEAR(s.H(0, 0), 0.4, 1e-15);
    EXPECT_NEAR(s.G(0, 0), 0.4, 1e-15);
    EXPECT_NEAR(s.A(0, 0), 0.2, 1e-15);
  }
  // the Cayley propagator itself vanishes for a = -gamma
  EXPECT_NEAR(dsda_care_init(scalar_care()).P(0, 0), 0.0, 1e-15);
}

TEST(CareInit, ZeroCGivesZeroH) {
  CareProblem p = gen_random_care(5, 1, 2, 8);
  p.C.setZero();
  EXPECT_EQ(care_init(p).H, MatrixR::Zero(5, 5));
}

TEST(CareInit, RoutesAgree) {
  for (int s = 0; s < 15; ++s) {
    const CareProblem p = gen_random_care(4 + s % 9, 1 + s % 3, 1 + s % 2, 40 + s, 0.5 + 0.25 * (s % 4));
    const SymSdaState a = care_init(p, CareInitRoute::smw);
    const SymSdaState b = care_init(p, CareInitRoute::dense);
    EXPECT_LE(relative_error(a.A, b.A), 1e-12);
    EXPECT_LE(relative_error(a.G, b.G), 1e-12);
    EXPECT_LE(relative_error(a.H, b.H), 1e-12);
  }
}

TEST(SymStep, ScalarDareOneStep) {
  const SymSdaState s = sym_sda_step(dare_init(scalar_dare()));
  EXPECT_NEAR(s.A(0, 0), 0.125, 1e-16);
  EXPECT_NEAR(s.G(0, 0), 1.125, 1e-16);
  EXPECT_NEAR(s.H(0, 0), 1.125, 1e-16);
  EXPECT_EQ(s.k, 1);
}

TEST(SymStep, ScalarCareConverges) {
  SymSdaState s = care_init(scalar_care());
  for (int i = 0; i < 4; ++i) s = sym_sda_step(s);
  EXPECT_NEAR(s.H(0, 0), std::sqrt(2.0) - 1.0, 1e-10);
}

TEST(SymStep, SteinPartialSums) {
  for (int seed = 0; seed < 6; ++seed) {
    DareProblem p = gen_random_dare(3 + seed, 1, 2, 60 + seed);
    p.B.setZero();
    SymSdaState s = dare_init(p);
    const MatrixR h0 = p.C.transpose() * p.C;
    for (int k = 1; k <= 4; ++k) {
      s = sym_sda_step(s);
      MatrixR sum = MatrixR::Zero(h0.rows(), h0.cols());
      MatrixR apow = MatrixR::Identity(h0.rows(), h0.cols());
      for (int j = 0; j < (1 << k); ++j) {
        sum += apow.transpose() * h0 * apow;
        apow = apow * p.A;
      }
      EXPECT_LE(relative_error(s.H, sum), 1e-12);
      EXPECT_LE(relative_error(s.A, apow), 1e-12);
    }
  }
}

TEST(SymStep, SymmetricAndMonotone) {
  for (int seed = 0; seed < 10; ++seed) {
    SymSdaState s = care_init(gen_random_care(6 + seed % 5, 2, 2, 80 + seed));
    for (int k = 1; k <= 5; ++k) {
      const SymSdaState n = sym_sda_step(s);
      EXPECT_EQ(n.H, n.H.transpose());
      EXPECT_EQ(n.G, n.G.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixR> es(MatrixR(n.H - s.H));
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * std::max(1.0, n.H.norm()));
      s = n;
    }
  }
}

TEST(SymStep, ZeroCStaysZero) {
  CareProblem p = gen_random_care(5, 2, 1, 12);
  p.C.setZero();
  SymSdaState s = care_init(p);
  for (int k = 0; k < 4; ++k) s = sym_sda_step(s);
  EXPECT_EQ(s.H, MatrixR::Zero(5, 5));
}

TEST(MareInit, ScalarHandEvaluation) {
  MareProblem p = scalar_mare();
  p.gamma = 3.0;
  EXPECT_NEAR(mare_init(p).H(0, 0), 6.0 / 29.0, 1e-15);
}

TEST(MareInit, ZeroCouplings) {
  MareProblem p = gen_random_mare(4, 3, 1, 1, 5);
  p.Bl.setZero();
  p.Cl.setZero();
  const MareSdaState s = mare_init(p);
  const double g = s.shifts.alpha;
  EXPECT_EQ(s.H, MatrixR::Zero(4, 3));
  EXPECT_EQ(s.G, MatrixR::Zero(3, 4));
  const MatrixR e = MatrixR::Identity(3, 3) - 2 * g * MatrixR(p.D + g * MatrixR::Identity(3, 3)).inverse();
  const MatrixR f = MatrixR::Identity(4, 4) - 2 * g * MatrixR(p.A + g * MatrixR::Identity(4, 4)).inverse();
  EXPECT_LE((s.E - e).norm(), 1e-14);
  EXPECT_LE((s.F - f).norm(), 1e-14);
}

TEST(MareInit, AddaWithEqualShiftsMatchesSda) {
  MareProblem p = gen_random_mare(5, 4, 2, 1, 9);
  const double g = resolve_mare_shifts(p, MareMode::sda).alpha;
  p.gamma = g;
  p.alpha = g;
  p.beta = g;
  const MareSdaState a = mare_init(p, MareMode::sda);
  const MareSdaState b = mare_init(p, MareMode::adda);
  EXPECT_EQ(a.E, b.E);
  EXPECT_EQ(a.F, b.F);
  EXPECT_EQ(a.G, b.G);
  EXPECT_EQ(a.H, b.H);
}

TEST(MareStep, ScalarConvergesToMinimalRoot) {
  MareSdaState s = mare_init(scalar_mare());
  for (int k = 0; k < 6; ++k) s = mare_sda_step(s);
  EXPECT_NEAR(s.H(0, 0), (5.0 - std::sqrt(21.0)) / 2.0, 1e-14);
  EXPECT_LE(std::abs(s.E(0, 0)), 1e-12);
  EXPECT_LE(std::abs(s.F(0, 0)), 1e-12);
}

TEST(MareStep, ZeroCouplingsStayZero) {
  MareProblem p = gen_random_mare(3, 3, 1, 1, 6);
  p.Bl.setZero();
  p.Cl.setZero();
  MareSdaState s = mare_init(p);
  for (int k = 0; k < 3; ++k) {
    const MareSdaState n = mare_sda_step(s);
    EXPECT_EQ(n.H, MatrixR::Zero(3, 3));
    EXPECT_LE((n.E - s.E * s.E).norm(), 1e-15);
    EXPECT_LE((n.F - s.F * s.F).norm(), 1e-15);
    s = n;
  }
}

TEST(MareStep, NonnegativeAndNondecreasing) {
  for (int seed = 0; seed < 15; ++seed) {
    const MareProblem p = gen_random_mare(3 + seed % 5, 2 + seed % 4, 1 + seed % 2, 1, 900 + seed);
    for (MareMode mode : {MareMode::sda, MareMode::adda}) {
      MareSdaState s = mare_init(p, mode);
      for (int k = 0; k < 5; ++k) {
        const MareSdaState n = mare_sda_step(s);
        EXPECT_GE(n.H.minCoeff(), -1e-12);
        EXPECT_GE(n.G.minCoeff(), -1e-12);
        EXPECT_GE((n.H - s.H).minCoeff(), -1e-12);
        EXPECT_GE((n.G - s.G).minCoeff(), -1e-12);
        s = n;
      }
    }
  }
}

TEST(BsepInit, ZeroCoupling) {
  BsepProblem p = gen_random_bsep(4, 1, 3);
  p.LB.setZero();
  const BsepSdaState s = bsep_init(p, 1.0);
  EXPECT_EQ(s.F, MatrixC::Zero(4, 4));
  const MatrixC I = MatrixC::Identity(4, 4);
  const MatrixC e = I - 2.0 * MatrixC(1.0 * I - p.A).inverse();
  EXPECT_LE((s.E - e).norm(), 1e-14);
}

TEST(BsepInit, ScalarShifts) {
  EXPECT_EQ(code_of([] { bsep_init(scalar_bsep(), 1.0); }), ErrorCode::SingularMatrix);
  const BsepSdaState s = bsep_init(scalar_bsep(), 4.0);
  EXPECT_TRUE(s.E.allFinite());
  EXPECT_TRUE(s.F.allFinite());
  // R = 1 - 1/(alpha - a)^2 = 3/4 at alpha = 4; F0 = -2 alpha b / ((alpha-a)^2 R)
  EXPECT_NEAR(s.F(0, 0).real(), -8.0 / (4.0 * 0.75), 1e-14);
}

TEST(BsepStep, ZeroFStaysZero) {
  BsepProblem p = gen_random_bsep(3, 1, 4);
  p.LB.setZero();
  BsepSdaState s = bsep_init(p, 1.0);
  const BsepSdaState n = bsep_sda_step(s);
  EXPECT_EQ(n.F, MatrixC::Zero(3, 3));
  EXPECT_LE((n.E - s.E * s.E).norm(), 1e-15);
}

TEST(BsepStep, ScalarLimitMatchesEigenvector) {
  BsepSdaState s = bsep_init(scalar_bsep(), 4.0);
  for (int k = 0; k < 12; ++k) s = bsep_sda_step(s);
  EXPECT_LE(std::abs(s.F(0, 0) - scalar_bsep_limit()), 1e-10);
  EXPECT_LE(std::abs(s.E(0, 0)), 1e-12);
}

TEST(BsepStep, FStaysComplexSymmetric) {
  for (int seed = 0; seed < 8; ++seed) {
    const BsepProblem p = gen_random_bsep(5, 2, 30 + seed);
    BsepSdaState s = bsep_init(p);
    for (int k = 0; k < 5; ++k) {
      s = bsep_sda_step(s);
      EXPECT_LE((s.F - s.F.transpose()).norm(), 1e-10 * std::max(1.0, s.F.norm()));
    }
  }
}

// ---------------------------------------------------------------------------
// decoupled iteration

TEST(DsdaInit, DareAtZero) {
  const DareProblem p = gen_random_dare(6, 2, 3, 19);
  const DsdaRealState s = dsda_dare_init(p);
  EXPECT_EQ(s.Y, MatrixR::Zero(2, 3));
  EXPECT_LE((dsda_eval_H(s).dense() - p.C.transpose() * p.C).norm(), 1e-15);
  EXPECT_LE((dsda_eval_G(s).dense() - p.B * p.B.transpose()).norm(), 1e-15);
  EXPECT_LE((dsda_eval_A(s) - p.A).norm(), 1e-15);
}

TEST(DsdaInit, CareScalar) {
  const DsdaRealState s = dsda_care_init(scalar_care());
  EXPECT_NEAR(s.Y(0, 0), -0.5, 1e-16);
  EXPECT_NEAR(dsda_eval_H(s).dense()(0, 0), 0.4, 1e-15);
  EXPECT_EQ(s.c, 2.0);
}

TEST(DsdaInit, BsepZeroCoupling) {
  BsepProblem p = gen_random_bsep(4, 1, 7);
  p.LB.setZero();
  const DsdaComplexState s = dsda_bsep_init(p, 1.0);
  EXPECT_EQ(s.Y, MatrixC::Zero(1, 1));
  EXPECT_EQ(bsep_eval_F(s).dense(), MatrixC::Zero(4, 4));
}

TEST(DsdaStep, DareScalar) {
  const DsdaRealState s = dsda_sym_step(dsda_dare_init(scalar_dare()));
  MatrixR y(2, 2);
  y << 0, 0, 0, 1;
  EXPECT_EQ(s.Y, y);
  MatrixR v(1, 2);
  v << 1, 0.5;
  EXPECT_EQ(s.V, v);
  EXPECT_NEAR(dsda_eval_H(s).dense()(0, 0), 1.125, 1e-15);
}

TEST(DsdaStep, CareScalar) {
  const DsdaRealState s = dsda_sym_step(dsda_care_init(scalar_care()));
  MatrixR y(2, 2);
  y << 0, -0.5, -0.5, 0.5;
  EXPECT_LE((s.Y - y).norm(), 1e-15);
  EXPECT_NEAR(dsda_eval_H(s).dense()(0, 0), 12.0 / 29.0, 1e-15);
  EXPECT_NEAR(dsda_eval_H(s).dense()(0, 0), 0.41379310, 1e-8);
}

TEST(DsdaStep, DareZeroCStaysZero) {
  DareProblem p = gen_random_dare(5, 1, 1, 23);
  p.C.setZero();
  DsdaRealState s = dsda_dare_init(p);
  for (int k = 0; k < 4; ++k) {
    EXPECT_EQ(dsda_eval_H(s).dense(), MatrixR::Zero(5, 5));
    s = dsda_sym_step(s);
  }
}

TEST(DsdaStep, MatchesOracleOnRandomDare) {
  const DareProblem p = gen_random_dare(8, 2, 2, 77);
  SymSdaState o = dare_init(p);
  DsdaRealState d = dsda_dare_init(p);
  for (int k = 1; k <= 3; ++k) {
    o = sym_sda_step(o);
    d = dsda_sym_step(d);
    if (k == 2) EXPECT_LE(relative_error(dsda_eval_A(d), o.A), 1e-10);
  }
  EXPECT_LE(relative_error(dsda_eval_H(d).dense(), o.H), 1e-10);
}

TEST(DsdaStep, MatchesOracleOnRandomCare) {
  const CareProblem p = gen_random_care(8, 2, 2, 78);
  SymSdaState o = care_init(p);
  DsdaRealState d = dsda_care_init(p);
  for (int k = 1; k <= 3; ++k) {
    o = sym_sda_step(o);
    d = dsda_sym_step(d);
  }
  EXPECT_LE(relative_error(dsda_eval_G(d).dense(), o.G), 1e-10);
  EXPECT_LE(relative_error(dsda_eval_H(d).dense(), o.H), 1e-10);
}

TEST(DsdaStep, CareScalarAMatchesOracle) {
  SymSdaState o = care_init(scalar_care());
  DsdaRealState d = dsda_care_init(scalar_care());
  for (int k = 0; k <= 3; ++k) {
    if (k) {
      o = sym_sda_step(o);
      d = dsda_sym_step(d);
    }
    EXPECT_NEAR(dsda_eval_A(d)(0, 0), o.A(0, 0), 1e-15);
  }
}

TEST(DsdaProperty, KernelStructureIsExact) {
  for (int seed = 0; seed < 10; ++seed) {
    DsdaRealState s = seed % 2 ? dsda_care_init(gen_random_care(9, 1 + seed % 3, 2, 120 + seed))
                               : dsda_dare_init(gen_random_dare(9, 1 + seed % 3, 2, 120 + seed));
    for (int k = 1; k <= 4; ++k) {
      const DsdaRealState n = dsda_sym_step(s);
      const Eigen::Index r = s.Y.rows(), c = s.Y.cols();
      EXPECT_EQ(n.Y.rows(), 2 * r);
      EXPECT_EQ(n.Y.cols(), 2 * c);
      EXPECT_EQ(n.Y.topLeftCorner(r, c), MatrixR::Zero(r, c));
      EXPECT_EQ(n.Y.topRightCorner(r, c), s.Y);
      EXPECT_EQ(n.Y.bottomLeftCorner(r, c), s.Y);
      EXPECT_EQ(n.Y.bottomRightCorner(r, c), s.mu * s.T);
      EXPECT_EQ(n.U.leftCols(s.U.cols()), s.U);
      EXPECT_EQ(n.V.leftCols(s.V.cols()), s.V);
      EXPECT_EQ(n.T.topLeftCorner(s.T.rows(), s.T.cols()), s.T);
      EXPECT_LE((n.T - n.U.transpose() * n.V).norm(), 1e-12 * std::max(1.0, n.T.norm()));
      const auto [lo, hi] = kernel_extreme_eigenvalues(n);
      EXPECT_GT(lo, 0.0);
      EXPECT_GE(hi, lo);
      s = n;
    }
  }
}

TEST(DsdaProperty, BsepConjugation) {
  for (int seed = 0; seed < 6; ++seed) {
    const BsepProblem p = gen_random_bsep(5, 1 + seed % 2, 140 + seed);
    DsdaComplexState s = dsda_bsep_init(p, resolve_bsep_shift(p));
    for (int k = 0; k <= 3; ++k) {
      if (k) s = dsda_sym_step(s);
      EXPECT_EQ(s.U, s.V.conjugate());
      const MatrixC f = bsep_eval_F(s).dense();
      EXPECT_LE((f - f.transpose()).norm(), 1e-10 * std::max(1.0, f.norm()));
    }
  }
}

TEST(DsdaProperty, LowRankApplyMatchesDense) {
  const CareProblem p = gen_random_care(10, 2, 2, 150);
  DsdaRealState s = dsda_care_init(p);
  s = dsda_sym_step(dsda_sym_step(s));
  const LowRankSolution<double> h = dsda_eval_H(s);
  EXPECT_TRUE(h.kernel_is_spd());
  EXPECT_EQ(h.kernel_dim(), 8);
  const MatrixR x = MatrixR::Ones(10, 3);
  EXPECT_LE(relative_error(h.apply(x), MatrixR(h.dense() * x)), 1e-13);
  EXPECT_EQ(code_of([&] { h.apply(MatrixR(MatrixR::Ones(9, 1))); }), ErrorCode::DimensionMismatch);
}

TEST(BsepEvalF, ScalarMatchesOracleEachStep) {
  BsepSdaState o = bsep_init(scalar_bsep(), 4.0);
  DsdaComplexState d = dsda_bsep_init(scalar_bsep(), 4.0);
  for (int k = 0; k <= 3; ++k) {
    if (k) {
      o = bsep_sda_step(o);
      d = dsda_sym_step(d);
    }
    EXPECT_LE(std::abs(bsep_eval_F(d).dense()(0, 0) - o.F(0, 0)), 1e-10 * std::max(1.0, std::abs(o.F(0, 0))));
  }
}

TEST(BsepEigen, ZeroCouplingReturnsSpectrumOfA) {
  MatrixC a = MatrixC::Zero(2, 2);
  a.diagonal() << Complex(-1.0, 0.0), Complex(-2.0, 0.0);
  const auto ev = bsep_eigen_extract(MatrixC::Zero(2, 2), a, MatrixC::Zero(2, 2));
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_NEAR(ev[0].real(), -2.0, 1e-15);
  EXPECT_NEAR(ev[1].real(), -1.0, 1e-15);
}

TEST(BsepEigen, ScalarConverged) {
  BsepSdaState s = bsep_init(scalar_bsep(), 4.0);
  for (int k = 0; k < 12; ++k) s = bsep_sda_step(s);
  const auto ev = bsep_eigen_extract(s.F, scalar_bsep().A, scalar_bsep().B());
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_NEAR(ev[0].real(), -1.7320508, 1e-7);
  EXPECT_NEAR(ev[0].real(), -std::sqrt(3.0), 1e-10);
}

TEST(BsepEigen, RandomMatchesDenseOracle) {
  for (Method m : {Method::sda, Method::dsda}) {
    const BsepProblem p = gen_random_bsep(6, 1, 160);
    SolveConfig cfg;
    cfg.family = Family::bsep;
    cfg.method = m;
    const ConvergenceReport r = solve_driver(p, cfg);
    ASSERT_EQ(r.status, Status::Converged) << to_string(m);
    Eigen::ComplexEigenSolver<MatrixC> es(p.hamiltonian());
    std::vector<Complex> stable;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      if (es.eigenvalues()(i).real() < 0) stable.push_back(es.eigenvalues()(i));
    }
    std::sort(stable.begin(), stable.end(), [](Complex a, Complex b) { return a.real() < b.real(); });
    ASSERT_EQ(stable.size(), 6u);
    ASSERT_EQ(r.eigenvalues.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_LE(std::abs(r.eigenvalues[i] - stable[i]), 1e-8);
  }
}

TEST(SubspaceAngle, Examples) {
  const MatrixC z = c11(0.7);
  EXPECT_LE(subspace_angle(MatrixC(-z), z).norm(), 1e-7);
  EXPECT_NEAR(subspace_angle(c11(0.0), c11(1.0))(0, 0).real(), M_PI / 4.0, 1e-15);
}

TEST(SubspaceAngle, ScalarBsepLimit) {
  BsepSdaState s = bsep_init(scalar_bsep(), 4.0);
  for (int k = 0; k < 12; ++k) s = bsep_sda_step(s);
  const MatrixC limit = MatrixC::Constant(1, 1, scalar_bsep_limit());
  EXPECT_LE(subspace_angle(MatrixC(-limit), s.F).norm(), 1e-6);
}

TEST(SubspaceAngle, SpectrumInRange) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    const int n = 1 + t % 4;
    MatrixC w(n, n), z(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        w(i, j) = Complex(g(rng), g(rng));
        z(i, j) = Complex(g(rng), g(rng));
      }
    w = (w + w.transpose()).eval();
    z = (z + z.transpose()).eval();
    const MatrixC th = subspace_angle(w, z);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(MatrixC((th + th.adjoint()) * 0.5));
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    EXPECT_LE(es.eigenvalues().maxCoeff(), M_PI / 2 + 1e-12);
  }
}

TEST(DsdaMare, ScalarInit) {
  MareProblem p = scalar_mare();
  p.gamma = 3.0;
  const DsdaMareState s = dsda_mare_init(p);
  EXPECT_NEAR(dsda_mare_eval_H(s).dense()(0, 0), 6.0 / 29.0, 1e-15);
  EXPECT_NEAR(dsda_mare_eval(s, MareIterate::H)(0, 0), 6.0 / 29.0, 1e-15);
}

TEST(DsdaMare, ZeroWidthCouplings) {
  MareProblem p = gen_random_mare(4, 3, 1, 1, 15);
  p.Bl = MatrixR::Zero(4, 0);
  p.Br = MatrixR::Zero(3, 0);
  DsdaMareState s = dsda_mare_init(p);
  EXPECT_EQ(s.Y.size(), 0);
  EXPECT_EQ(dsda_mare_eval_H(s).dense(), MatrixR::Zero(4, 3));
  p.Cl = MatrixR::Zero(3, 0);
  p.Cr = MatrixR::Zero(4, 0);
  s = dsda_mare_init(p);
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(s.Y.size(), 0);
    EXPECT_EQ(s.Z.size(), 0);
    EXPECT_EQ(dsda_mare_eval_G(s).dense(), MatrixR::Zero(3, 4));
    s = dsda_mare_step(s);
  }
}

TEST(DsdaMare, RankDeficientFactorRejected) {
  MareProblem p = gen_random_mare(4, 3, 1, 1, 15);
  p.Bl.setZero();
  EXPECT_EQ(code_of([&] { dsda_mare_init(p); }), ErrorCode::RankDeficientFactor);
}

TEST(DsdaMare, AddaWithEqualShiftsMatchesSda) {
  MareProblem p = gen_random_mare(5, 4, 1, 2, 16);
  const double g = resolve_mare_shifts(p, MareMode::sda).alpha;
  p.gamma = p.alpha = p.beta = g;
  const DsdaMareState a = dsda_mare_init(p, MareMode::sda);
  const DsdaMareState b = dsda_mare_init(p, MareMode::adda);
  EXPECT_EQ(a.U, b.U);
  EXPECT_EQ(a.V, b.V);
  EXPECT_EQ(a.W, b.W);
  EXPECT_EQ(a.Q, b.Q);
  EXPECT_EQ(a.Y, b.Y);
  EXPECT_EQ(a.Z, b.Z);
  EXPECT_EQ(a.Pa, b.Pa);
  EXPECT_EQ(a.Pd, b.Pd);
}

TEST(DsdaMare, ScalarStepMatchesOracle) {
  MareSdaState o = mare_init(scalar_mare());
  DsdaMareState d = dsda_mare_init(scalar_mare());
  for (int k = 1; k <= 2; ++k) {
    o = mare_sda_step(o);
    d = dsda_mare_step(d);
    EXPECT_NEAR(dsda_mare_eval(d, MareIterate::H)(0, 0), o.H(0, 0), 1e-12);
  }
  EXPECT_LE(relative_error(dsda_mare_eval(d, MareIterate::F), o.F), 1e-10);
}

TEST(DsdaMare, RandomRankOneAllIterates) {
  const MareProblem p = gen_random_mare(4, 4, 1, 1, 17);
  MareSdaState o = mare_init(p);
  DsdaMareState d = dsda_mare_init(p);
  for (int k = 1; k <= 3; ++k) {
    o = mare_sda_step(o);
    d = dsda_mare_step(d);
    EXPECT_LE(relative_error(dsda_mare_eval(d, MareIterate::H), o.H), 1e-10);
    EXPECT_LE(relative_error(dsda_mare_eval(d, MareIterate::G), o.G), 1e-10);
    EXPECT_LE(relative_error(dsda_mare_eval(d, MareIterate::E), o.E), 1e-10);
    EXPECT_LE(relative_error(dsda_mare_eval(d, MareIterate::F), o.F), 1e-10);
  }
}

TEST(DsdaMare, KernelStructureIsExact) {
  DsdaMareState s = dsda_mare_init(gen_random_mare(6, 5, 2, 1, 18));
  for (int k = 1; k <= 3; ++k) {
    const DsdaMareState n = dsda_mare_step(s);
    const Eigen::Index yr = s.Y.rows(), yc = s.Y.cols();
    EXPECT_EQ(n.Y.topLeftCorner(yr, yc), MatrixR::Zero(yr, yc));
    EXPECT_EQ(n.Y.topRightCorner(yr, yc), s.Y);
    EXPECT_EQ(n.Y.bottomLeftCorner(yr, yc), s.Y);
    EXPECT_EQ(n.Z.topRightCorner(s.Z.rows(), s.Z.cols()), s.Z);
    EXPECT_EQ(n.Z.bottomLeftCorner(s.Z.rows(), s.Z.cols()), s.Z);
    s = n;
  }
}

TEST(Budget, CheckBudgetRule) {
  EXPECT_NO_THROW(check_budget(2, 2, 16));  // k=2 -> 3 needs 16
  EXPECT_EQ(code_of([] { check_budget(3, 2, 16); }), ErrorCode::BudgetExceeded);
  EXPECT_EQ(code_of([] { check_budget(0, 3, 5); }), ErrorCode::BudgetExceeded);
}

TEST(Budget, StepRefusesBeyondBudget) {
  DsdaRealState s = dsda_dare_init(gen_random_dare(8, 2, 2, 3), 16);
  s = dsda_sym_step(dsda_sym_step(dsda_sym_step(s)));
  EXPECT_EQ(s.U.cols(), 16);
  EXPECT_EQ(code_of([&] { dsda_sym_step(s); }), ErrorCode::BudgetExceeded);
}

// ---------------------------------------------------------------------------
// driver

TEST(Driver, ScalarCareGammaTwo) {
  CareProblem p = scalar_care();
  p.gamma = 2.0;
  for (Method m : {Method::sda, Method::dsda}) {
    SolveConfig cfg;
    cfg.family = Family::care;
    cfg.method = m;
    cfg.tol = 1e-12;
    const ConvergenceReport r = solve_driver(p, cfg);
    EXPECT_EQ(r.status, Status::Converged);
    EXPECT_LE(std::abs(r.real_solution()(0, 0) - (std::sqrt(2.0) - 1.0)), 1e-11);
    EXPECT_EQ(r.gamma, 2.0);
  }
}

TEST(Driver, ConfigValidation) {
  SolveConfig cfg;
  cfg.max_iter = 0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::ConfigError);
  cfg = SolveConfig{};
  cfg.tol = 0.0;
  EXPECT_EQ(code_of([&] { cfg.validate(); }), ErrorCode::ConfigError);
  cfg = SolveConfig{};
  cfg.family = Family::care;
  cfg.method = Method::adda;
  EXPECT_EQ(code_of([&] { solve_driver(scalar_care(), cfg); }), ErrorCode::ConfigError);
}

TEST(Driver, BudgetGivesPartialReport) {
  SolveConfig cfg;
  cfg.family = Family::dare;
  cfg.method = Method::dsda;
  cfg.tol = 1e-300;
  cfg.column_budget = 16;
  const ConvergenceReport r = solve_driver(gen_random_dare(8, 2, 2, 4), cfg);
  EXPECT_EQ(r.status, Status::BudgetExceeded);
  ASSERT_EQ(r.iterations.size(), 4u);
  EXPECT_EQ(r.iterations.back().k, 3);
  EXPECT_EQ(r.iterations.back().basis_cols, 16);
  EXPECT_FALSE(r.message.empty());
  EXPECT_EQ(r.real_solution().rows(), 8);
  ASSERT_TRUE(r.factors.has_value());
}

TEST(Driver, MaxIterStatus) {
  SolveConfig cfg;
  cfg.family = Family::care;
  cfg.max_iter = 1;
  cfg.tol = 1e-300;
  const ConvergenceReport r = solve_driver(gen_random_care(6, 1, 1, 3), cfg);
  EXPECT_EQ(r.status, Status::MaxIter);
  EXPECT_EQ(r.iterations.size(), 2u);
}

TEST(Driver, InitFailureIsSingularStatus) {
  BsepProblem p = scalar_bsep();
  p.alpha = 1.0;
  SolveConfig cfg;
  cfg.family = Family::bsep;
  const ConvergenceReport r = solve_driver(p, cfg);
  EXPECT_EQ(r.status, Status::SingularEncountered);
  EXPECT_TRUE(r.iterations.empty());
}

TEST(Driver, ReportInvariants) {
  for (int seed = 0; seed < 8; ++seed) {
    const Problem problems[] = {gen_random_care(10, 2, 1, seed), gen_random_dare(10, 1, 2, seed),
                                gen_random_mare(6, 5, 1, 2, seed), gen_random_bsep(5, 1, seed)};
    for (const Problem& p : problems) {
      SolveConfig cfg;
      cfg.family = family_of(p);
      const ConvergenceReport r = solve_driver(p, cfg);
      ASSERT_FALSE(r.iterations.empty());
      for (std::size_t i = 0; i < r.iterations.size(); ++i) {
        EXPECT_EQ(r.iterations[i].k, int(i));
        EXPECT_GE(r.iterations[i].residual, 0.0);
        if (i) EXPECT_GE(r.iterations[i].basis_cols, r.iterations[i - 1].basis_cols);
      }
      EXPECT_EQ(r.status, Status::Converged) << to_string(cfg.family) << " seed " << seed;
    }
  }
}

TEST(Driver, SdaAndDsdaResidualsAgree) {
  for (int seed = 0; seed < 10; ++seed) {
    const Problem problems[] = {gen_random_care(12, 2, 2, 300 + seed), gen_random_dare(12, 2, 1, 300 + seed),
                                gen_random_mare(7, 6, 1, 1, 300 + seed)};
    for (const Problem& p : problems) {
      SolveConfig cfg;
      cfg.family = family_of(p);
      cfg.method = Method::sda;
      const ConvergenceReport a = solve_driver(p, cfg);
      cfg.method = Method::dsda;
      const ConvergenceReport b = solve_driver(p, cfg);
      ASSERT_EQ(a.iterations.size(), b.iterations.size());
      for (std::size_t i = 0; i < a.iterations.size(); ++i) {
        const double ra = a.iterations[i].residual, rb = b.iterations[i].residual;
        // The normalized residual carries an absolute rounding error of a few hundred ulps.
        EXPECT_LE(std::abs(ra - rb), 1e-9 * std::max(ra, rb) + 1e-13) << to_string(cfg.family) << " k=" << i;
      }
    }
  }
}

TEST(Driver, RandomCareReachesTolerance) {
  SolveConfig cfg;
  cfg.family = Family::care;
  const ConvergenceReport r = solve_driver(gen_random_care(16, 2, 2, 1), cfg);
  EXPECT_EQ(r.status, Status::Converged);
  EXPECT_LE(r.final_residual(), 1e-12);
  SolveConfig sda = cfg;
  sda.method = Method::sda;
  EXPECT_LE(relative_error(r.real_solution(), solve_driver(gen_random_care(16, 2, 2, 1), sda).real_solution()),
            1e-10);
}

TEST(Driver, MareMinimalSolutionNonnegative) {
  for (Method m : {Method::sda, Method::dsda, Method::adda}) {
    SolveConfig cfg;
    cfg.family = Family::mare;
    cfg.method = m;
    const ConvergenceReport r = solve_driver(gen_random_mare(6, 7, 2, 2, 44), cfg);
    EXPECT_EQ(r.status, Status::Converged);
    EXPECT_GE(r.real_solution().minCoeff(), -1e-12);
  }
}

TEST(Driver, BsepIncrementsShrink) {
  BsepProblem p = scalar_bsep();
  p.alpha = 4.0;
  SolveConfig cfg;
  cfg.family = Family::bsep;
  cfg.method = Method::sda;
  const ConvergenceReport r = solve_driver(p, cfg);
  EXPECT_EQ(r.status, Status::Converged);
  EXPECT_LE(r.final_residual(), 1e-13);
  EXPECT_EQ(r.alpha, 4.0);
}

TEST(Driver, KernelDiagnosticLogged) {
  SolveConfig cfg;
  cfg.family = Family::dare;
  const ConvergenceReport r = solve_driver(gen_random_dare(8, 1, 1, 5), cfg);
  ASSERT_GE(r.iterations.size(), 2u);
  EXPECT_GE(r.iterations[1].kernel_min_eig, 0.0);
  EXPECT_LE(r.iterations[1].kernel_min_eig, 1.0 + 1e-15);
  cfg.method = Method::sda;
  EXPECT_TRUE(std::isnan(solve_driver(gen_random_dare(8, 1, 1, 5), cfg).iterations[1].kernel_min_eig));
}
