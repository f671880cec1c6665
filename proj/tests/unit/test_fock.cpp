#include <gtest/gtest.h>

#include <random>

#include "fockmetro/errors.hpp"
#include "fockmetro/fock.hpp"
#include "fockmetro/states.hpp"
#include "oracles.hpp"

using namespace fockmetro;

namespace {

TruncationPolicy pol(int d) {
  TruncationPolicy p;
  p.dim = d;
  return p;
}

// average over all distinct orderings of i x's and j p's, by enumeration
CMat brute_symmetrized(int i, int j, int d) {
  const CMat x = oracle::position(d), p = oracle::momentum(d);
  std::vector<int> word(i + j, 0);
  for (int k = i; k < i + j; ++k) word[k] = 1;
  CMat acc = CMat::Zero(d, d);
  int count = 0;
  do {
    CMat prod = CMat::Identity(d, d);
    for (int w : word) prod = prod * (w ? p : x);
    acc += prod;
    ++count;
  } while (std::next_permutation(word.begin(), word.end()));
  acc /= count;
  return 0.5 * (acc + acc.adjoint());
}

}  // namespace

TEST(Operators, LadderMatrixElements) {
  const int d = 12;
  const CMat a = annihilation_op(d).dense();
  const CMat ad = creation_op(d).dense();
  EXPECT_LT((a - oracle::annihilation(d)).norm(), 1e-14);
  EXPECT_LT((ad - a.adjoint()).norm(), 1e-14);
  EXPECT_LT((number_op(d).dense() - oracle::number(d)).norm(), 1e-14);
  // [a, a^dag] = 1 away from the truncation edge
  const CMat c = a * ad - ad * a;
  for (int n = 0; n < d - 1; ++n) EXPECT_NEAR(c(n, n).real(), 1.0, 1e-13);
  EXPECT_NEAR(c(d - 1, d - 1).real(), 1.0 - d, 1e-12);
}

TEST(Operators, Quadratures) {
  const int d = 10;
  auto [x, p] = quadratures(d);
  EXPECT_TRUE(x.hermitian());
  EXPECT_TRUE(p.hermitian());
  EXPECT_LT((x.dense() - oracle::position(d)).norm(), 1e-14);
  EXPECT_LT((p.dense() - oracle::momentum(d)).norm(), 1e-14);
}

TEST(Operators, SymmetrizedWordMatchesEnumeration) {
  const int d = 14;
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; j <= 3; ++j) {
      if (i + j == 0) continue;
      const OperatorMatrix w = symmetrized_word(i, j, d);
      EXPECT_TRUE(w.hermitian());
      EXPECT_LT((w.dense() - brute_symmetrized(i, j, d)).norm(), 1e-11) << i << "," << j;
    }
}

TEST(Operators, TensorProduct) {
  const CMat a = annihilation_op(3).dense();
  const CMat b = number_op(4).dense();
  const CMat t = tensor(annihilation_op(3), number_op(4)).dense();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) EXPECT_EQ(t(i * 4 + k, j * 4 + l), a(i, j) * b(k, l));
}

TEST(Operators, SymmetrizedWordRejectsEmpty) { EXPECT_THROW(symmetrized_word(0, 0, 4), Error); }

TEST(States, PureStateRejectsUnnormalized) {
  CVec v = CVec::Zero(4);
  v(0) = 2.0;
  EXPECT_THROW(PureState(v, pol(4)), Error);
  EXPECT_NO_THROW(PureState::normalized(v, pol(4)));
}

TEST(States, TailPopulationWindow) {
  RVec p = RVec::Zero(6);
  p << 0.5, 0.2, 0.1, 0.1, 0.06, 0.04;
  EXPECT_NEAR(tail_population(p, 1), 0.04, 1e-15);
  EXPECT_NEAR(tail_population(p, 2), 0.10, 1e-15);
}

TEST(States, MixedFromFactorMatchesProduct) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  CMat w(8, 3);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 3; ++j) w(i, j) = cplx(g(rng), g(rng));
  w /= w.norm();
  const MixedState s = MixedState::from_factor(w, pol(8));
  EXPECT_LT((s.rho() - w * w.adjoint()).norm(), 1e-14);
  const CMat f = s.factorize();
  EXPECT_LT((f * f.adjoint() - s.rho()).norm(), 1e-13);
}

TEST(States, PartialTraceMatchesBruteForce) {
  std::mt19937_64 rng(11);
  const int dl = 5, dp = 4;
  const CVec psi = oracle::random_state(rng, dl * dp, dl * dp);
  TwoModeState two(psi, pol(dl), pol(dp));
  const MixedState r = partial_trace_pump(two);
  CMat ref = CMat::Zero(dl, dl);
  for (int i = 0; i < dl; ++i)
    for (int j = 0; j < dl; ++j)
      for (int k = 0; k < dp; ++k) ref(i, j) += psi(i * dp + k) * std::conj(psi(j * dp + k));
  EXPECT_LT((r.rho() - ref).norm(), 1e-14);
}

TEST(Expectation, VarianceOfNumberOnCoherent) {
  const PureState c = coherent_state(1.3, pol(60));
  EXPECT_NEAR(variance(number_op(60), c), 1.69, 1e-12);
  EXPECT_NEAR(expectation(number_op(60), c).real(), 1.69, 1e-12);
  const MixedState m = MixedState::from_pure(c);
  EXPECT_NEAR(variance(number_op(60), m), 1.69, 1e-12);
}

TEST(Exponential, KrylovMatchesDense) {
  const int d = 80;
  auto [x, p] = quadratures(d);
  const OperatorMatrix h = symmetrized_word(3, 0, d);
  CVec v = CVec::Zero(d);
  v(0) = 1.0;
  const CMat u = oracle::expm_hermitian(h.dense(), 0.05);
  const CVec ref = u * v;
  ExpOptions dense;
  dense.method = ExpMethod::Dense;
  ExpOptions kr;
  kr.method = ExpMethod::Krylov;
  EXPECT_LT((expm_apply(h, 0.05, v, dense) - ref).norm(), 1e-11);
  EXPECT_LT((expm_apply(h, 0.05, v, kr) - ref).norm(), 1e-10);
  EXPECT_LT((krylov_expv(h.sparse(), 0.05, v, 1e-12, 30, 100000) - ref).norm(), 1e-10);
}

TEST(Exponential, UnitaryPreservesNorm) {
  std::mt19937_64 rng(3);
  const int d = 40;
  const CVec v = oracle::random_state(rng, d, 10);
  const OperatorMatrix h = symmetrized_word(2, 2, d);
  ExpOptions kr;
  kr.method = ExpMethod::Krylov;
  EXPECT_NEAR(expm_apply(h, 0.3, v, kr).norm(), 1.0, 1e-11);
}

TEST(TraceDistance, MatchesEigenvalueOracle) {
  std::mt19937_64 rng(5);
  const CMat a = oracle::random_mixed(rng, 7, 7, 3);
  const CMat b = oracle::random_mixed(rng, 7, 7, 2);
  EXPECT_NEAR(trace_distance(a, b), oracle::trace_norm_distance(a, b), 1e-13);
  EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-15);
}

TEST(States, ProductStateTracesToPure) {
  std::mt19937_64 rng(12);
  const CVec a = oracle::random_state(rng, 6, 6), b = oracle::random_state(rng, 5, 5);
  CVec psi(30);
  for (int i = 0; i < 6; ++i)
    for (int k = 0; k < 5; ++k) psi(i * 5 + k) = a(i) * b(k);
  const CMat r = partial_trace_pump(TwoModeState(psi, pol(6), pol(5))).rho();
  EXPECT_NEAR((r * r).trace().real(), 1.0, 1e-10);
}

TEST(Operators, FactoryCommutatorInterior) {
  for (int d : {8, 33, 200}) {
    const CMat a = annihilation_op(d).dense(), ad = creation_op(d).dense();
    const CMat c = a * ad - ad * a;
    EXPECT_LT((c.topLeftCorner(d - 1, d - 1) - CMat::Identity(d - 1, d - 1)).norm(), 1e-12) << d;
  }
}

TEST(Exponential, NormPreservedAtLargePhase) {
  std::mt19937_64 rng(4);
  const int d = 60;
  const CVec v = oracle::random_state(rng, d, 20);
  const OperatorMatrix h = symmetrized_word(3, 0, d);
  for (double phase : {-1e3, 1.0, 1e3}) {
    const PureState out = hermitian_exp_apply(h, phase, PureState(v, pol(d)));
    EXPECT_NEAR(out.amplitudes().norm(), 1.0, 1e-10) << phase;
  }
}

TEST(Determinism, RepeatedCallsAreBitIdentical) {
  const OperatorMatrix h = symmetrized_word(2, 1, 50);
  CVec v = CVec::Zero(50);
  v(0) = 1.0;
  const CVec a = expm_apply(h, 0.7, v), b = expm_apply(h, 0.7, v);
  EXPECT_TRUE((a.array() == b.array()).all());
}
