#include <gtest/gtest.h>

#include <random>

#include "fockmetro/errors.hpp"
#include "fockmetro/metrology.hpp"
#include "fockmetro/sensitivity.hpp"
#include "fockmetro/states.hpp"
#include "oracles.hpp"

using namespace fockmetro;

namespace {

TruncationPolicy pol(int d) {
  TruncationPolicy p;
  p.dim = d;
  return p;
}

// all orderings of i x's and j p's, averaged, as dense matrices
CMat word(int i, int j, int d) {
  const CMat x = oracle::position(d), p = oracle::momentum(d);
  std::vector<int> w(i + j, 0);
  for (int k = i; k < i + j; ++k) w[k] = 1;
  CMat acc = CMat::Zero(d, d);
  int count = 0;
  do {
    CMat prod = CMat::Identity(d, d);
    for (int c : w) prod = prod * (c ? p : x);
    acc += prod;
    ++count;
  } while (std::next_permutation(w.begin(), w.end()));
  acc /= count;
  return 0.5 * (acc + acc.adjoint());
}

// q^T G^+ q over the pool {x^i p^j : 1 <= i + j <= k}
double brute_optimal(const CMat& rho_small, int k) {
  const int ds = static_cast<int>(rho_small.rows());
  const int d = ds + k + 2;
  CMat rho = CMat::Zero(d, d);
  rho.topLeftCorner(ds, ds) = rho_small;
  const CMat n = oracle::number(d);
  std::vector<CMat> ops;
  for (int order = 1; order <= k; ++order)
    for (int j = 0; j <= order; ++j) ops.push_back(word(order - j, j, d));
  const int s = static_cast<int>(ops.size());
  oracle::RVec q(s);
  oracle::RMat g(s, s);
  std::vector<double> mean(s);
  for (int a = 0; a < s; ++a) {
    mean[a] = (rho * ops[a]).trace().real();
    q(a) = (cplx(0, -1) * (rho * (ops[a] * n - n * ops[a])).trace()).real();
  }
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b)
      g(a, b) = (0.5 * (rho * (ops[a] * ops[b] + ops[b] * ops[a])).trace()).real() - mean[a] * mean[b];
  Eigen::SelfAdjointEigenSolver<oracle::RMat> es(g);
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  double val = 0.0;
  for (int i = 0; i < s; ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam > 1e-10 * top) {
      const double proj = es.eigenvectors().col(i).dot(q);
      val += proj * proj / lam;
    }
  }
  return val;
}

// finite-difference S(theta) = (d<A>/dtheta)^2 / Var(A) on the dense rotated state
double brute_fixed(const CMat& a, const CMat& rho_small, double theta) {
  const int d = static_cast<int>(a.rows());
  CMat rho = CMat::Zero(d, d);
  rho.topLeftCorner(rho_small.rows(), rho_small.cols()) = rho_small;
  auto rot = [&](double t) {
    CMat r = rho;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) r(i, j) *= std::polar(1.0, -t * (i - j));
    return r;
  };
  const double h = 1e-5;
  const double dm = ((rot(theta + h) * a).trace().real() - (rot(theta - h) * a).trace().real()) / (2 * h);
  const CMat r = rot(theta);
  const double mean = (r * a).trace().real();
  const double var = (r * a * a).trace().real() - mean * mean;
  return dm * dm / var;
}

}  // namespace

TEST(Pool, SizeAndMembers) {
  EXPECT_EQ(pool_size(2), 5);
  EXPECT_EQ(pool_size(4), 14);
  const ObservablePool p = build_pool(4, 30);
  ASSERT_EQ(static_cast<int>(p.members.size()), 14);
  for (std::size_t i = 0; i < p.members.size(); ++i) {
    const auto [px, pp] = p.labels[i];
    EXPECT_LT((p.members[i].dense() - word(px, pp, 30)).norm(), 1e-10);
  }
}

TEST(Optimal, MatchesBruteForceMoments) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 12; ++t) {
    const int k = 1 + t % 3;
    const int ds = 7;
    const CMat rho = oracle::random_mixed(rng, ds, 5, 1 + t % 3);
    const MixedState s(rho, pol(ds));
    const auto res = optimal_sensitivity(build_pool_for_state(k, ds), s).second;
    const double ref = brute_optimal(rho, k);
    EXPECT_NEAR(res.sensitivity, ref, 1e-8 * std::max(1.0, ref)) << t;
  }
}

TEST(Optimal, PureOverloadAgrees) {
  const PureState s = mth_phase_for_occupation(3, 0.2, DimLadder::for_occupation(0.2));
  const ObservablePool pool = build_pool_for_state(3, s.dim());
  const double a = optimal_sensitivity(pool, s).second.sensitivity;
  const double b = optimal_sensitivity(pool, MixedState::from_pure(s)).second.sensitivity;
  EXPECT_NEAR(a, b, 1e-9 * b);
}

// property: S <= F_Q over random states and pools
TEST(Optimal, CramerRaoCorpus) {
  std::mt19937_64 rng(1234);
  int checked = 0;
  for (int t = 0; t < 220; ++t) {
    const int k = 1 + t % 5;
    const int support = 3 + t % 8;
    const int ds = support + 2;
    MixedState s;
    if (t % 2) {
      s = MixedState(oracle::random_mixed(rng, ds, support, 1 + t % 4), pol(ds));
    } else {
      s = MixedState::from_pure(PureState(oracle::random_state(rng, ds, support), pol(ds)));
    }
    const auto res = optimal_sensitivity(build_pool_for_state(k, ds), s).second;
    ASSERT_TRUE(std::isfinite(res.sensitivity));
    EXPECT_GE(res.sensitivity, -1e-12);
    EXPECT_LE(res.sensitivity, res.qfi_same_state * (1 + 1e-6)) << t;
    ++checked;
  }
  EXPECT_GE(checked, 200);
}

TEST(Optimal, SqueezedSaturatesWithQuadraticPool) {
  for (double n : {0.1, 1.0}) {
    const PureState s = squeezed_for_occupation(n, DimLadder::for_occupation(n));
    const auto res = optimal_sensitivity(build_pool_for_state(2, s.dim()), s).second;
    EXPECT_GE(res.ratio_R, 1 - 1e-6);
  }
}

TEST(Optimal, VacuumCarriesNoInformation) {
  CVec v = CVec::Zero(8);
  v(0) = 1;
  const auto res = optimal_sensitivity(build_pool_for_state(2, 8), PureState(v, pol(8))).second;
  EXPECT_NEAR(res.sensitivity, 0.0, 1e-14);
}

TEST(Optimal, RefusesUnconvergedState) {
  CVec v = CVec::Zero(6);
  v(5) = 1;
  TruncationPolicy p = pol(6);
  p.tail_window = 1;
  const PureState s(v, p);
  ASSERT_FALSE(s.converged());
  EXPECT_THROW(optimal_sensitivity(build_pool_for_state(2, 6), s), UnconvergedTruncation);
  EXPECT_THROW(sensitivity_fixed(fixed_observables(14).b3p, s), UnconvergedTruncation);
}

TEST(Fixed, SeriesMatchesFiniteDifference) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 6; ++t) {
    const int ds = 8;
    const CMat rho = oracle::random_mixed(rng, ds, 6, 1 + t % 2);
    const MixedState s(rho, pol(ds));
    const FixedObservables obs = fixed_observables(ds + 8, 3);
    for (const OperatorMatrix* a : {&obs.b3p, &obs.b4p, &obs.bms}) {
      FixedOptions fo;
      fo.theta = 0.37 * t;
      const double got = sensitivity_fixed(*a, s, fo).sensitivity;
      const double ref = brute_fixed(a->dense(), rho, fo.theta);
      EXPECT_NEAR(got, ref, 1e-6 * std::max(1.0, ref)) << t;
    }
  }
}

TEST(Fixed, ThetaMaximizationDominatesScan) {
  std::mt19937_64 rng(8);
  const CMat rho = oracle::random_mixed(rng, 8, 6, 2);
  const MixedState s(rho, pol(8));
  const FixedObservables obs = fixed_observables(16, 3);
  FixedOptions best;
  best.maximize_theta = true;
  const SensitivityResult r = sensitivity_fixed(obs.b3p, s, best);
  for (int i = 0; i < 50; ++i) {
    FixedOptions fo;
    fo.theta = 2 * M_PI * i / 50;
    EXPECT_GE(r.sensitivity, sensitivity_fixed(obs.b3p, s, fo).sensitivity - 1e-12);
  }
  EXPECT_LE(r.sensitivity, r.qfi_same_state * (1 + 1e-9));
}

TEST(Fixed, ObservableDefinitions) {
  const int d = 20;
  const FixedObservables obs = fixed_observables(d, 4);
  const CMat x = oracle::position(d), p = oracle::momentum(d);
  const CMat t = x * p * x + x * p * p;
  EXPECT_LT((obs.b3p.dense() - (t + t.adjoint())).norm(), 1e-10);
  EXPECT_LT((obs.b4p.dense() - x * x * x * x).topLeftCorner(d - 4, d - 4).norm(), 1e-10);
  const CMat a = oracle::annihilation(d);
  const CMat a4 = a * a * a * a;
  EXPECT_LT((obs.bms.dense() - (a4 + a4.adjoint())).norm(), 1e-10);
}

TEST(Pool, Labels) {
  using L = std::vector<std::pair<int, int>>;
  EXPECT_EQ(build_pool(1, 10).labels, (L{{1, 0}, {0, 1}}));
  const ObservablePool p4 = build_pool(4, 20);
  EXPECT_EQ(L(p4.labels.begin(), p4.labels.begin() + 5), (L{{1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}}));
  EXPECT_EQ(build_pool(6, 20).members.size(), 27u);
  for (const auto& m : build_pool(6, 20).members) EXPECT_LT(hermitian_residue(m.sparse()), 1e-12);
}

TEST(Moments, QVectorIsRotationDerivative) {
  const int d = 60;
  const MixedState s = rotate(MixedState::from_pure(coherent_state(1.3, pol(d))), 0.4);
  const ObservablePool pool = build_pool_for_state(2, d);
  const RVec q = q_vector(pool, s);
  const double h = 1e-6;
  const MixedState up = rotate(s, h), dn = rotate(s, -h);
  const auto [x, p] = quadratures(d);
  const double qx_ref = (expectation(x, up).real() - expectation(x, dn).real()) / (2 * h);
  const double qp_ref = (expectation(p, up).real() - expectation(p, dn).real()) / (2 * h);
  EXPECT_NEAR(q(0), qx_ref, 1e-6);
  EXPECT_NEAR(q(1), qp_ref, 1e-6);
  EXPECT_GT(std::abs(q(0)), 0.1);
}

TEST(Moments, VacuumCovariance) {
  CVec v = CVec::Zero(10);
  v(0) = 1;
  const RMat g = covariance_matrix(build_pool_for_state(1, 10), MixedState::from_pure(PureState(v, pol(10))));
  EXPECT_LT((g - 0.5 * RMat::Identity(2, 2)).norm(), 1e-12);
}

TEST(Fixed, VacuumMatrixElements) {
  const FixedObservables obs = fixed_observables(30, 3);
  EXPECT_NEAR(std::abs(obs.b4p.dense()(0, 0) - 0.75), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(obs.bms.dense()(0, 0)), 0.0, 1e-15);
  EXPECT_LE(hermitian_residue(obs.b3p.sparse()), 1e-14);
}

TEST(Optimal, LargerPoolNeverLowersSensitivity) {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 8; ++t) {
    const MixedState s(oracle::random_mixed(rng, 8, 6, 1 + t % 3), pol(8));
    double prev = 0.0;
    for (int k = 1; k <= 5; ++k) {
      const double v = optimal_sensitivity(build_pool_for_state(k, 8), s).second.sensitivity;
      EXPECT_GE(v, prev - 1e-8 * std::max(1.0, prev)) << t << " k=" << k;
      prev = v;
    }
  }
}

TEST(Optimal, MemberScaleInvariance) {
  std::mt19937_64 rng(32);
  const MixedState s(oracle::random_mixed(rng, 8, 6, 2), pol(8));
  ObservablePool pool = build_pool_for_state(3, 8);
  const double base = optimal_sensitivity(pool, s).second.sensitivity;
  pool.members[2] = cplx(-3.7) * pool.members[2];
  pool.members[5] = cplx(0.01) * pool.members[5];
  EXPECT_NEAR(optimal_sensitivity(pool, s).second.sensitivity, base, 1e-10 * std::max(1.0, base));
}

TEST(Optimal, IndependentOfConstructionAngle) {
  const PureState c = mth_phase_for_occupation(3, 0.3, DimLadder::for_occupation(0.3));
  const ObservablePool pool = build_pool_for_state(4, c.dim());
  const double base = optimal_sensitivity(pool, c).second.sensitivity;
  for (double th : {0.3, 1.7}) {
    OptimalOptions o;
    o.theta = th;
    EXPECT_NEAR(optimal_sensitivity(pool, c, std::nullopt, o).second.sensitivity, base, 1e-8 * base) << th;
  }
}
