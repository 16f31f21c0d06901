#include "syncregion/syncore.hpp"

#include <cstdlib>
#include <random>

#include <gtest/gtest.h>

#include "syncregion/netsim.hpp"
#include "test_util.hpp"

namespace syncregion {
namespace {

const Complex kEx2Point(1.5, 0.8660254037844386);
const std::vector<double> kEx2A{1, 11, 9, 8}, kEx2C{0, 6, 6, 6};
const std::vector<double> kEx1A{1, 2, 0, -2}, kEx1C{0, 1, 1.5, 1};

// Frozen from an independent scipy eigenvalue computation; the root oracle
// below recomputes it from the characteristic polynomial.
constexpr double kEx2Margin = 0.042023135758905816;

GTEST_TEST(RegionMembershipTest, Example2Point) {
  const RegionPoint p = region_membership(testing::example2(), 1.0, kEx2Point);
  EXPECT_TRUE(p.member);
  EXPECT_NEAR(p.margin, kEx2Margin, 1e-10);
  EXPECT_NEAR(testing::companion_margin(kEx2A, kEx2C, 1.0, kEx2Point), kEx2Margin, 1e-10);
}

GTEST_TEST(RegionMembershipTest, Example2RealAxisExcluded) {
  const LtiSystem p = testing::example2();
  for (int i = -1000; i <= 1000; ++i) {
    const double s = 0.01 * i;
    EXPECT_FALSE(region_membership(p, 1.0, {s, 0.0}).member) << s;
  }
}

GTEST_TEST(RegionMembershipTest, ZeroPointIsHurwitzTestOfA) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const LtiSystem p = testing::random_system(rng);
    const GainMatrix k = testing::random_matrix(rng, p.inputs(), p.outputs());
    EXPECT_EQ(region_membership(p, k, 0.0).member, is_hurwitz(p.A()).verdict);
  }
}

GTEST_TEST(RegionMembershipTest, AgreesWithRootOracle) {
  std::mt19937_64 rng(2);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = testing::random_companion(rng, 1 + trial % 4);
    const double k = std::normal_distribution<double>(0.0, 2.0)(rng);
    const Complex s = testing::random_complex(rng, 5.0);
    const RegionPoint p = region_membership(d.sys, k, s);
    const double oracle = testing::companion_margin(d.a, d.c, k, s);
    EXPECT_NEAR(p.margin, oracle, 1e-7 * std::max(1.0, std::abs(oracle)));
    if (std::abs(oracle) > kBoundaryGuard) {
      EXPECT_EQ(p.member, oracle > 0.0);
      ++checked;
    }
  }
  EXPECT_GT(checked, 250);
}

GTEST_TEST(RegionMembershipTest, ConjugateSymmetryIsExact) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const LtiSystem p = testing::random_system(rng);
    const GainMatrix k = testing::random_matrix(rng, p.inputs(), p.outputs());
    const Complex s = testing::random_complex(rng, 5.0);
    const RegionPoint a = region_membership(p, k, s);
    const RegionPoint b = region_membership(p, k, std::conj(s));
    EXPECT_EQ(a.member, b.member);
    EXPECT_EQ(a.margin, b.margin);
  }
}

GTEST_TEST(RegionMembershipTest, GainDimensionChecked) {
  EXPECT_THROW(region_membership(testing::example2(), GainMatrix::Ones(2, 1), 1.0), DimensionError);
}

GTEST_TEST(RegionScanTest, Example1AvoidsAgaevCone) {
  const RegionGrid g = region_scan(testing::example1(), scalar_gain(1.0), {-1, 6, -4, 4}, {200, 200});
  EXPECT_GT(g.member_count(), 0u);
  for (int iy = 0; iy < 200; ++iy)
    for (int ix = 0; ix < 200; ++ix)
      if (g.member(ix, iy)) { EXPECT_FALSE(agaev_cone_contains(3, g.center(ix, iy))); }
}

GTEST_TEST(RegionScanTest, Example1CellsAgainstRootOracle) {
  const RegionGrid g = region_scan(testing::example1(), scalar_gain(1.0), {-1, 6, -4, 4}, {40, 40});
  for (int iy = 0; iy < 40; ++iy) {
    for (int ix = 0; ix < 40; ++ix) {
      const double oracle = testing::companion_margin(kEx1A, kEx1C, 1.0, g.center(ix, iy));
      if (std::abs(oracle) > kBoundaryGuard) { EXPECT_EQ(g.member(ix, iy), oracle > 0.0); }
    }
  }
}

GTEST_TEST(RegionScanTest, DoubleIntegratorPositiveRealAxis) {
  const RegionGrid g = region_scan(testing::double_integrator(1, 1), scalar_gain(1.0), {0, 10, -10, 10}, {50, 201});
  const int row = 100;
  EXPECT_EQ(g.center(0, row).imag(), 0.0);
  for (int ix = 0; ix < 50; ++ix) EXPECT_TRUE(g.member(ix, row)) << g.center(ix, row);
}

GTEST_TEST(RegionScanTest, UnstabilizableIsEmpty) {
  const LtiSystem p(RealMatrix::Constant(1, 1, 1.0), RealMatrix::Zero(1, 1), RealMatrix::Ones(1, 1));
  const RegionGrid g = region_scan(p, scalar_gain(1.0), {-10, 10, -10, 10}, {30, 30});
  EXPECT_EQ(g.member_count(), 0u);
}

GTEST_TEST(RegionScanTest, MirrorMatchesDirectEvaluation) {
  const LtiSystem p = testing::example1();
  const RegionGrid g = region_scan(p, scalar_gain(1.0), {-1, 6, -4, 4}, {17, 23});
  for (int iy = 0; iy < 23; ++iy) {
    for (int ix = 0; ix < 17; ++ix) {
      EXPECT_EQ(g.member(ix, iy), g.member(ix, 22 - iy));
      const RegionPoint direct = region_membership(p, 1.0, g.center(ix, iy));
      EXPECT_EQ(g.member(ix, iy), direct.member);
      EXPECT_NEAR(g.margin[g.index(ix, iy)], direct.margin, 1e-12);
    }
  }
}

GTEST_TEST(RegionScanTest, AsymmetricWindow) {
  const LtiSystem p = testing::example1();
  const RegionGrid g = region_scan(p, scalar_gain(1.0), {-1, 6, -1, 4}, {11, 13});
  for (int iy = 0; iy < 13; ++iy)
    for (int ix = 0; ix < 11; ++ix)
      EXPECT_EQ(g.member(ix, iy), region_membership(p, 1.0, g.center(ix, iy)).member);
}

GTEST_TEST(RegionScanTest, IndependentOfThreadCount) {
  const LtiSystem p = testing::example1();
  ::setenv("SYNCREGION_THREADS", "1", 1);
  const RegionGrid serial = region_scan(p, scalar_gain(1.0), {-1, 6, -4, 4}, {60, 61});
  ::setenv("SYNCREGION_THREADS", "4", 1);
  const RegionGrid parallel = region_scan(p, scalar_gain(1.0), {-1, 6, -4, 4}, {60, 61});
  ::unsetenv("SYNCREGION_THREADS");
  EXPECT_EQ(serial.membership, parallel.membership);
  EXPECT_EQ(serial.margin, parallel.margin);
}

GTEST_TEST(RegionScanTest, RejectsDegenerateResolution) {
  EXPECT_THROW(region_scan(testing::example1(), scalar_gain(1.0), {-1, 1, -1, 1}, {1, 5}), std::invalid_argument);
  EXPECT_THROW(region_scan(testing::example1(), scalar_gain(1.0), {1, 1, -1, 1}, {5, 5}), std::invalid_argument);
}

GTEST_TEST(RegionScanTest, MemberImpliesPositiveMargin) {
  const RegionGrid g = region_scan(testing::example1(), scalar_gain(1.0), {-1, 6, -4, 4}, {50, 50});
  for (std::size_t i = 0; i < g.membership.size(); ++i)
    if (g.membership[i]) { EXPECT_GT(g.margin[i], 0.0); }
}

GTEST_TEST(CheckNetworkSyncTest, Example2) {
  const SyncVerdict v = check_network_sync(testing::example2(), scalar_gain(1.0), WeightedDigraph::cycle(3, 1.0));
  EXPECT_TRUE(v.synchronizes);
  ASSERT_EQ(v.eigenvalues.size(), 2u);
  EXPECT_NEAR(v.min_margin(), kEx2Margin, 1e-10);
  EXPECT_TRUE(v.determinate);
  EXPECT_TRUE(check_network_sync_oracle(testing::example2(), scalar_gain(1.0), WeightedDigraph::cycle(3, 1.0)));
}

GTEST_TEST(CheckNetworkSyncTest, ZeroGraphUnstableA) {
  const SyncVerdict v = check_network_sync(testing::example2(), scalar_gain(1.0), WeightedDigraph(3));
  EXPECT_FALSE(v.synchronizes);
  EXPECT_FALSE(check_network_sync_oracle(testing::example2(), scalar_gain(1.0), WeightedDigraph(3)));
}

GTEST_TEST(CheckNetworkSyncTest, DoubleIntegratorPair) {
  const SyncVerdict v =
      check_network_sync(testing::double_integrator(1, 1), scalar_gain(1.0), WeightedDigraph::complete(2, 0.5));
  EXPECT_TRUE(v.synchronizes);
  ASSERT_EQ(v.eigenvalues.size(), 1u);
  EXPECT_NEAR(std::abs(v.eigenvalues[0].lambda - Complex(1.0)), 0.0, 1e-14);
  // A - BKC = [[0, 1], [-1, -1]]: real parts -1/2.
  EXPECT_NEAR(v.min_margin(), 0.5, 1e-12);
}

GTEST_TEST(CheckNetworkSyncTest, TwoNodesEqualsSingleMembership) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const LtiSystem p = testing::random_system(rng);
    const GainMatrix k = testing::random_matrix(rng, p.inputs(), p.outputs());
    const auto g = testing::random_graph(rng, 2, 1.0, true);
    const double lambda = interconnection_matrix(g).trace();
    const RegionPoint rp = region_membership(p, k, lambda);
    if (std::abs(rp.margin) <= kBoundaryGuard) continue;
    EXPECT_EQ(check_network_sync_oracle(p, k, g), rp.member);
    EXPECT_EQ(check_network_sync(p, k, g).synchronizes, rp.member);
  }
}

GTEST_TEST(CheckNetworkSyncTest, AgreesWithKroneckerOracle) {
  std::mt19937_64 rng(5);
  int checked = 0, synced = 0;
  for (int trial = 0; trial < 400 && checked < 150; ++trial) {
    const LtiSystem p = testing::random_system(rng, 4, 2);
    const GainMatrix k = testing::random_matrix(rng, p.inputs(), p.outputs());
    const auto g = testing::random_graph(rng, 2 + trial % 5, 0.6, true);
    const SyncVerdict v = check_network_sync(p, k, g);
    if (v.min_abs_margin() <= kBoundaryGuard) continue;
    EXPECT_EQ(v.synchronizes, check_network_sync_oracle(p, k, g));
    synced += v.synchronizes;
    ++checked;
  }
  EXPECT_GE(checked, 100);
  EXPECT_GT(synced, 0);
}

GTEST_TEST(CheckNetworkSyncTest, OracleSizeLimit) {
  EXPECT_THROW(check_network_sync_oracle(testing::example2(), scalar_gain(1.0), WeightedDigraph::cycle(52, 1.0)),
               std::length_error);
  EXPECT_NO_THROW(
      check_network_sync_oracle(testing::example2(), scalar_gain(1.0), WeightedDigraph::cycle(52, 1.0), 400));
}

GTEST_TEST(KalmanTest, MinimalSystemUnchangedInSize) {
  const KalmanDecomposition kd = kalman_minimal(testing::example2());
  ASSERT_TRUE(kd.minimal);
  EXPECT_EQ(kd.minimal->states(), 4);
  EXPECT_TRUE(kd.is_minimal(4));
  EXPECT_TRUE(kd.stabilizable);
  EXPECT_TRUE(kd.detectable);
}

GTEST_TEST(KalmanTest, UncontrollableUnstableMode) {
  RealMatrix a = RealMatrix::Zero(2, 2);
  a(0, 0) = -1;
  a(1, 1) = 1;
  RealMatrix b(2, 1), c(1, 2);
  b << 1, 0;
  c << 1, 0;
  const KalmanDecomposition kd = kalman_minimal({a, b, c});
  ASSERT_TRUE(kd.minimal);
  EXPECT_EQ(kd.minimal->states(), 1);
  EXPECT_NEAR(kd.minimal->A()(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(kd.minimal->B()(0, 0) * kd.minimal->C()(0, 0), 1.0, 1e-12);
  EXPECT_FALSE(kd.stabilizable);
  EXPECT_FALSE(kd.detectable);  // the unstable mode is also unobservable
  const RegionGrid g = region_scan({a, b, c}, scalar_gain(1.0), {-5, 5, -5, 5}, {21, 21});
  EXPECT_EQ(g.member_count(), 0u);
}

GTEST_TEST(KalmanTest, StableHiddenModeKeepsRegion) {
  RealMatrix a = RealMatrix::Zero(2, 2);
  a(0, 0) = -1;
  a(1, 1) = -2;
  RealMatrix b(2, 1), c(1, 2);
  b << 1, 1;
  c << 1, 0;
  const LtiSystem full(a, b, c);
  const KalmanDecomposition kd = kalman_minimal(full);
  EXPECT_TRUE(kd.stabilizable);
  EXPECT_TRUE(kd.detectable);
  ASSERT_TRUE(kd.minimal);
  EXPECT_EQ(kd.minimal->states(), 1);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const Complex s = testing::random_complex(rng, 4.0);
    const RegionPoint f = region_membership(full, 1.0, s);
    const RegionPoint m = region_membership(*kd.minimal, 1.0, s);
    if (std::abs(m.margin) > kBoundaryGuard && std::abs(f.margin) > kBoundaryGuard) { EXPECT_EQ(f.member, m.member); }
  }
}

// Appends a stable unreachable block and a stable unobservable block.
LtiSystem inflate(const LtiSystem& p, std::mt19937_64& rng) {
  const Eigen::Index n = p.states();
  const Eigen::Index total = n + 2;
  RealMatrix a = RealMatrix::Zero(total, total);
  a.topLeftCorner(n, n) = p.A();
  a(n, n) = -1.5;      // unreachable: no B entry, no coupling into it
  a(n + 1, n + 1) = -0.7;  // unobservable: no C entry
  a.block(n + 1, 0, 1, n) = testing::random_matrix(rng, 1, n);  // driven by x, invisible
  RealMatrix b = RealMatrix::Zero(total, p.inputs());
  b.topRows(n) = p.B();
  b.row(n + 1) = testing::random_matrix(rng, 1, p.inputs());
  RealMatrix c = RealMatrix::Zero(p.outputs(), total);
  c.leftCols(n) = p.C();
  c.col(n) = testing::random_matrix(rng, p.outputs(), 1).col(0);
  // Random orthogonal change of coordinates hides the structure.
  const RealMatrix t = Eigen::HouseholderQR<RealMatrix>(testing::random_matrix(rng, total, total)).householderQ();
  return {t.transpose() * a * t, t.transpose() * b, c * t};
}

GTEST_TEST(KalmanTest, InflatedSystemsShareTheRegion) {
  std::mt19937_64 rng(7);
  int systems = 0;
  while (systems < 20) {
    const LtiSystem p = testing::random_system(rng, 3, 2);
    const KalmanDecomposition base = kalman_minimal(p);
    if (!base.is_minimal(p.states())) continue;
    ++systems;
    const LtiSystem big = inflate(p, rng);
    const KalmanDecomposition kd = kalman_minimal(big);
    EXPECT_TRUE(kd.stabilizable);
    EXPECT_TRUE(kd.detectable);
    EXPECT_EQ(kd.minimal_dim, p.states());
    EXPECT_EQ(kd.controllable_dim, p.states() + 1);
    const GainMatrix k = testing::random_matrix(rng, p.inputs(), p.outputs());
    for (int i = 0; i < 100; ++i) {
      const Complex s = testing::random_complex(rng, 4.0);
      const RegionPoint a = region_membership(p, k, s);
      const RegionPoint b = region_membership(big, k, s);
      const RegionPoint m = region_membership(*kd.minimal, k, s);
      if (std::abs(a.margin) > kBoundaryGuard && std::abs(b.margin) > kBoundaryGuard) {
        EXPECT_EQ(a.member, b.member);
        EXPECT_EQ(a.member, m.member);
      }
    }
  }
}

GTEST_TEST(KalmanTest, UnstableHiddenModeEmptiesTheRegion) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const LtiSystem p = testing::random_system(rng, 3, 2);
    const Eigen::Index n = p.states();
    RealMatrix a = RealMatrix::Zero(n + 1, n + 1);
    a.topLeftCorner(n, n) = p.A();
    a(n, n) = 0.3;
    RealMatrix b = RealMatrix::Zero(n + 1, p.inputs());
    b.topRows(n) = p.B();
    RealMatrix c = RealMatrix::Zero(p.outputs(), n + 1);
    c.leftCols(n) = p.C();
    c.col(n).setOnes();
    const LtiSystem bad(a, b, c);
    EXPECT_FALSE(kalman_minimal(bad).stabilizable);
    const GainMatrix k = testing::random_matrix(rng, p.inputs(), p.outputs());
    EXPECT_EQ(region_scan(bad, k, {-10, 10, -10, 10}, {25, 25}).member_count(), 0u);
  }
}

GTEST_TEST(KalmanTest, DecompositionAgreesWithPbh) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    // Plant hidden modes with random stability in random coordinates.
    const LtiSystem p = testing::random_system(rng, 3, 2);
    const Eigen::Index n = p.states();
    RealMatrix a = RealMatrix::Zero(n + 1, n + 1);
    a.topLeftCorner(n, n) = p.A();
    a(n, n) = coin(rng) ? 0.5 : -0.5;
    RealMatrix b = RealMatrix::Zero(n + 1, p.inputs());
    b.topRows(n) = p.B();
    RealMatrix c = RealMatrix::Zero(p.outputs(), n + 1);
    c.leftCols(n) = p.C();
    if (coin(rng)) c.col(n).setOnes();
    const RealMatrix t = Eigen::HouseholderQR<RealMatrix>(testing::random_matrix(rng, n + 1, n + 1)).householderQ();
    const RealMatrix at = t.transpose() * a * t, bt = t.transpose() * b, ct = c * t;
    EXPECT_EQ(stabilizable(at, bt), pbh_stabilizable(at, bt));
    EXPECT_EQ(detectable(at, ct), pbh_detectable(at, ct));
  }
}

GTEST_TEST(OfsTest, Example2OddCertified) {
  const LtiSystem p = testing::example2();
  const OfsResult r = ofs_check(p, 3);
  ASSERT_EQ(r.status, OfsStatus::kCertified);
  ASSERT_TRUE(r.certificate);
  EXPECT_EQ(r.certificate->kind, CertificateKind::kOddComplexPoint);
  EXPECT_TRUE(check_certificate(p, *r.certificate).valid);
  ASSERT_TRUE(r.certificate->graph);
  EXPECT_TRUE(check_network_sync(p, r.certificate->K, *r.certificate->graph).synchronizes);
  // The worked example's own certificate re-verifies too.
  Certificate known;
  known.kind = CertificateKind::kOddComplexPoint;
  known.K = scalar_gain(1.0);
  known.point = kEx2Point;
  known.N = 3;
  known.graph = WeightedDigraph::cycle(3, 1.0);
  EXPECT_TRUE(check_certificate(p, known).valid);
}

GTEST_TEST(OfsTest, Example2EvenNotOfs) {
  for (int n : {2, 4, 6}) EXPECT_EQ(ofs_check(testing::example2(), n).status, OfsStatus::kNotOfs) << n;
}

GTEST_TEST(OfsTest, UnstabilizableNotOfs) {
  const LtiSystem p(RealMatrix::Constant(1, 1, 1.0), RealMatrix::Zero(1, 1), RealMatrix::Ones(1, 1));
  for (int n = 2; n <= 5; ++n) EXPECT_EQ(ofs_check(p, n).status, OfsStatus::kNotOfs);
  EXPECT_THROW(ofs_check(p, 1), std::invalid_argument);
}

GTEST_TEST(OfsTest, EvenRealPointCertifiesEveryN) {
  const LtiSystem di = testing::double_integrator(1, 1);
  const OfsResult two = ofs_check(di, 2);
  ASSERT_EQ(two.status, OfsStatus::kCertified);
  for (int n = 2; n <= 8; ++n) {
    const OfsResult r = ofs_check(di, n);
    ASSERT_EQ(r.status, OfsStatus::kCertified) << n;
    EXPECT_TRUE(check_certificate(di, *r.certificate).valid) << n;
  }
}

GTEST_TEST(OfsTest, StateFeedbackCertifiesEveryN) {
  std::mt19937_64 rng(10);
  int systems = 0;
  while (systems < 10) {
    const int n = 2 + systems % 3;
    const RealMatrix a = testing::random_matrix(rng, n, n) + 0.5 * RealMatrix::Identity(n, n);
    const RealMatrix b = testing::random_matrix(rng, n, 1 + systems % 2);
    if (!stabilizable(a, b) || is_hurwitz(a).verdict) continue;
    ++systems;
    const LtiSystem p(a, b, RealMatrix::Identity(n, n));
    for (int agents = 2; agents <= 8; ++agents) {
      const OfsResult r = ofs_check(p, agents);
      ASSERT_EQ(r.status, OfsStatus::kCertified);
      EXPECT_TRUE(check_certificate(p, *r.certificate).valid);
      ASSERT_TRUE(r.certificate->graph);
      EXPECT_EQ(r.certificate->graph->node_count(), agents);
    }
  }
}

GTEST_TEST(OfsTest, HurwitzAgentsCertifiedWithZeroGain) {
  RealMatrix a(2, 2);
  a << -1, 3, 0, -2;
  const LtiSystem p(a, RealMatrix::Ones(2, 1), RealMatrix::Ones(1, 2));
  const OfsResult r = ofs_check(p, 4);
  ASSERT_EQ(r.status, OfsStatus::kCertified);
  EXPECT_TRUE(r.certificate->K.isZero());
}

GTEST_TEST(OfsTest, MimoSearchIsDeterministic) {
  std::mt19937_64 rng(11);
  const LtiSystem p(testing::random_matrix(rng, 3, 3) + RealMatrix::Identity(3, 3), testing::random_matrix(rng, 3, 2),
                    testing::random_matrix(rng, 2, 3));
  SearchConfig cfg;
  cfg.gain_draws = 500;
  cfg.odd_gain_draws = 6;
  cfg.s_grid = {31, 31};
  cfg.seed = 99;
  const OfsResult a = ofs_check(p, 3, cfg);
  ::setenv("SYNCREGION_THREADS", "1", 1);
  const OfsResult b = ofs_check(p, 3, cfg);
  ::unsetenv("SYNCREGION_THREADS");
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.certificate, b.certificate);
  if (a.certificate) { EXPECT_TRUE(check_certificate(p, *a.certificate).valid); }
}

GTEST_TEST(OfsTest, LyapunovAttachment) {
  SearchConfig cfg;
  cfg.attach_lyapunov = true;
  const OfsResult r = ofs_check(testing::example2(), 5, cfg);
  ASSERT_EQ(r.status, OfsStatus::kCertified);
  EXPECT_EQ(r.certificate->kind, CertificateKind::kLyapunov);
  ASSERT_TRUE(r.certificate->P);
  EXPECT_TRUE(check_certificate(testing::example2(), *r.certificate).valid);
}

GTEST_TEST(OfsTest, EvenNecessityAgainstSimulation) {
  // The odd-N system has no real point for any gain; candidate networks built from
  // real points never synchronize in simulation.
  const LtiSystem p = testing::example2();
  for (double k : {-2.0, -0.5, 0.5, 2.0}) {
    for (double s : {-3.0, -1.0, 0.5, 1.0, 3.0}) {
      const WeightedDigraph g = synthesize_graph_from_spectrum({s, 0.0}, 4);
      SimConfig cfg;
      cfg.T = 30.0;
      cfg.dt = 0.05;
      const Trajectory tr = simulate_network(p, scalar_gain(k), g, cfg);
      EXPECT_FALSE(sync_verdict_from_trajectory(tr).synchronized) << k << " " << s;
    }
  }
}

GTEST_TEST(CertificateTest, TamperingDetected) {
  const LtiSystem p = testing::example2();
  Certificate c;
  c.kind = CertificateKind::kOddComplexPoint;
  c.K = scalar_gain(1.0);
  c.point = kEx2Point;
  c.N = 3;
  EXPECT_TRUE(check_certificate(p, c).valid);

  Certificate wrong_point = c;
  wrong_point.point = {1.0, 0.0};
  EXPECT_FALSE(check_certificate(p, wrong_point).valid);

  Certificate even = c;
  even.kind = CertificateKind::kEvenRealPoint;
  EXPECT_FALSE(check_certificate(p, even).valid);

  Certificate bad_graph = c;
  bad_graph.graph = WeightedDigraph::complete(3, 1.0 / 3.0);
  EXPECT_FALSE(check_certificate(p, bad_graph).valid);

  Certificate bad_gain = c;
  bad_gain.K = GainMatrix::Ones(2, 2);
  EXPECT_FALSE(check_certificate(p, bad_gain).valid);

  Certificate no_p = c;
  no_p.kind = CertificateKind::kLyapunov;
  EXPECT_FALSE(check_certificate(p, no_p).valid);

  Certificate lyap = no_p;
  lyap.P = verify_lyapunov_certificate(p, c.K, c.point).P;
  EXPECT_TRUE(check_certificate(p, lyap).valid);
  lyap.P = *lyap.P * 2.0;
  EXPECT_FALSE(check_certificate(p, lyap).valid);
}

GTEST_TEST(LyapunovCertificateTest, Example2) {
  const LtiSystem p = testing::example2();
  const LyapunovCheck ok = verify_lyapunov_certificate(p, scalar_gain(1.0), kEx2Point);
  EXPECT_TRUE(ok.valid);
  EXPECT_LT(ok.residual, 1e-8);
  // Frozen from scipy's Bartels-Stewart solver.
  EXPECT_NEAR(ok.min_eigenvalue, 0.22911167114622627, 1e-8);
  EXPECT_NEAR(ok.P(0, 0).real(), 78.0, 1e-7);

  const LyapunovCheck bad = verify_lyapunov_certificate(p, scalar_gain(1.0), {1.0, 0.0});
  EXPECT_FALSE(bad.valid);
  EXPECT_FALSE(bad.reason.empty());
}

GTEST_TEST(LyapunovCertificateTest, Example2AgainstQuadrature) {
  const LtiSystem p = testing::example2();
  const LyapunovCheck ok = verify_lyapunov_certificate(p, scalar_gain(1.0), kEx2Point);
  const ComplexMatrix f = p.A().cast<Complex>() - kEx2Point * (p.B() * p.C()).cast<Complex>();
  const RealMatrix h = 2.0 * p.C().transpose() * p.C();
  const ComplexMatrix oracle = testing::lyapunov_by_quadrature(f, h.cast<Complex>(), kEx2Margin, 400000);
  EXPECT_LT((ok.P - oracle).norm(), 1e-4 * oracle.norm());
}

GTEST_TEST(LyapunovCertificateTest, ScalarDecoupled) {
  const LtiSystem p(-RealMatrix::Ones(1, 1), RealMatrix::Ones(1, 1), RealMatrix::Ones(1, 1));
  for (Complex s : {Complex(0.0), Complex(3.0, -2.0), Complex(-7.0, 1.0)}) {
    const LyapunovCheck r = verify_lyapunov_certificate(p, scalar_gain(0.0), s);
    EXPECT_TRUE(r.valid);
    EXPECT_NEAR(std::abs(r.P(0, 0) - Complex(0.5)), 0.0, 1e-14);
  }
}

GTEST_TEST(LyapunovCertificateTest, RequiresDetectability) {
  RealMatrix a(2, 2);
  a << 1, 0, 0, -1;
  RealMatrix c(1, 2);
  c << 0, 1;
  const LtiSystem p(a, RealMatrix::Ones(2, 1), c);
  EXPECT_THROW(verify_lyapunov_certificate(p, scalar_gain(1.0), 1.0), PreconditionError);
}

GTEST_TEST(LyapunovCertificateTest, ValidityEqualsMembership) {
  std::mt19937_64 rng(12);
  int checked = 0, valid = 0;
  while (checked < 150) {
    const LtiSystem p = testing::random_system(rng, 4, 2);
    if (!detectable(p.A(), p.C())) continue;
    const GainMatrix k = testing::random_matrix(rng, p.inputs(), p.outputs());
    const Complex s = testing::random_complex(rng, 3.0);
    const RegionPoint rp = region_membership(p, k, s);
    if (std::abs(rp.margin) <= 1e-3) continue;
    const LyapunovCheck lc = verify_lyapunov_certificate(p, k, s);
    EXPECT_EQ(lc.valid, rp.member) << lc.reason << " margin " << rp.margin;
    valid += lc.valid;
    ++checked;
  }
  EXPECT_GT(valid, 10);
}

}  // namespace
}  // namespace syncregion
