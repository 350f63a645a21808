#include <cmath>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace lumpcouple;
using lctest::q;
using lctest::qs;

namespace {

template <class T>
LumpingMap abs_map(const StateSpace& dom) {
  std::map<std::string, std::string> m;
  long n = 0;
  for (const auto& s : dom.names()) {
    m[s] = std::to_string(std::labs(std::stol(s)));
    n = std::max(n, std::labs(std::stol(s)));
  }
  std::vector<std::string> cod;
  for (long i = 0; i <= n; ++i) cod.push_back(std::to_string(i));
  return LumpingMap::from_names(dom, m, cod);
}

}  // namespace

TEST(Marginals, WorkedInstanceIsExact) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto rep = verify_marginals(c, ex.x, ex.y, 4);
  ASSERT_EQ(rep.checks.size(), 2u);
  for (const auto& ch : rep.checks) EXPECT_EQ(ch.deviation, "0") << ch.name;
}

TEST(Marginals, DiagonalCouplingOfAChainWithItself) {
  auto x = examples::three_state_emc<Rational>().x;
  auto id = LumpingMap::identity(x.space);
  auto c = build_coupling(x, x, x, id, id);
  for (std::size_t k = 0; k <= 6; ++k) EXPECT_TRUE(verify_marginals(c, x, x, k).ok()) << k;
}

TEST(Marginals, CorruptedKernelIsCaught) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto row = c.kernel.row(0);
  row[0].p = q("1/2");
  row[1].p = q("0");
  c.kernel.set_row(0, row);
  auto rep = verify_marginals(c, ex.x, ex.y, 3);
  EXPECT_FALSE(rep.ok());
  bool witnessed = false;
  for (const auto& ch : rep.checks)
    if (!ch.pass) {
      EXPECT_GT(ch.deviationValue, 0.0);
      witnessed = witnessed || !ch.witness.empty();
    }
  EXPECT_TRUE(witnessed);
}

TEST(ConditionalIndependence, StrongLiftsAgreeAtWindowEqualHorizon) {
  auto z = examples::three_state_emc<Rational>().z;
  auto lx = lift_strong(z, {2, 2}, 7);
  auto ly = lift_strong(z, {1, 3}, 8);
  auto c = build_coupling(lx.chain, ly.chain, z, lx.map, ly.map);
  EXPECT_EQ(verify_conditional_independence(c, lx.chain, ly.chain, z, lx.map, ly.map, 3, 3).deviation, q("0"));
}

// The deviation at window m is governed by phi_{m-k}; here phi is reached
// after one iteration, so it vanishes from m = k + 1 on.
TEST(ConditionalIndependence, WorkedInstanceDecreasesInWindow) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  std::vector<Rational> devs;
  for (std::size_t m = 2; m <= 8; ++m)
    devs.push_back(verify_conditional_independence(c, ex.x, ex.y, ex.z, ex.f, ex.g, 2, m).deviation);
  EXPECT_GT(devs.front(), 0);
  EXPECT_EQ(devs.front(), q("1/18"));
  for (std::size_t i = 1; i < devs.size(); ++i) EXPECT_LE(devs[i], devs[i - 1]) << i + 2;
  auto d12 = verify_conditional_independence(c, ex.x, ex.y, ex.z, ex.f, ex.g, 2, 12).deviation;
  EXPECT_LE(d12.get_d(), 1e-6);
}

TEST(ConditionalIndependence, AbsorbingImageWithinWindow) {
  // The image runs 2 -> 1 -> 0 and stays; any window of length 2 sees all of it.
  auto z = make_chain<Rational>({"2", "1", "0"}, qs({"1", "0", "0"}),
                                {qs({"0", "1", "0"}), qs({"0", "0", "1"}), qs({"0", "0", "1"})});
  auto x = make_chain<Rational>({"2a", "2b", "1a", "1b", "0a", "0b"}, qs({"1/3", "2/3", "0", "0", "0", "0"}),
                                {qs({"0", "0", "1/4", "3/4", "0", "0"}), qs({"0", "0", "1/2", "1/2", "0", "0"}),
                                 qs({"0", "0", "0", "0", "1", "0"}), qs({"0", "0", "0", "0", "1/3", "2/3"}),
                                 qs({"0", "0", "0", "0", "1/2", "1/2"}), qs({"0", "0", "0", "0", "1/2", "1/2"})});
  auto f = LumpingMap::from_names(x.space, {{"2a", "2"}, {"2b", "2"}, {"1a", "1"}, {"1b", "1"}, {"0a", "0"}, {"0b", "0"}},
                                  {"2", "1", "0"});
  auto c = build_coupling(x, x, z, f, f);
  for (std::size_t m = 3; m <= 5; ++m)
    EXPECT_EQ(verify_conditional_independence(c, x, x, z, f, f, 3, m).deviation, q("0")) << m;
}

TEST(ConditionalIndependence, WindowBelowHorizonIsRejected) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  EXPECT_EQ(lctest::error_kind_of([&] { verify_conditional_independence(c, ex.x, ex.y, ex.z, ex.f, ex.g, 3, 2); }),
            ErrorKind::InvalidInput);
}

TEST(StrongProjection, PassesForStrongLiftAndSkipsOtherwise) {
  auto ex = examples::three_state_emc<Rational>();
  auto l = lift_strong(ex.z, {3, 2}, 12);
  auto c = build_coupling(l.chain, ex.y, ex.z, l.map, ex.g);
  auto rep = verify_strong_projection(c, l.chain, l.map, ex.y);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.checks.size(), 4u);

  auto c83 = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto skip = verify_strong_projection(c83, ex.x, ex.f, ex.y);
  ASSERT_EQ(skip.checks.size(), 1u);
  EXPECT_TRUE(skip.checks[0].skipped);
  EXPECT_NE(skip.checks[0].note.find("not a strong lumping"), std::string::npos);

  auto id = LumpingMap::identity(ex.x.space);
  auto diag = build_coupling(ex.x, ex.x, ex.x, id, id);
  EXPECT_TRUE(verify_strong_projection(diag, ex.x, id, ex.x).ok());
}

TEST(ExactProjection, WorkedInstanceBothSides) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto rep = verify_exact_projection(c, examples::three_state_emc_witness_x<Rational>(), ex.f, ex.y, ex.g);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.find("exact lumping residual")->deviation, "0");
  auto rep2 = verify_exact_projection(c, examples::three_state_emc_witness_y<Rational>(), ex.g, ex.x, ex.f,
                                      WitnessSide::Second);
  EXPECT_TRUE(rep2.ok());
}

TEST(ExactProjection, WrongWitnessFails) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto w = examples::three_state_emc_witness_x<Rational>();
  w.nu[1] = qs({"0", "1/4", "3/4"});
  EXPECT_FALSE(verify_exact_projection(c, w, ex.f, ex.y, ex.g).ok());
}

TEST(ExactProjection, IdentityMaps) {
  auto x = examples::three_state_emc<Rational>().x;
  auto id = LumpingMap::identity(x.space);
  auto c = build_coupling(x, x, x, id, id);
  ExactLumpingWitness<Rational> w;
  w.nu.assign(3, std::vector<Rational>(3));
  for (int i = 0; i < 3; ++i) w.nu[i][i] = 1;
  w.imageKernel = x.kernel;
  EXPECT_TRUE(verify_exact_projection(c, w, id, x, id).ok());
}

TEST(ExactProjection, BiasedWalkInterior) {
  const double p = 2.0 / 3.0, qq = 1.0 / 3.0;
  auto sys = examples::biased_walk<double>(p);
  auto c = build_coupling(sys, 8);
  auto xb = materialize(sys.x, 10);
  auto fx = abs_map<double>(xb.chain.space);
  ExactLumpingWitness<double> w;
  w.nu.assign(fx.codomain.size(), std::vector<double>(xb.chain.size(), 0.0));
  for (std::size_t z = 0; z < fx.codomain.size(); ++z) {
    long n = static_cast<long>(z);
    if (n == 0) {
      w.nu[0][xb.chain.space.index("0")] = 1.0;
      continue;
    }
    double pn = std::pow(p, n), qn = std::pow(qq, n);
    w.nu[z][xb.chain.space.index(std::to_string(n))] = pn / (pn + qn);
    w.nu[z][xb.chain.space.index(std::to_string(-n))] = qn / (pn + qn);
  }
  auto rep = verify_exact_projection(c, w, fx, xb.chain, fx, WitnessSide::First, 1e-9);
  EXPECT_TRUE(rep.find("exact lumping residual")->pass) << rep.find("exact lumping residual")->deviation;
  EXPECT_TRUE(rep.find("initial law is the witness mixture")->pass);
}

TEST(Stationarity, WorkedInstanceStationaryCouplingPasses) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_stationary_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto rep = verify_stationarity(c);
  EXPECT_TRUE(rep.ok());
  EXPECT_FALSE(rep.find("detailed balance")->skipped);
}

TEST(Stationarity, CorruptedReverseKernelFailsDetailedBalance) {
  auto ex = examples::three_bit_shift<Rational>();
  auto c = build_stationary_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  ASSERT_TRUE(c.reverseKernel.has_value());
  *c.reverseKernel = Kernel<Rational>::identity(c.size());
  auto rep = verify_stationarity(c);
  EXPECT_TRUE(rep.find("pi P = pi")->pass);
  EXPECT_FALSE(rep.find("detailed balance")->pass);
}

TEST(MonteCarlo, BiasedWalkMarginalsWithinThreeSigma) {
  const double p = 2.0 / 3.0;
  auto sys = examples::biased_walk<double>(p);
  auto c = build_coupling(sys, 21);
  auto xb = materialize(sys.x, 21).chain;
  auto rep = monte_carlo_check(c, {xb, xb}, 100000, 20, 2026);
  EXPECT_TRUE(rep.ok());
  // Oracle: X_t is a sum of t independent +-1 steps with mean t(p-q), variance 4pqt.
  auto chain = c.chain();
  const std::size_t n = 100000;
  std::mt19937_64 rng(99);
  std::vector<double> sum(21, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    auto traj = sample_trajectory(chain, 20, rng);
    for (std::size_t t = 0; t <= 20; ++t) sum[t] += std::stod(c.components[traj[t]][0]);
  }
  for (std::size_t t : {5u, 10u, 20u}) {
    double mean = sum[t] / n, want = t * (2 * p - 1), sd = std::sqrt(4 * p * (1 - p) * t / n);
    EXPECT_LE(std::fabs(mean - want), 3 * sd) << t;
  }
}

TEST(MonteCarlo, DeterministicChainHasExactFrequencies) {
  auto x = make_chain<Rational>({"a", "b", "c"}, qs({"1", "0", "0"}),
                                {qs({"0", "1", "0"}), qs({"0", "0", "1"}), qs({"1", "0", "0"})});
  auto id = LumpingMap::identity(x.space);
  auto c = build_coupling(x, x, x, id, id);
  auto rep = monte_carlo_check(c, {x, x}, 500, 6, 1);
  EXPECT_TRUE(rep.ok());
  for (const auto& ch : rep.checks) EXPECT_EQ(ch.pValue.value_or(0.0), 1.0) << ch.name;
}

TEST(MonteCarlo, CorruptedKernelIsFlagged) {
  auto ex = examples::three_state_emc<double>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto row = c.kernel.row(c.space.index("1|1'"));
  for (auto& e : row) e.p = c.space.name(e.to) == "1|2'" ? 0.75 : 0.25;
  c.kernel.set_row(c.space.index("1|1'"), row);
  auto rep = monte_carlo_check(c, {ex.x, ex.y}, 20000, 6, 5);
  EXPECT_FALSE(rep.ok());
  double minP = 1.0;
  for (const auto& ch : rep.checks) minP = std::min(minP, ch.pValue.value_or(1.0));
  EXPECT_LT(minP, 1e-3);
}

TEST(JointLaw, ClosedFormMatchesForAllConstructions) {
  auto ex = examples::three_state_emc<Rational>();
  auto h = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto r = verify_joint_law(h, ex.x, ex.y, ex.z, ex.f, ex.g, 4);
  EXPECT_EQ(r.deviation, q("0"));
  EXPECT_GT(r.trajectories, 0u);
  auto s = build_stationary_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  EXPECT_EQ(verify_joint_law(s, ex.x, ex.y, ex.z, ex.f, ex.g, 4).deviation, q("0"));
  auto sh = examples::three_bit_shift<Rational>();
  auto cs = build_coupling(sh.x, sh.y, sh.z, sh.f, sh.g);
  EXPECT_EQ(verify_joint_law(cs, sh.x, sh.y, sh.z, sh.f, sh.g, 3).deviation, q("0"));
}

TEST(JointLaw, CorruptedKernelDeviates) {
  auto ex = examples::three_state_emc<Rational>();
  auto h = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  auto row = h.kernel.row(1);
  row.front().p += q("1/8");
  row.back().p -= q("1/8");
  h.kernel.set_row(1, row);
  auto r = verify_joint_law(h, ex.x, ex.y, ex.z, ex.f, ex.g, 3);
  EXPECT_GT(r.deviation, 0);
  EXPECT_FALSE(r.witness.empty());
}

TEST(PhiInvariants, HoldOnExamplesAndCatchViolations) {
  auto ex = examples::three_state_emc<Rational>();
  auto c = build_coupling(ex.x, ex.y, ex.z, ex.f, ex.g);
  EXPECT_TRUE(check_phi_invariants(c, ex.x, ex.y, ex.z, ex.f, 30).ok());
  auto sh = examples::three_bit_shift<Rational>();
  auto cs = build_coupling(sh.x, sh.y, sh.z, sh.f, sh.g);
  EXPECT_TRUE(check_phi_invariants(cs, sh.x, sh.y, sh.z, sh.f, 30).ok());
  // A zero that does not propagate, and an oversized value.
  auto bad = c;
  bad.phiDelta[c.delta.index("0|0'")] = 0;
  EXPECT_FALSE(check_phi_invariants(bad, ex.x, ex.y, ex.z, ex.f, 30).ok());
  auto big = c;
  big.phiDelta[c.delta.index("1|1'")] = 100;
  EXPECT_FALSE(check_phi_invariants(big, ex.x, ex.y, ex.z, ex.f, 30).ok());
}
