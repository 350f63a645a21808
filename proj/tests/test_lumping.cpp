#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace lumpcouple;
using lctest::q;
using lctest::qs;

namespace {

// Names "-n".."n" mapped to their absolute values "0".."n".
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

Chain<Rational> random_chain(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::vector<Rational>> dense(n, std::vector<Rational>(n));
  for (auto& row : dense) {
    long tot = 0;
    std::vector<long> w(n);
    for (auto& v : w) tot += (v = static_cast<long>(rng() % 4) + 1);
    for (std::size_t j = 0; j < n; ++j) row[j] = Rational(w[j], tot);
  }
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("s" + std::to_string(i));
  std::vector<Rational> init(n, Rational(1, static_cast<long>(n)));
  for (auto& r : dense)
    for (auto& v : r) v.canonicalize();
  return make_chain<Rational>(names, init, dense);
}

}  // namespace

TEST(ImageFdd, IdentityConstantAndBatcave) {
  auto ex = examples::batcave<Rational>();
  auto id = LumpingMap::identity(ex.x.space);
  EXPECT_EQ(image_fdd(ex.x, id, 3).entries, fdd(ex.x, 3).entries);
  auto konst = LumpingMap::constant(ex.x.space, "*");
  auto tc = image_fdd(ex.x, konst, 4);
  ASSERT_EQ(tc.entries.size(), 1u);
  EXPECT_EQ(tc.entries.begin()->second, q("1"));
  auto t1 = image_fdd(ex.x, ex.f, 1);
  EXPECT_EQ(t1.probability({ex.f.codomain.index("0"), ex.f.codomain.index("1")}), q("1"));
}

TEST(CompareImage, BatcaveReturnTimesAgree) {
  auto ex = examples::batcave<Rational>();
  EXPECT_EQ(fdd_deviation(image_fdd(ex.x, ex.f, 8), image_fdd(ex.y, ex.g, 8)).value, q("0"));
  EXPECT_EQ(compare_image_to_chain(ex.x, LumpingMap::identity(ex.x.space), ex.x, 6).value, q("0"));
}

TEST(CompareImage, WorkedExactInstance) {
  auto ex = examples::three_state_emc<Rational>();
  EXPECT_EQ(compare_image_to_chain(ex.x, ex.f, ex.z, 4).value, q("0"));
  EXPECT_EQ(compare_image_to_chain(ex.y, ex.g, ex.z, 4).value, q("0"));
}

TEST(CompareImage, CodomainMismatch) {
  auto ex = examples::three_state_emc<Rational>();
  auto other = make_chain<Rational>({"0", "7"}, qs({"1/3", "2/3"}), {qs({"0", "1"}), qs({"1/2", "1/2"})});
  EXPECT_EQ(lctest::error_kind_of([&] { compare_image_to_chain(ex.x, ex.f, other, 2); }),
            ErrorKind::CodomainMismatch);
}

TEST(ImageMarkov, BatcaveViolationAtTimeFour) {
  auto ex = examples::batcave<Rational>();
  auto rep = image_markov_test(ex.x, ex.f, 4);
  EXPECT_FALSE(rep.isMarkovUpTo);
  ASSERT_TRUE(rep.firstViolationTime.has_value());
  EXPECT_EQ(*rep.firstViolationTime, 4u);
  bool found = false;
  for (const auto& v : rep.violations)
    if (v.kind == "history" && v.history == std::vector<std::string>{"1", "1"} && v.target == "0") {
      EXPECT_EQ(v.conditional, q("1/4"));
      EXPECT_EQ(v.reference, q("3/8"));
      EXPECT_EQ(v.time, 4u);
      found = true;
    }
  EXPECT_TRUE(found);
  // Shortest offending history has length 2.
  ASSERT_NE(rep.counterexample(), nullptr);
  EXPECT_EQ(rep.counterexample()->history.size(), 2u);
  EXPECT_TRUE(image_markov_test(ex.x, ex.f, 3).violations.front().kind == "inhomogeneous");
}

TEST(ImageMarkov, IdentityMapNeverViolates) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    auto c = random_chain(rng, 3);
    EXPECT_TRUE(image_markov_test(c, LumpingMap::identity(c.space), 4).isMarkovUpTo);
  }
}

TEST(ImageMarkov, BiasedWalkAbsoluteValue) {
  auto sys = examples::biased_walk<Rational>(q("2/3"));
  auto ball = materialize(sys.x, 6);
  auto m = abs_map(ball.chain.space);
  EXPECT_TRUE(image_markov_test(ball.chain, m, 5).isMarkovUpTo);
}

TEST(Dynkin, IdentityConstantAndWorkedInstance) {
  auto ex = examples::three_state_emc<Rational>();
  auto id = dynkin_check(ex.x.kernel, LumpingMap::identity(ex.x.space));
  ASSERT_TRUE(id.isStrong);
  EXPECT_EQ(*id.imageKernel, ex.x.kernel);
  auto konst = dynkin_check(ex.x.kernel, LumpingMap::constant(ex.x.space, "*"));
  ASSERT_TRUE(konst.isStrong);
  EXPECT_EQ(konst.imageKernel->at(0, 0), q("1"));
  auto res = dynkin_check(ex.x.kernel, ex.f);
  EXPECT_FALSE(res.isStrong);
  ASSERT_TRUE(res.counterexample.has_value());
  EXPECT_EQ(res.counterexample->x1, "1");
  EXPECT_EQ(res.counterexample->x2, "2");
  EXPECT_NE(res.counterexample->sum1, res.counterexample->sum2);
}

TEST(ExactVerify, WorkedWitnessAndPerturbation) {
  auto ex = examples::three_state_emc<Rational>();
  auto w = examples::three_state_emc_witness_x<Rational>();
  EXPECT_TRUE(exact_lumping_verify(ex.x.kernel, ex.f, w).ok(0.0));
  auto bad = w;
  bad.nu[1] = qs({"0", "3/5", "2/5"});
  EXPECT_GT(exact_lumping_verify(ex.x.kernel, ex.f, bad).residual, 0);
  auto wy = examples::three_state_emc_witness_y<Rational>();
  EXPECT_TRUE(exact_lumping_verify(ex.y.kernel, ex.g, wy).ok(0.0));
}

TEST(ExactVerify, ShapeErrors) {
  auto ex = examples::three_state_emc<Rational>();
  auto w = examples::three_state_emc_witness_x<Rational>();
  w.nu[0] = qs({"1/2", "1/2", "0"});  // leaves its fibre
  EXPECT_EQ(lctest::error_kind_of([&] { exact_lumping_verify(ex.x.kernel, ex.f, w); }), ErrorKind::ShapeMismatch);
  auto w2 = examples::three_state_emc_witness_x<Rational>();
  w2.nu.pop_back();
  EXPECT_EQ(lctest::error_kind_of([&] { exact_lumping_verify(ex.x.kernel, ex.f, w2); }), ErrorKind::ShapeMismatch);
}

TEST(ExactVerify, BiasedWalkWindow) {
  const Rational p("2/3"), qq("1/3");
  auto sys = examples::biased_walk<Rational>(p);
  auto ball = materialize(sys.x, 6);
  auto m = abs_map(ball.chain.space);
  ExactLumpingWitness<Rational> w;
  w.nu.assign(7, std::vector<Rational>(ball.chain.size()));
  for (long n = 0; n <= 6; ++n) {
    Rational pn = 1, qn = 1;
    for (long i = 0; i < n; ++i) pn *= p, qn *= qq;
    if (n == 0) {
      w.nu[0][ball.chain.space.index("0")] = 1;
    } else {
      w.nu[n][ball.chain.space.index(std::to_string(n))] = pn / (pn + qn);
      w.nu[n][ball.chain.space.index(std::to_string(-n))] = qn / (pn + qn);
    }
  }
  auto zball = materialize(sys.z, 6);
  // Reorder the image kernel to the map's codomain order.
  Kernel<Rational> qk(7);
  for (std::size_t i = 0; i < zball.chain.size(); ++i) {
    Row<Rational> r;
    for (const auto& e : zball.chain.kernel.row(i)) r.push_back({m.codomain.index(zball.chain.space.name(e.to)), e.p});
    qk.set_row(m.codomain.index(zball.chain.space.name(i)), std::move(r));
  }
  w.imageKernel = qk;
  auto res = exact_lumping_verify(ball.chain.kernel, m, w, ball.chain.open);
  EXPECT_TRUE(res.ok(0.0)) << res.residual;
  EXPECT_GE(res.fibresChecked, 6u);
}

TEST(ExactDiscover, WorkedInstanceIdentityAndFailure) {
  auto ex = examples::three_state_emc<Rational>();
  auto d = exact_lumping_discover(ex.x, ex.f);
  ASSERT_TRUE(d.witness.has_value());
  EXPECT_EQ(d.witness->nu[1], qs({"0", "1/2", "1/2"}));
  EXPECT_EQ(d.witness->imageKernel, ex.z.kernel);
  EXPECT_TRUE(d.initialAdmissible);
  auto di = exact_lumping_discover(ex.y, LumpingMap::identity(ex.y.space));
  ASSERT_TRUE(di.witness.has_value());
  EXPECT_EQ(di.witness->imageKernel, ex.y.kernel);
  auto bat = examples::batcave<Rational>();
  auto db = exact_lumping_discover(bat.x, bat.f);
  EXPECT_FALSE(db.witness.has_value());
  EXPECT_GT(db.residual, 0);
}

TEST(LiftStrong, UnitFibresGiveACopy) {
  auto z = examples::three_state_emc<Rational>().z;
  auto l = lift_strong(z, {1, 1}, 9);
  EXPECT_EQ(l.chain.kernel, z.kernel);
  EXPECT_EQ(l.chain.initial, z.initial);
}

TEST(LiftStrong, OutputsAreStrongWithTheImageKernel) {
  auto z = examples::three_state_emc<Rational>().z;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto l = lift_strong(z, {1 + seed % 2, 2 + seed % 2}, seed);
    EXPECT_TRUE(validate_chain(l.chain).ok());
    auto d = dynkin_check(l.chain.kernel, l.map);
    ASSERT_TRUE(d.isStrong);
    EXPECT_EQ(*d.imageKernel, z.kernel);
  }
  auto l = lift_strong(z, {1, 2}, 3);
  EXPECT_EQ(compare_image_to_chain(l.chain, l.map, z, 5).value, q("0"));
}

// A strong lumping lumps weakly from any initial law.
TEST(LiftStrong, AnyInitialLawLumpsWeakly) {
  auto z = examples::three_state_emc<Rational>().z;
  auto l = lift_strong(z, {2, 3}, 11);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<Rational> a(l.chain.size());
    long tot = 0;
    std::vector<long> w(a.size());
    for (auto& v : w) tot += (v = static_cast<long>(rng() % 5) + 1);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = Rational(w[i], tot), a[i].canonicalize();
    Chain<Rational> c(l.chain.space, a, l.chain.kernel);
    Chain<Rational> img(z.space, pushforward(a, l.map), z.kernel);
    EXPECT_EQ(compare_image_to_chain(c, l.map, img, 4).value, q("0"));
  }
}

TEST(LiftExact, WitnessVerifiesAndImageMatches) {
  auto z = examples::three_state_emc<Rational>().z;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto l = lift_exact(z, {2, 2}, seed);
    EXPECT_TRUE(exact_lumping_verify(l.chain.kernel, l.map, l.witness).ok(0.0));
    EXPECT_EQ(admissibility_defect(l.chain.initial, l.map, l.witness.nu), q("0"));
    EXPECT_TRUE(image_markov_test(l.chain, l.map, 4).isMarkovUpTo);
    EXPECT_EQ(compare_image_to_chain(l.chain, l.map, z, 4).value, q("0"));
  }
}

// Strong under f iff the reversal lumps exactly with the stationary-fibre witness.
TEST(Duality, StrongIffReversalExact) {
  std::mt19937_64 rng(17);
  auto z = examples::three_state_emc<Rational>().z;
  for (int i = 0; i < 4; ++i) {
    auto l = lift_strong(z, {2, 2}, 100 + i, true);
    auto pi = stationary_distribution(l.chain.kernel);
    auto rev = time_reversal(l.chain.kernel, pi);
    auto nu = *stationary_fibre_family(pi, l.map);
    ExactLumpingWitness<Rational> w{nu, fibre_sum_kernel(rev, l.map, nu)};
    EXPECT_TRUE(dynkin_check(l.chain.kernel, l.map).isStrong);
    EXPECT_TRUE(exact_lumping_verify(rev, l.map, w).ok(0.0));
  }
  for (int i = 0; i < 4; ++i) {
    auto c = random_chain(rng, 4);
    auto m = LumpingMap::from_assignment(c.space, StateSpace({"u", "v"}), {0, 0, 1, 1});
    auto pi = stationary_distribution(c.kernel);
    auto rev = time_reversal(c.kernel, pi);
    auto nu = *stationary_fibre_family(pi, m);
    ExactLumpingWitness<Rational> w{nu, fibre_sum_kernel(rev, m, nu)};
    EXPECT_EQ(dynkin_check(c.kernel, m).isStrong, exact_lumping_verify(rev, m, w).ok(0.0));
  }
}

TEST(LumpingMapTest, Construction) {
  StateSpace d({"a", "b", "c"});
  EXPECT_EQ(lctest::error_kind_of([&] { LumpingMap::from_names(d, {{"a", "x"}, {"b", "y"}}); }),
            ErrorKind::InvalidInput);
  EXPECT_EQ(lctest::error_kind_of([&] {
              LumpingMap::from_names(d, {{"a", "x"}, {"b", "y"}, {"c", "y"}}, {"x", "y", "z"});
            }),
            ErrorKind::InvalidInput);
  EXPECT_EQ(
      lctest::error_kind_of([&] { LumpingMap::from_names(d, {{"a", "x"}, {"b", "y"}, {"c", "w"}}, {"x", "y"}); }),
      ErrorKind::CodomainMismatch);
  auto m = LumpingMap::from_names(d, {{"a", "x"}, {"b", "y"}, {"c", "y"}});
  EXPECT_EQ(m.fibres[1], (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(pushforward(qs({"1/4", "1/4", "1/2"}), m), qs({"1/4", "3/4"}));
}
