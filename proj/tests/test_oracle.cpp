#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adscreen/adscreen.hpp"
#include "support/brute_force.hpp"

using namespace adscreen;

namespace {

const TypeSpace kUnitSquare(0, 1, -1, 0);
const TypeSpace kEx45(1, 2, -1, 0);

DiscreteInstance example1() { return DiscreteInstance(kUnitSquare, {{{0.5, -0.2}, 0.5}, {{1.0, -0.6}, 0.5}}); }
DiscreteInstance example2() { return DiscreteInstance(kUnitSquare, {{{0.5, 0.0}, 0.5}, {{1.0, -1.0}, 0.5}}); }

std::vector<brute::Type> brute_types(const DiscreteInstance& inst, double k) {
    std::vector<brute::Type> v;
    for (const WeightedPoint& wp : inst.points()) v.push_back({wp.x.x1, wp.x.x2, wp.probability, k});
    return v;
}

DiscreteInstance random_instance(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> w(n);
    double total = 0.0;
    for (double& x : w) total += (x = 0.2 + u(rng));
    std::vector<WeightedPoint> pts;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = i + 1 == n ? 1.0 - acc : w[i] / total;
        acc += p;
        pts.push_back({{u(rng), -u(rng)}, p});
    }
    return DiscreteInstance(kUnitSquare, pts);
}

}  // namespace

TEST(Simplex, SmallOptimum) {
    // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
    DenseSimplex lp({{1, 1}, {1, 3}, {1, 0}}, {4, 6, 3}, {3, 2});
    const SimplexResult r = lp.solve();
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_NEAR(r.value, 11.0, 1e-12);
    EXPECT_NEAR(r.x[0], 3.0, 1e-12);
    EXPECT_NEAR(r.x[1], 1.0, 1e-12);
}

TEST(Simplex, InfeasibleAndUnbounded) {
    EXPECT_EQ(DenseSimplex({{1.0}}, {-1.0}, {1.0}).solve().status, LPStatus::infeasible);
    EXPECT_EQ(DenseSimplex({{-1.0, 1.0}}, {1.0}, {1.0, 0.0}).solve().status, LPStatus::unbounded);
}

TEST(Simplex, NegativeRightHandSideNeedsPhaseOne) {
    // max -x - y  s.t. -x - y <= -2, x <= 5  ->  -2
    const SimplexResult r = DenseSimplex({{-1, -1}, {1, 0}}, {-2, 5}, {-1, -1}).solve();
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_NEAR(r.value, -2.0, 1e-12);
}

TEST(Simplex, DegenerateCycleExample) {
    // Beale's cycling example; the optimum is 0.05.
    const SimplexResult r =
        DenseSimplex({{0.25, -60, -1.0 / 25, 9}, {0.5, -90, -1.0 / 50, 3}, {0, 0, 1, 0}}, {0, 0, 1}, {0.75, -150, 0.02, -6})
            .solve();
    ASSERT_EQ(r.status, LPStatus::optimal);
    EXPECT_NEAR(r.value, 0.05, 1e-12);
}

TEST(BuildLp, ConstraintCounts) {
    const LPProblem p = build_lp(example1(), AdPaymentSchedule::constant(0.1));
    EXPECT_EQ(p.num_variables(), 6u);
    EXPECT_EQ(p.count(LPProblem::RowKind::ic), 2u);
    EXPECT_EQ(p.count(LPProblem::RowKind::ir), 2u);
    EXPECT_EQ(p.count(LPProblem::RowKind::box), 4u);
}

TEST(LpOracle, Example2FullSurplus) {
    const LPSolution s = lp_oracle(example2(), AdPaymentSchedule::constant(0));
    ASSERT_EQ(s.status, LPStatus::optimal);
    EXPECT_NEAR(s.value, 0.75, 1e-9);
    EXPECT_LT(s.certificate, 1e-9);
    EXPECT_NEAR(brute::best_deterministic_revenue(brute_types(example2(), 0)), 0.75, 1e-12);
}

TEST(LpOracle, Example1AtLeastAdTiered) {
    const LPSolution s = lp_oracle(example1(), AdPaymentSchedule::constant(0.1));
    ASSERT_EQ(s.status, LPStatus::optimal);
    EXPECT_GE(s.value, 0.65 - 1e-9);
    EXPECT_LT(s.certificate, 1e-9);
    EXPECT_NEAR(s.value, brute::best_deterministic_revenue(brute_types(example1(), 0.1)), 1e-6);
}

TEST(LpOracle, MatchesVertexEnumeration) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 1);
    for (int draw = 0; draw < 30; ++draw) {
        const std::size_t n = 1 + draw % 3;
        const double k = 1.2 * u(rng);
        const DiscreteInstance inst = random_instance(rng, n);
        const LPSolution s = lp_oracle(inst, AdPaymentSchedule::constant(k));
        ASSERT_EQ(s.status, LPStatus::optimal);
        EXPECT_LT(s.certificate, 1e-9);
        EXPECT_NEAR(s.value, brute::vertex_enumeration_revenue(brute_types(inst, k)), 1e-6) << "draw " << draw;
        EXPECT_GE(s.value, brute::best_deterministic_revenue(brute_types(inst, k)) - 1e-9);
    }
}

// Two types where a lottery over the good beats every deterministic menu.
TEST(LpOracle, LotteryBeatsDeterministicMenus) {
    const double k = 0.5930606336;
    const DiscreteInstance inst(kUnitSquare,
                                {{{0.08786182083, -0.6083421661}, 0.751763826}, {{0.4051028737, -0.8124416478}, 0.248236174}});
    const LPSolution s = lp_oracle(inst, AdPaymentSchedule::constant(k));
    const double det = brute::best_deterministic_revenue(brute_types(inst, k));
    EXPECT_GT(s.value - det, 1e-3);
    EXPECT_GT(s.assignment[0].q1, 0.1);
    EXPECT_LT(s.assignment[0].q1, 0.9);
}

TEST(LpOracle, SandwichedByMenusAndSurplus) {
    const auto d = DensityModel::uniform(kEx45);
    const auto k = AdPaymentSchedule::constant(0.5);
    const DiscreteInstance inst = discretize(d, 4, 4);
    const LPSolution s = lp_oracle(inst, k);
    double surplus = 0.0;
    for (const WeightedPoint& wp : inst.points())
        surplus += wp.probability * std::max({0.0, wp.x.x1, wp.x.x1 + wp.x.x2 + 0.5});
    for (MechanismFamily f : {MechanismFamily::good_only, MechanismFamily::single_bundle, MechanismFamily::ad_tiered})
        EXPECT_GE(s.value + 1e-9, menu_grid_search(inst, k, f, candidate_prices(inst, k, f)).revenue);
    EXPECT_LE(s.value, surplus + 1e-9);
}

TEST(LpOracle, SolutionIsIcIr) {
    const DiscreteInstance inst = discretize(DensityModel::uniform(kUnitSquare), 5, 5);
    const LPProblem p = build_lp(inst, AdPaymentSchedule::constant(0));
    const LPSolution s = lp_solve(p);
    ASSERT_EQ(s.status, LPStatus::optimal);
    EXPECT_LT(s.certificate, 1e-9);
    auto util = [](const TypeAssignment& a, Point x) { return a.q1 * x.x1 + a.q2 * x.x2 - a.t; };
    for (std::size_t i = 0; i < p.types.size(); ++i) {
        const double own = util(s.assignment[i], p.types[i]);
        EXPECT_GE(own, -1e-9);
        for (std::size_t j = 0; j < p.types.size(); ++j) EXPECT_LE(util(s.assignment[j], p.types[i]), own + 1e-9);
    }
}

TEST(CandidatePrices, ContainIndifferencePoints) {
    const auto c = candidate_prices(example1(), AdPaymentSchedule::constant(0.1), MechanismFamily::good_only);
    EXPECT_EQ(c, (std::vector<double>{0.5, 1.0}));
    const auto r = menu_grid_search(example1(), AdPaymentSchedule::constant(0.1), MechanismFamily::ad_tiered,
                                    candidate_prices(example1(), AdPaymentSchedule::constant(0.1),
                                                     MechanismFamily::ad_tiered));
    EXPECT_NEAR(r.revenue, 0.65, 1e-12);
}

TEST(OptimalityGap, Example4TableShape) {
    const auto d = DensityModel::uniform(kEx45);
    const auto k = AdPaymentSchedule::constant(1.5);
    const auto mech = CanonicalMechanism::single_bundle(kEx45, (-3 + std::sqrt(33.0)) / 6);
    const GapTable t = optimality_gap(mech, d, k, {{4, 4}, {6, 6}});
    ASSERT_EQ(t.rows.size(), 2u);
    for (const GapRow& r : t.rows) {
        EXPECT_GE(r.gap, -1e-9);
        EXPECT_LE(r.mechanism_revenue, r.family_best + 1e-12);
        EXPECT_LE(r.family_best, r.lp_value + 1e-9);
        EXPECT_LT(r.certificate, 1e-9);
        EXPECT_LT(r.relative_gap, 0.03);
    }
    EXPECT_TRUE(t.weakly_decreasing);
}
