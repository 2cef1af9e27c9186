#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adscreen/adscreen.hpp"

using namespace adscreen;

namespace {

const TypeSpace kUnitSquare(0, 1, -1, 0);
const TypeSpace kEx45(1, 2, -1, 0);

DiscreteInstance example1() { return DiscreteInstance(kUnitSquare, {{{0.5, -0.2}, 0.5}, {{1.0, -0.6}, 0.5}}); }
DiscreteInstance example2() { return DiscreteInstance(kUnitSquare, {{{0.5, 0.0}, 0.5}, {{1.0, -1.0}, 0.5}}); }

const Mechanism kEx1AdTiered({{1.0, 1.0, 0.3}, {1.0, 0.0, 0.9}});

}  // namespace

TEST(BestResponse, Example1Choices) {
    const ChoiceOutcome a = best_response(kEx1AdTiered, {0.5, -0.2});
    EXPECT_EQ(kEx1AdTiered[a.item_index].q2, 1.0);
    EXPECT_NEAR(a.utility, 0.0, 1e-15);
    const ChoiceOutcome b = best_response(kEx1AdTiered, {1.0, -0.6});
    EXPECT_EQ(kEx1AdTiered[b.item_index].q2, 0.0);
    EXPECT_EQ(kEx1AdTiered[b.item_index].q1, 1.0);
    EXPECT_NEAR(b.utility, 0.1, 1e-15);
}

TEST(BestResponse, TiesGoToHigherPrice) {
    const Mechanism m({{1.0, 0.0, 0.5}});
    const ChoiceOutcome c = best_response(m, {0.5, -0.3});
    EXPECT_EQ(c.item_index, 1u);
    EXPECT_EQ(c.payment, 0.5);
}

TEST(IndirectUtility, GoodOnly) {
    const auto m = CanonicalMechanism::good_only(kUnitSquare, 0.5);
    EXPECT_NEAR(canonical_utility(m, {0.8, -0.4}), 0.3, 1e-15);
    EXPECT_EQ(canonical_utility(m, {0.3, -0.4}), 0.0);
}

TEST(RevenueDiscrete, Example1Menus) {
    const auto inst = example1();
    const auto k = AdPaymentSchedule::constant(0.1);
    EXPECT_NEAR(revenue_discrete(kEx1AdTiered, inst, k), 0.65, 1e-12);
    EXPECT_NEAR(revenue_discrete(Mechanism({{1.0, 0.0, 0.5}}), inst, k), 0.5, 1e-12);
    EXPECT_NEAR(revenue_discrete(Mechanism({{1.0, 1.0, 0.3}}), inst, k), 0.4, 1e-12);
}

TEST(RevenueDiscrete, Example2FullSurplusMenu) {
    const Mechanism m({{1.0, 1.0, 0.5}, {1.0, 0.0, 1.0}});
    EXPECT_NEAR(revenue_discrete(m, example2(), AdPaymentSchedule::constant(0)), 0.75, 1e-12);
    std::vector<Point> types;
    const DiscreteInstance inst = example2();
    for (const auto& p : inst.points()) types.push_back(p.x);
    EXPECT_TRUE(check_ic_ir(m, types).empty());
}

// Fixed menus: ad-tiered 0.6 + 0.5k, single-bundle 0.3 + k.
TEST(RevenueDiscrete, Example1CrossingAtPointSix) {
    const auto inst = example1();
    const Mechanism sb({{1.0, 1.0, 0.3}});
    auto diff = [&](double k) {
        const auto kk = AdPaymentSchedule::constant(k);
        return revenue_discrete(kEx1AdTiered, inst, kk) - revenue_discrete(sb, inst, kk);
    };
    for (double k : {0.0, 0.2, 0.55}) EXPECT_GT(diff(k), 0.0);
    for (double k : {0.65, 0.9}) EXPECT_LT(diff(k), 0.0);
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 80; ++i) (diff(0.5 * (lo + hi)) > 0 ? lo : hi) = 0.5 * (lo + hi);
    EXPECT_NEAR(0.5 * (lo + hi), 0.6, 1e-9);
}

TEST(RevenueContinuous, Example3) {
    const auto m = CanonicalMechanism::good_only(kUnitSquare, 0.5);
    EXPECT_NEAR(revenue_continuous(m, DensityModel::uniform(kUnitSquare), AdPaymentSchedule::constant(0)), 0.25, 1e-12);
}

TEST(RevenueContinuous, Example4) {
    const double p = 0.4574;
    const auto m = CanonicalMechanism::single_bundle(kEx45, p);
    EXPECT_NEAR(revenue_continuous(m, DensityModel::uniform(kEx45), AdPaymentSchedule::constant(1.5)),
                (p + 1.5) * (1 - p * p / 2), 1e-12);
}

// Revenue equals the integral of the indirect utility against mu.
TEST(RevenueIdentity, UniformExamples) {
    struct Case {
        TypeSpace s;
        double k;
        CanonicalMechanism m;
    };
    const std::vector<Case> cases{
        {kUnitSquare, 0.0, CanonicalMechanism::good_only(kUnitSquare, 0.5)},
        {kEx45, 1.5, CanonicalMechanism::single_bundle(kEx45, (-3 + std::sqrt(33.0)) / 6)},
        {kEx45, 0.5, CanonicalMechanism::ad_tiered(kEx45, 1.11731306718449, 0.79833476679307)},
        {kEx45, 0.5, CanonicalMechanism::ad_tiered(kEx45, 1.4, 0.6)},
        {kEx45, 0.2, CanonicalMechanism::good_only(kEx45, 1.7)},
    };
    for (const Case& c : cases) {
        const auto d = DensityModel::uniform(c.s);
        const auto k = AdPaymentSchedule::constant(c.k);
        EXPECT_NEAR(revenue_continuous(c.m, d, k), utility_against_measure(c.m, MeasureDecomposition(d, k)), 1e-5)
            << family_name(c.m.family());
    }
}

TEST(RevenueIdentity, NonUniformDensity) {
    const auto d = DensityModel::log_linear(kEx45, 0.6, -0.4);
    const auto k = AdPaymentSchedule::constant(0.8);
    const auto m = CanonicalMechanism::ad_tiered(kEx45, 1.3, 0.7);
    EXPECT_NEAR(revenue_continuous(m, d, k), utility_against_measure(m, MeasureDecomposition(d, k)), 1e-5);
}

TEST(IcIr, DirectPairwiseChecks) {
    std::vector<Point> types;
    const DiscreteInstance inst = example1();
    for (const auto& p : inst.points()) types.push_back(p.x);
    EXPECT_TRUE(check_ic_ir(Mechanism({{1.0, 0.0, 0.2}, {1.0, 1.0, 0.1}}), types).empty());
    // Ad-free item forced on (0.5, -0.2): utility -0.4 versus 0 from the bundle.
    const auto v = check_ic_ir(kEx1AdTiered, types, std::vector<std::size_t>{2, 2});
    ASSERT_FALSE(v.empty());
    bool saw_ir = false, saw_ic = false;
    for (const Violation& x : v) {
        EXPECT_GT(x.gain, 0.0);
        saw_ir = saw_ir || (x.kind == Violation::Kind::ir && x.x.x1 == 0.5);
        saw_ic = saw_ic || x.kind == Violation::Kind::ic;
    }
    EXPECT_TRUE(saw_ir);
    EXPECT_FALSE(saw_ic);
    EXPECT_THROW(check_ic_ir(kEx1AdTiered, types, std::vector<std::size_t>{0}), DomainError);
}

// Best responses are IC by construction on random menus and samples.
TEST(IcIr, BestResponseNeverViolates) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int draw = 0; draw < 20; ++draw) {
        std::vector<MenuItem> items;
        for (int i = 0; i < 4; ++i) items.push_back({u(rng), u(rng), u(rng)});
        const Mechanism m(items);
        std::vector<Point> sample;
        for (int i = 0; i < 40; ++i) sample.push_back({u(rng), -u(rng)});
        EXPECT_TRUE(check_ic_ir(m, sample, 1e-12).empty());
    }
}
