#include <gtest/gtest.h>

#include <cmath>

#include "adscreen/adscreen.hpp"

using namespace adscreen;

namespace {

const TypeSpace kEx3(0, 1, -1, 0);
const TypeSpace kEx45(1, 2, -1, 0);
const double kEx4Price = (-3 + std::sqrt(33.0)) / 6;
const double kEx5Pg = 1.11731306718449, kEx5Psb = 0.79833476679307;

Status status_of(const ConditionReport& r, const std::string& id) {
    const ConditionItem* it = r.find(id);
    EXPECT_NE(it, nullptr) << id;
    return it ? it->status : Status::fail;
}

}  // namespace

TEST(Verdict, Rules) {
    using S = Status;
    using R = Role;
    auto item = [](R r, S s) { return ConditionItem{"x", "x", r, s, 0.0, std::nullopt, ""}; };
    EXPECT_EQ(verdict_of({item(R::necessary, S::pass), item(R::sufficient, S::boundary)}), Verdict::sufficient_passed);
    EXPECT_EQ(verdict_of({item(R::necessary, S::fail), item(R::sufficient, S::pass)}), Verdict::necessary_failed);
    EXPECT_EQ(verdict_of({item(R::necessary, S::pass), item(R::sufficient, S::fail)}), Verdict::necessary_passed_only);
}

TEST(GoodOnly, Example3Sufficient) {
    const auto r = check_good_only(DensityModel::uniform(kEx3), AdPaymentSchedule::constant(0), 0.5);
    EXPECT_EQ(r.verdict, Verdict::sufficient_passed);
    EXPECT_EQ(status_of(r, "i"), Status::pass);
    EXPECT_EQ(status_of(r, "ii"), Status::boundary);  // k = |x2_hi| = 0
    EXPECT_EQ(status_of(r, "iii"), Status::pass);
    EXPECT_EQ(status_of(r, "iv"), Status::pass);
    EXPECT_EQ(status_of(r, "mm"), Status::pass);
    // min over t of 0.25 - t + t^2 on [0, 0.5] is 0 at t = 0.5
    EXPECT_NEAR(r.find("iii")->witness, 0.0, 1e-9);
}

TEST(GoodOnly, WrongPriceFailsZeroMass) {
    const auto r = check_good_only(DensityModel::uniform(kEx3), AdPaymentSchedule::constant(0), 0.7);
    EXPECT_EQ(r.verdict, Verdict::necessary_failed);
    EXPECT_EQ(status_of(r, "i"), Status::fail);
}

TEST(GoodOnly, PaymentAboveBoundFails) {
    const TypeSpace s(0, 1, -1, -0.2);
    const auto r = check_good_only(DensityModel::uniform(s), AdPaymentSchedule::constant(0.5), 0.5);
    EXPECT_EQ(status_of(r, "ii"), Status::fail);
    EXPECT_EQ(r.verdict, Verdict::necessary_failed);
}

TEST(SingleBundle, Example4Sufficient) {
    const auto r = check_single_bundle(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(1.5), kEx4Price);
    EXPECT_EQ(r.verdict, Verdict::sufficient_passed);
    EXPECT_EQ(status_of(r, "iii"), Status::pass);
}

TEST(SingleBundle, Example4LowPaymentFailsBound) {
    const auto r = check_single_bundle(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(0.5), kEx4Price);
    EXPECT_EQ(status_of(r, "ii"), Status::fail);
    EXPECT_EQ(r.verdict, Verdict::necessary_failed);
}

TEST(AdTiered, Example5Sufficient) {
    const auto r = check_ad_tiered(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(0.5), kEx5Pg, kEx5Psb);
    EXPECT_EQ(r.verdict, Verdict::sufficient_passed);
    for (const char* id : {"i", "ii", "iii", "iv", "mm"}) EXPECT_EQ(status_of(r, id), Status::pass) << id;
}

TEST(AdTiered, Example5WrongPgFailsZeroMass) {
    const auto r = check_ad_tiered(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(0.5), 1.3, kEx5Psb);
    EXPECT_EQ(status_of(r, "i"), Status::fail);
    EXPECT_GT(std::abs(r.find("i")->witness), 1e-3);
}

TEST(Conditions, GeneralPaymentRejected) {
    const auto k = AdPaymentSchedule::general([](Point) { return 0.5; }, [](Point) { return 0.0; });
    EXPECT_THROW(check_good_only(DensityModel::uniform(kEx3), k, 0.5), DomainError);
}

// Lower-right orthant masses in W on Example 3 are nonnegative; the minimum
// over W of 2x1 - 2x2 + 3x1x2 - 1 is 0 at (0.5, -1) and at (1, 0).
TEST(Orthant, Example3Minimum) {
    const MeasureDecomposition m(DensityModel::uniform(kEx3), AdPaymentSchedule::constant(0));
    const OrthantResult r = orthant_min(m, partition_good_only(kEx3, 0.5).w, Orientation::lower_right);
    EXPECT_NEAR(r.min_mass, 0.0, 1e-9);
}

TEST(MM, ClosedForms) {
    EXPECT_EQ(check_mm(DensityModel::uniform(kEx3), AdPaymentSchedule::constant(0)).min_value, 3.0);
    // 3 - aA - bB + kb with A = 1, B = 1
    const MMResult r = check_mm(DensityModel::log_linear(kEx3, 1.0, 0.5), AdPaymentSchedule::constant(0.4));
    EXPECT_TRUE(r.closed_form);
    EXPECT_NEAR(r.min_value, 3 - 1.0 - 0.5 + 0.4 * 0.5, 1e-12);
    const MMResult bad = check_mm(DensityModel::log_linear(kEx45, 4.0, -2.0), AdPaymentSchedule::constant(1.0));
    EXPECT_FALSE(bad.pass);
}

TEST(MM, GridMatchesClosedForm) {
    const auto d = DensityModel::log_linear(kEx45, 0.7, -0.6);
    const auto k = AdPaymentSchedule::constant(0.3);
    EXPECT_NEAR(check_mm_grid(d, k).min_value, check_mm(d, k).min_value, 1e-9);
}

TEST(Probe, NoneForSufficientExamples) {
    const auto k0 = AdPaymentSchedule::constant(0);
    EXPECT_FALSE(adversarial_probe(MeasureDecomposition(DensityModel::uniform(kEx3), k0),
                                   CanonicalMechanism::good_only(kEx3, 0.5)));
    EXPECT_FALSE(adversarial_probe(MeasureDecomposition(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(1.5)),
                                   CanonicalMechanism::single_bundle(kEx45, kEx4Price)));
    EXPECT_FALSE(adversarial_probe(MeasureDecomposition(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(0.5)),
                                   CanonicalMechanism::ad_tiered(kEx45, kEx5Pg, kEx5Psb)));
}

TEST(Probe, WitnessForSingleBundleAtLowPayment) {
    const MeasureDecomposition m(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(0.5));
    const auto w = adversarial_probe(m, CanonicalMechanism::single_bundle(kEx45, kEx4Price));
    ASSERT_TRUE(w);
    EXPECT_GT(w->value, 1e-6);
    EXPECT_FALSE(w->region.empty());
}

TEST(Regime, ThresholdsOnSweepGrid) {
    const TypeSpace s(0.5, 1.5, -0.8, -0.2);
    for (int i = 0; i <= 24; ++i) {
        const double k = 0.05 * i;
        const RegimeLabel l = classify_regime_uniform(s, k);
        const MechanismFamily expect = k <= 0.2 + 1e-12   ? MechanismFamily::good_only
                                       : k < 0.8 - 1e-12 ? MechanismFamily::ad_tiered
                                                         : MechanismFamily::single_bundle;
        EXPECT_EQ(l.primary(), expect) << "k=" << k;
    }
    EXPECT_TRUE(classify_regime_uniform(s, 0.8).ad_tiered);
    EXPECT_THROW(classify_regime_uniform(s, -0.1), DomainError);
    EXPECT_THROW(classify_regime_uniform(DensityModel::log_linear(s, 0.1, 0.3), 0.5), DomainError);
}

TEST(EdgeSigns, ConstantPaymentMatchesRegime) {
    const TypeSpace s(0.5, 1.5, -0.8, -0.2);
    const auto d = DensityModel::uniform(s);
    EXPECT_TRUE(check_general_kappa_edges(d, AdPaymentSchedule::constant(0.1), MechanismFamily::good_only).pass);
    EXPECT_TRUE(check_general_kappa_edges(d, AdPaymentSchedule::constant(0.5), MechanismFamily::ad_tiered).pass);
    EXPECT_TRUE(check_general_kappa_edges(d, AdPaymentSchedule::constant(1.0), MechanismFamily::single_bundle).pass);
    EXPECT_FALSE(check_general_kappa_edges(d, AdPaymentSchedule::constant(0.5), MechanismFamily::good_only).pass);
}

TEST(EdgeSigns, VaryingPayment) {
    const TypeSpace s(0.5, 1.5, -0.8, -0.2);
    // kappa between |x2_hi| and |x2_lo| everywhere: top density positive, bottom positive.
    const auto k = AdPaymentSchedule::general([](Point x) { return 0.4 + 0.2 * (x.x1 - 0.5); },
                                              [](Point) { return 0.0; });
    const auto rep = check_general_kappa_edges(DensityModel::uniform(s), k, MechanismFamily::ad_tiered);
    EXPECT_TRUE(rep.pass);
    ASSERT_EQ(rep.checks.size(), 2u);
}
