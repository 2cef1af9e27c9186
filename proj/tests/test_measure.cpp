#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "adscreen/adscreen.hpp"
#include "support/measure_draws.hpp"

using namespace adscreen;

namespace {

const TypeSpace kEx3(0, 1, -1, 0);
const TypeSpace kEx45(1, 2, -1, 0);

MeasureDecomposition uniform_measure(const TypeSpace& s, double k) {
    return MeasureDecomposition(DensityModel::uniform(s), AdPaymentSchedule::constant(k));
}

double numeric_mass(const MeasureDecomposition& m, const RegionUnion& r) {
    return mu_of_region(m, r, {}, MassMode::numeric).total();
}

}  // namespace

TEST(Measure, Example4Densities) {
    const auto m = uniform_measure(kEx45, 1.5);
    ASSERT_TRUE(m.closed_form());
    const auto& c = *m.closed_form();
    EXPECT_NEAR(c.bottom, -0.5, 1e-14);
    EXPECT_NEAR(c.top, 1.5, 1e-14);
    EXPECT_NEAR(c.left, -1.0, 1e-14);
    EXPECT_NEAR(c.right, 2.0, 1e-14);
    EXPECT_NEAR(c.interior, -3.0, 1e-14);
    EXPECT_EQ(m.atom().x1, 1.0);
    EXPECT_EQ(m.atom().x2, -1.0);
}

TEST(Measure, Example3Densities) {
    const auto m = uniform_measure(kEx3, 0.0);
    const auto& c = *m.closed_form();
    EXPECT_NEAR(c.bottom, 1.0, 1e-14);
    EXPECT_NEAR(c.right, 1.0, 1e-14);
    EXPECT_NEAR(c.top, 0.0, 1e-14);
    EXPECT_NEAR(c.left, 0.0, 1e-14);
    EXPECT_NEAR(c.interior, -3.0, 1e-14);
}

TEST(Measure, Example5Densities) {
    const auto m = uniform_measure(kEx45, 0.5);
    const auto& c = *m.closed_form();
    EXPECT_NEAR(c.bottom, 0.5, 1e-14);
    EXPECT_NEAR(c.top, 0.5, 1e-14);
    EXPECT_NEAR(c.left, -1.0, 1e-14);
    EXPECT_NEAR(c.right, 2.0, 1e-14);
    EXPECT_NEAR(c.interior, -3.0, 1e-14);
}

TEST(Measure, NeedsPaymentDerivative) {
    const auto k = AdPaymentSchedule::general([](Point x) { return 1.0 + x.x1; });
    EXPECT_THROW(MeasureDecomposition(DensityModel::uniform(kEx3), k), DomainError);
}

// mu(Z) for Z = {x1 + x2 <= p}: 1 - 1.5p - 1.5p^2 on Example 4.
TEST(Measure, Example4ZeroMassOfZ) {
    const auto m = uniform_measure(kEx45, 1.5);
    const double p = 0.4574;
    const RegionUnion z = Region(kEx45, {HalfPlane::le(Axis::sum, p)});
    EXPECT_NEAR(numeric_mass(m, z), 1 - 1.5 * p - 1.5 * p * p, 1e-10);
    EXPECT_LT(std::abs(numeric_mass(m, z)), 1e-3);
    for (double q : {0.1, 0.3, 0.7, 0.95}) {
        const RegionUnion zq = Region(kEx45, {HalfPlane::le(Axis::sum, q)});
        EXPECT_NEAR(numeric_mass(m, zq), 1 - 1.5 * q - 1.5 * q * q, 1e-10) << q;
    }
    const double exact = (-3 + std::sqrt(33.0)) / 6;
    EXPECT_LT(std::abs(numeric_mass(m, Region(kEx45, {HalfPlane::le(Axis::sum, exact)}))), 1e-12);
}

// Lower-right orthant masses on Example 3: 2x1 - 2x2 + 3x1x2 - 1 for x1 > 0.
TEST(Measure, Example3Orthant) {
    const auto m = uniform_measure(kEx3, 0.0);
    for (double x1 : {0.1, 0.5, 0.77, 1.0})
        for (double x2 : {-1.0, -0.6, -0.25, 0.0}) {
            const double v = numeric_mass(m, orthant(whole(kEx3), {x1, x2}, Orientation::lower_right));
            EXPECT_NEAR(v, 2 * x1 - 2 * x2 + 3 * x1 * x2 - 1, 1e-10) << x1 << "," << x2;
        }
    // At x1 = 0 the orthant picks up the atom.
    EXPECT_NEAR(numeric_mass(m, orthant(whole(kEx3), {0.0, -0.5}, Orientation::lower_right)), 1.0, 1e-10);
}

// Upper-right orthants clipped to Y on Example 4 at the exact price p.
TEST(Measure, Example4OrthantCases) {
    const auto m = uniform_measure(kEx45, 1.5);
    const double p = (-3 + std::sqrt(33.0)) / 6;
    const RegionUnion y = partition_single_bundle(kEx45, p).y;
    auto mass = [&](Point x) { return numeric_mass(m, orthant(y, x, Orientation::upper_right)); };
    for (Point x : {Point{1.5, -0.5}, Point{1.9, -0.9}, Point{1.2, -0.1}})
        EXPECT_NEAR(mass(x), -3 * x.x1 * x.x2 - 1.5 * x.x1 + 4 * x.x2 + 3, 1e-10);
    for (double x2 : {p - 1, -0.3, 0.0}) EXPECT_NEAR(mass({1.0, x2}), 2 * x2 + 1.5, 1e-10);
    for (double x2 : {-0.9, -0.7, -0.55}) {
        const double L = p - 1 - x2;
        EXPECT_NEAR(mass({1.0, x2}), 2 * x2 + 1.5 + 1.5 * L * L + L, 1e-10) << x2;
    }
}

TEST(Measure, Example3Marginal) {
    const auto m = uniform_measure(kEx3, 0.0);
    for (double x1 : {0.0, 0.25, 0.5}) EXPECT_NEAR(marginal_M(m, whole(kEx3), x1, {}, MassMode::numeric), 1 - 2 * x1, 1e-10);
    EXPECT_THROW(marginal_M(m, whole(kEx3), 1.5), DomainError);
}

TEST(Measure, Example3HingeTail) {
    const auto m = uniform_measure(kEx3, 0.0);
    for (double t : {0.0, 0.25, 0.5})
        EXPECT_NEAR(hinge_tail_integral(m, whole(kEx3), t, 0.5, {}, MassMode::numeric), 0.25 - t + t * t, 1e-10);
    EXPECT_THROW(hinge_tail_integral(m, whole(kEx3), 0.6, 0.5), DomainError);
}

// Ad-tier clip Z = {x1 <= p_g, x1 + x2 <= p_sb}; with p_sb = 0.8 the
// marginal is 1.5x1^2 - 4.9x1 + 3.6.
TEST(Measure, Example5Marginal) {
    const auto m = uniform_measure(kEx45, 0.5);
    const auto z = partition_ad_tiered(kEx45, 1.12, 0.8).z;
    for (double x1 : {1.0, 1.05, 1.12})
        EXPECT_NEAR(marginal_M(m, z, x1, {}, MassMode::numeric), 1.5 * x1 * x1 - 4.9 * x1 + 3.6, 1e-10) << x1;
}

// Tail over [t, p_g] is 0.5p^3 - 2.45p^2 + 3.6p - 0.5t^3 + 2.45t^2 - 3.6t.
TEST(Measure, Example5HingeTailPolynomial) {
    const auto m = uniform_measure(kEx45, 0.5);
    const double pg = 1.12;
    const auto z = partition_ad_tiered(kEx45, pg, 0.8).z;
    const double c = 0.5 * pg * pg * pg - 2.45 * pg * pg + 3.6 * pg;
    for (double t : {1.0, 1.04, 1.1}) {
        const double v = hinge_tail_integral(m, z, t, pg, {}, MassMode::numeric);
        EXPECT_NEAR(v, c - 0.5 * t * t * t + 2.45 * t * t - 3.6 * t, 1e-10) << t;
    }
    EXPECT_NEAR(c, 1.661184, 1e-12);
}

TEST(Measure, ClosedFormMatchesNumeric) {
    for (double k : {0.0, 0.5, 1.5}) {
        const auto m = uniform_measure(kEx45, k);
        const std::vector<RegionUnion> regions{
            whole(kEx45),
            partition_ad_tiered(kEx45, 1.3, 0.7).z,
            partition_ad_tiered(kEx45, 1.3, 0.7).w,
            partition_ad_tiered(kEx45, 1.3, 0.7).y,
            partition_single_bundle(kEx45, 0.45).y,
            orthant(partition_ad_tiered(kEx45, 1.3, 0.7).y, {1.1, -0.4}, Orientation::upper_right),
        };
        for (const auto& r : regions)
            EXPECT_NEAR(mu_of_region(m, r).total(), numeric_mass(m, r), 1e-8) << "k=" << k;
    }
}

TEST(Measure, IbpRejectsKinkedTestFunction) {
    TestFunction u{[](Point x) { return std::max(0.0, x.x1 - 0.5); }, {}, false, "hinge"};
    EXPECT_THROW(ibp_residual(DensityModel::uniform(kEx3), AdPaymentSchedule::constant(0), u), DomainError);
}

TEST(Measure, IbpLinearExample5) {
    TestFunction u{[](Point x) { return x.x1 + x.x2; }, [](Point) { return Vec2{1.0, 1.0}; }, true, "sum"};
    EXPECT_LT(ibp_residual(DensityModel::uniform(kEx45), AdPaymentSchedule::constant(0.5), u), 1e-6);
}

TEST(Measure, IbpSmoothedHingeExample3) {
    const double eps = 1e-3;
    TestFunction u{[=](Point x) {
                       const double z = (x.x1 - 0.5) / eps;
                       return z > 40 ? x.x1 - 0.5 : eps * std::log1p(std::exp(z));
                   },
                   [=](Point x) { return Vec2{1.0 / (1.0 + std::exp(-(x.x1 - 0.5) / eps)), 0.0}; }, true,
                   "softplus hinge"};
    EXPECT_LT(ibp_residual(DensityModel::uniform(kEx3), AdPaymentSchedule::constant(0), u), 1e-5);
}


// Fifty randomized (family, parameters, payment, test function) draws.
TEST(MeasureProperty, TotalMassZeroAndIntegrationByParts) {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 50; ++i) {
        const draws::Draw d = draws::random_draw(rng, i);
        const MeasureDecomposition m(d.density, d.kappa);
        EXPECT_LT(std::abs(mu_of_region(m, whole(d.density.space())).total()), 1e-8) << d.label;
        EXPECT_LT(std::abs(numeric_mass(m, whole(d.density.space()))), 1e-8) << d.label;
        EXPECT_LT(ibp_residual(d.density, d.kappa, d.u), 1e-5) << d.label;
    }
}

// Constants integrate to zero; only the atom sees u(corner).
TEST(MeasureProperty, ConstantTestFunctionIntegratesToZero) {
    const MeasureDecomposition m(DensityModel::log_linear(kEx45, 0.4, -0.3), AdPaymentSchedule::constant(0.7));
    EXPECT_NEAR(integrate_measure(m, whole(kEx45), [](Point) { return 2.5; }), 0.0, 1e-9);
}
