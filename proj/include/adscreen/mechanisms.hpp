#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "adscreen/domain.hpp"
#include "adscreen/measure.hpp"
#include "adscreen/parallel.hpp"
#include "adscreen/quadrature.hpp"

namespace adscreen {

struct ChoiceOutcome {
    std::size_t item_index = 0;
    double utility = 0.0;
    double payment = 0.0;
    double ad_allocated = 0.0;
};

/// Utilities within this distance count as indifferent.
inline constexpr double kTieTolerance = 1e-12;

inline double item_utility(const MenuItem& it, Point x) { return x.x1 * it.q1 + x.x2 * it.q2 - it.price; }

/// Utility-maximizing item. Among indifferent items the buyer takes the one
/// with the highest price (lowest index on further ties).
inline ChoiceOutcome best_response(const Mechanism& menu, Point x) {
    std::size_t best = 0;
    double best_u = item_utility(menu[0], x);
    for (std::size_t i = 1; i < menu.size(); ++i) {
        const double u = item_utility(menu[i], x);
        if (u > best_u + kTieTolerance) {
            best = i;
            best_u = u;
        } else if (u >= best_u - kTieTolerance && menu[i].price > menu[best].price) {
            best = i;
            best_u = std::max(best_u, u);
        }
    }
    const MenuItem& it = menu[best];
    return {best, item_utility(it, x), it.price, it.q2};
}

inline double indirect_utility(const Mechanism& menu, Point x) {
    double u = 0.0;
    for (const MenuItem& it : menu.items()) u = std::max(u, item_utility(it, x));
    return u;
}

/// Item of the canonical mechanism assigned to x by its region partition.
inline MenuItem canonical_item(const CanonicalMechanism& mech, Point x) {
    const RegionPartition p = mech.regions();
    if (p.w.contains(x)) return mech.w_item();
    if (p.y.contains(x)) return mech.y_item();
    return CanonicalMechanism::z_item();
}

/// Expected buyer payment plus third-party payment, integrated region by region.
inline double revenue_continuous(const CanonicalMechanism& mech, const DensityModel& d,
                                 const AdPaymentSchedule& kappa, const QuadratureSpec& q = {}) {
    const RegionPartition parts = mech.regions();
    auto region_revenue = [&](const RegionUnion& r, const MenuItem& it) {
        double total = 0.0;
        for (const Region& piece : r.pieces()) {
            for (const Trapezoid& t : piece.decompose()) {
                total += integrate_trapezoid(
                    [&](double a, double b) {
                        const Point x{a, b};
                        return (it.price + it.q2 * kappa.value(x)) * d(x);
                    },
                    t, q, "revenue");
            }
        }
        return total;
    };
    return region_revenue(parts.w, mech.w_item()) + region_revenue(parts.y, mech.y_item());
}

/// Indirect utility of a canonical mechanism as a test function, smooth on each region.
inline double canonical_utility(const CanonicalMechanism& mech, Point x) { return indirect_utility(mech.menu(), x); }

/// Integral of the indirect utility against mu, region by region.
inline double utility_against_measure(const CanonicalMechanism& mech, const MeasureDecomposition& m,
                                      const QuadratureSpec& q = {}) {
    const RegionPartition parts = mech.regions();
    auto piece = [&](const RegionUnion& r, const MenuItem& it) {
        return integrate_measure(m, r, [&](Point x) { return item_utility(it, x); }, q);
    };
    return piece(parts.w, mech.w_item()) + piece(parts.y, mech.y_item());
}

inline double revenue_discrete(const Mechanism& menu, const DiscreteInstance& inst, const AdPaymentSchedule& kappa) {
    double total = 0.0;
    for (const WeightedPoint& wp : inst.points()) {
        const ChoiceOutcome c = best_response(menu, wp.x);
        total += wp.probability * (c.payment + kappa.value(wp.x) * c.ad_allocated);
    }
    return total;
}

struct Violation {
    enum class Kind { ic, ir };
    Kind kind = Kind::ic;
    Point x;
    Point x_prime;  // equal to x for IR violations
    double gain = 0.0;
};

/// IC and IR violations when each sampled type receives the given item.
inline std::vector<Violation> check_ic_ir(const Mechanism& menu, const std::vector<Point>& sample,
                                          const std::vector<std::size_t>& assignment, double tol = 1e-12) {
    if (assignment.size() != sample.size()) throw DomainError("check_ic_ir: one assigned item per sampled type");
    std::vector<Violation> out;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        if (assignment[i] >= menu.size()) throw DomainError("check_ic_ir: assigned item index out of range");
        const double own = item_utility(menu[assignment[i]], sample[i]);
        if (own < -tol) out.push_back({Violation::Kind::ir, sample[i], sample[i], -own});
        for (std::size_t j = 0; j < sample.size(); ++j) {
            if (j == i) continue;
            const double gain = item_utility(menu[assignment[j]], sample[i]) - own;
            if (gain > tol) out.push_back({Violation::Kind::ic, sample[i], sample[j], gain});
        }
    }
    return out;
}

/// IC and IR violations with best-response assignments.
inline std::vector<Violation> check_ic_ir(const Mechanism& menu, const std::vector<Point>& sample, double tol = 1e-12) {
    std::vector<std::size_t> assignment(sample.size());
    parallel_for(sample.size(), [&](std::size_t i) { assignment[i] = best_response(menu, sample[i]).item_index; });
    return check_ic_ir(menu, sample, assignment, tol);
}

}  // namespace adscreen
