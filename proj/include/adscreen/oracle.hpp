#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "adscreen/domain.hpp"
#include "adscreen/mechanisms.hpp"
#include "adscreen/parallel.hpp"
#include "adscreen/simplex.hpp"

namespace adscreen {

/// Seller's program on a discrete instance. Variables per type i are
/// (q1_i, q2_i, t_i) at indices 3i, 3i+1, 3i+2; the t_i are free.
struct LPProblem {
    enum class RowKind { ic, ir, box };
    struct Row {
        RowKind kind = RowKind::ic;
        std::size_t i = 0;  // type whose constraint this is
        std::size_t j = 0;  // deviation target for IC rows
        std::vector<std::pair<std::size_t, double>> coeffs;
        double rhs = 0.0;  // sum coeffs * v <= rhs
    };

    std::vector<Point> types;
    std::vector<double> weights;
    std::vector<double> kappa;
    std::vector<double> objective;  // maximize objective . v
    std::vector<Row> rows;

    std::size_t num_types() const { return types.size(); }
    std::size_t num_variables() const { return 3 * types.size(); }
    std::size_t count(RowKind k) const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [&](const Row& r) { return r.kind == k; }));
    }
    double kappa_max() const { return kappa.empty() ? 0.0 : *std::max_element(kappa.begin(), kappa.end()); }
};

struct TypeAssignment {
    double q1 = 0.0;
    double q2 = 0.0;
    double t = 0.0;
};

struct LPSolution {
    LPStatus status = LPStatus::infeasible;
    double value = 0.0;
    std::vector<TypeAssignment> assignment;
    double certificate = 0.0;  // max constraint violation
    long pivots = 0;
};

inline LPProblem build_lp(const DiscreteInstance& inst, const AdPaymentSchedule& kappa) {
    LPProblem p;
    const std::size_t n = inst.size();
    for (const WeightedPoint& wp : inst.points()) {
        p.types.push_back(wp.x);
        p.weights.push_back(wp.probability);
        p.kappa.push_back(kappa.value(wp.x));
    }
    p.objective.assign(3 * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        p.objective[3 * i + 1] = p.weights[i] * p.kappa[i];
        p.objective[3 * i + 2] = p.weights[i];
    }
    using RK = LPProblem::RowKind;
    // IC: x_i.q_j - t_j - (x_i.q_i - t_i) <= 0
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = p.types[i];
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            p.rows.push_back({RK::ic, i, j,
                              {{3 * j, x.x1}, {3 * j + 1, x.x2}, {3 * j + 2, -1.0},
                               {3 * i, -x.x1}, {3 * i + 1, -x.x2}, {3 * i + 2, 1.0}},
                              0.0});
        }
    }
    // IR: t_i - x_i.q_i <= 0
    for (std::size_t i = 0; i < n; ++i) {
        const Point x = p.types[i];
        p.rows.push_back({RK::ir, i, i, {{3 * i, -x.x1}, {3 * i + 1, -x.x2}, {3 * i + 2, 1.0}}, 0.0});
    }
    // Box: q <= 1 (q >= 0 is variable nonnegativity)
    for (std::size_t i = 0; i < n; ++i) {
        p.rows.push_back({RK::box, i, i, {{3 * i, 1.0}}, 1.0});
        p.rows.push_back({RK::box, i, i, {{3 * i + 1, 1.0}}, 1.0});
    }
    return p;
}

/// Max violation of the program's constraints (including 0 <= q) at v.
inline double lp_violation(const LPProblem& p, const std::vector<double>& v) {
    double worst = 0.0;
    for (const LPProblem::Row& r : p.rows) {
        double lhs = 0.0;
        for (const auto& [k, a] : r.coeffs) lhs += a * v[k];
        worst = std::max(worst, lhs - r.rhs);
    }
    for (std::size_t i = 0; i < p.num_types(); ++i) worst = std::max({worst, -v[3 * i], -v[3 * i + 1]});
    return worst;
}

/// Optimal mechanism of the program by the dense two-phase simplex. The
/// tableau works in the columns (q1_i, q2_i, u_i) with u_i = x_i.q_i - t_i the
/// type's utility: IR becomes u_i >= 0, IC_ij reads
/// u_j + (x_i - x_j).q_j - u_i <= 0, and the origin is a feasible basis.
inline LPSolution lp_solve(const LPProblem& p) {
    const std::size_t n = p.num_types();
    using RK = LPProblem::RowKind;
    std::vector<std::vector<double>> A;
    std::vector<double> b, c(3 * n, 0.0);
    A.reserve(p.rows.size());
    for (const LPProblem::Row& row : p.rows) {
        if (row.kind == RK::ir) continue;
        std::vector<double> a(3 * n, 0.0);
        for (const auto& [k, coef] : row.coeffs) {
            const std::size_t i = k / 3;
            if (k % 3 == 2) {
                // t_i = x_i.q_i - u_i
                a[3 * i] += coef * p.types[i].x1;
                a[3 * i + 1] += coef * p.types[i].x2;
                a[3 * i + 2] -= coef;
            } else {
                a[k] += coef;
            }
        }
        A.push_back(std::move(a));
        b.push_back(row.rhs);
    }
    for (std::size_t k = 0; k < p.objective.size(); ++k) {
        const std::size_t i = k / 3;
        if (k % 3 == 2) {
            c[3 * i] += p.objective[k] * p.types[i].x1;
            c[3 * i + 1] += p.objective[k] * p.types[i].x2;
            c[3 * i + 2] -= p.objective[k];
        } else {
            c[k] += p.objective[k];
        }
    }
    DenseSimplex lp(A, b, c);
    const SimplexResult res = lp.solve();

    LPSolution out;
    out.status = res.status;
    out.pivots = res.pivots;
    if (res.status != LPStatus::optimal) return out;
    std::vector<double> v(3 * n);
    out.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[3 * i] = res.x[3 * i];
        v[3 * i + 1] = res.x[3 * i + 1];
        v[3 * i + 2] = p.types[i].x1 * v[3 * i] + p.types[i].x2 * v[3 * i + 1] - res.x[3 * i + 2];
        out.assignment[i] = {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
    }
    out.value = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) out.value += p.objective[k] * v[k];
    out.certificate = lp_violation(p, v);
    if (out.value < -1e-9) throw NumericError("lp_solve: negative optimum; the default mechanism earns 0");
    return out;
}

/// Convenience: discretized program solved directly.
inline LPSolution lp_oracle(const DiscreteInstance& inst, const AdPaymentSchedule& kappa) {
    return lp_solve(build_lp(inst, kappa));
}

// ---------------------------------------------------------------------------
// Canonical menus on discrete instances

/// Posted-price menu of a family on an unrestricted price pair.
inline Mechanism family_menu(MechanismFamily f, double p_g, double p_sb) {
    switch (f) {
        case MechanismFamily::good_only: return Mechanism({{1.0, 0.0, p_g}});
        case MechanismFamily::single_bundle: return Mechanism({{1.0, 1.0, p_sb}});
        case MechanismFamily::ad_tiered: return Mechanism({{1.0, 0.0, p_g}, {1.0, 1.0, p_sb}});
    }
    return Mechanism();
}

struct GridSearchResult {
    std::optional<double> p_g;
    std::optional<double> p_sb;
    double revenue = 0.0;
};

/// Exhaustive search over a price grid. Ad-tiered pairs range over grid x grid;
/// ties go to the lowest price (p_g first).
inline GridSearchResult menu_grid_search(const DiscreteInstance& inst, const AdPaymentSchedule& kappa,
                                         MechanismFamily family, std::vector<double> grid) {
    if (grid.empty()) throw DomainError("menu_grid_search: empty price grid");
    std::sort(grid.begin(), grid.end());
    GridSearchResult best;
    bool have = false;
    auto consider = [&](double pg, double psb) {
        const double rev = revenue_discrete(family_menu(family, pg, psb), inst, kappa);
        if (!have || rev > best.revenue + 1e-12) {
            have = true;
            best.revenue = rev;
            best.p_g = family == MechanismFamily::single_bundle ? std::nullopt : std::optional<double>(pg);
            best.p_sb = family == MechanismFamily::good_only ? std::nullopt : std::optional<double>(psb);
        }
    };
    if (family == MechanismFamily::ad_tiered) {
        for (double pg : grid)
            for (double psb : grid) consider(pg, psb);
    } else {
        for (double p : grid) consider(p, p);
    }
    return best;
}

/// Prices at which some type is indifferent: the only candidates for an
/// optimal posted price on a finite instance.
inline std::vector<double> candidate_prices(const DiscreteInstance& inst, const AdPaymentSchedule& kappa,
                                            MechanismFamily family) {
    std::vector<double> v;
    for (const WeightedPoint& wp : inst.points()) {
        if (family != MechanismFamily::single_bundle) v.push_back(wp.x.x1);
        if (family != MechanismFamily::good_only) v.push_back(wp.x.x1 + wp.x.x2);
    }
    (void)kappa;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), v.end());
    if (family == MechanismFamily::ad_tiered) {
        // A type can also be indifferent between the two tiers: p_g - p_sb = -x2.
        std::vector<double> extra;
        for (double a : v)
            for (const WeightedPoint& wp : inst.points()) {
                extra.push_back(a - wp.x.x2);
                extra.push_back(a + wp.x.x2);
            }
        v.insert(v.end(), extra.begin(), extra.end());
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), v.end());
    }
    return v;
}

struct GapRow {
    int n1 = 0;
    int n2 = 0;
    double lp_value = 0.0;
    double mechanism_revenue = 0.0;
    double gap = 0.0;
    double relative_gap = 0.0;
    double family_best = 0.0;  // best revenue of the same family with prices re-optimized on the instance
    double certificate = 0.0;
    long pivots = 0;
};

struct GapTable {
    std::vector<GapRow> rows;
    bool weakly_decreasing = true;
};

/// LP optimum against the mechanism's revenue on discretized instances.
inline GapTable optimality_gap(const CanonicalMechanism& mech, const DensityModel& d, const AdPaymentSchedule& kappa,
                               const std::vector<std::pair<int, int>>& grids, const QuadratureSpec& q = {}) {
    GapTable table;
    table.rows.resize(grids.size());
    parallel_for(grids.size(), [&](std::size_t g) {
        const auto [n1, n2] = grids[g];
        const DiscreteInstance inst = discretize(d, n1, n2, q);
        const LPSolution sol = lp_oracle(inst, kappa);
        if (sol.status != LPStatus::optimal)
            throw NumericError(std::string("optimality_gap: LP is ") + lp_status_name(sol.status));
        GapRow row;
        row.n1 = n1;
        row.n2 = n2;
        row.lp_value = sol.value;
        row.mechanism_revenue = revenue_discrete(mech.menu(), inst, kappa);
        row.gap = row.lp_value - row.mechanism_revenue;
        row.relative_gap = row.lp_value > 0.0 ? row.gap / row.lp_value : 0.0;
        const auto cands = candidate_prices(inst, kappa, mech.family());
        row.family_best = menu_grid_search(inst, kappa, mech.family(), cands).revenue;
        row.certificate = sol.certificate;
        row.pivots = sol.pivots;
        table.rows[g] = row;
    });
    for (std::size_t g = 1; g < table.rows.size(); ++g)
        if (table.rows[g].gap > table.rows[g - 1].gap + 1e-12) table.weakly_decreasing = false;
    return table;
}

}  // namespace adscreen
