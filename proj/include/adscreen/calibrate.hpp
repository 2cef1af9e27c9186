#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "adscreen/domain.hpp"
#include "adscreen/errors.hpp"
#include "adscreen/measure.hpp"
#include "adscreen/parallel.hpp"

namespace adscreen {

struct BracketStep {
    double lo = 0.0;
    double hi = 0.0;
};

struct PriceRoot {
    double p_g = 0.0;
    double p_sb = 0.0;
    double residual = 0.0;  // max |F|
    int iterations = 0;
};

struct CalibrationResult {
    MechanismFamily family = MechanismFamily::good_only;
    std::optional<double> p_g;
    std::optional<double> p_sb;
    std::vector<std::pair<std::string, double>> residuals;  // |mu(region)| per equation
    int iterations = 0;
    std::vector<BracketStep> bracket;  // bisection trace
    std::vector<PriceRoot> roots;      // all distinct feasible roots (two-price case)
    std::vector<std::string> notes;

    CanonicalMechanism mechanism(const TypeSpace& s) const {
        switch (family) {
            case MechanismFamily::good_only: return CanonicalMechanism::good_only(s, *p_g);
            case MechanismFamily::single_bundle: return CanonicalMechanism::single_bundle(s, *p_sb);
            case MechanismFamily::ad_tiered: return CanonicalMechanism::ad_tiered(s, *p_g, *p_sb);
        }
        throw DomainError("unknown mechanism family");
    }
};

struct CalibrationOptions {
    QuadratureSpec quadrature;
    double residual_tol = 1e-8;
    int max_bisections = 200;
    int max_newton = 100;
    double fd_step = 1e-6;
    int starts_per_axis = 5;
};

namespace detail {

struct Bisection {
    double root = 0.0;
    int iterations = 0;
    std::vector<BracketStep> trace;
};

template <class G>
Bisection bisect(G&& g, double lo, double hi, const CalibrationOptions& opt, const char* what) {
    double g_lo = g(lo), g_hi = g(hi);
    if (g_lo == 0.0) return {lo, 0, {{lo, hi}}};
    if (g_hi == 0.0) return {hi, 0, {{lo, hi}}};
    if ((g_lo > 0.0) == (g_hi > 0.0)) {
        std::ostringstream msg;
        msg.precision(12);
        msg << what << ": no sign change on [" << lo << ", " << hi << "]: values " << g_lo << " and " << g_hi;
        throw NoRootError(msg.str(), lo, hi, g_lo, g_hi);
    }
    Bisection out;
    out.trace.push_back({lo, hi});
    for (int it = 1; it <= opt.max_bisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        out.iterations = it;
        if (!(mid > lo && mid < hi)) break;
        const double g_mid = g(mid);
        if (g_mid == 0.0) {
            lo = hi = mid;
        } else if ((g_mid > 0.0) == (g_lo > 0.0)) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
        const BracketStep& prev = out.trace.back();
        if (hi - lo > prev.hi - prev.lo) throw NumericError(std::string(what) + ": bisection bracket grew");
        out.trace.push_back({lo, hi});
        if (lo == hi) break;
    }
    if (out.iterations > 200) throw NumericError(std::string(what) + ": bisection exceeded 200 iterations");
    out.root = 0.5 * (lo + hi);
    return out;
}

inline void check_residuals(CalibrationResult& r, const CalibrationOptions& opt, const char* what) {
    for (const auto& [name, v] : r.residuals) {
        if (v >= opt.residual_tol) {
            std::ostringstream msg;
            msg.precision(12);
            msg << what << ": residual |mu(" << name << ")| = " << v << " exceeds " << opt.residual_tol;
            throw NumericError(msg.str());
        }
    }
}

}  // namespace detail

/// p_g with mu([x1_lo, p] x [x2_lo, x2_hi]) = 0, by bisection on [x1_lo, x1_hi].
/// Since mu(X) = 0, p = x1_hi (nothing sold) is always a root; the bracket
/// end uses the left limit, which leaves out the right-edge line mass.
inline CalibrationResult solve_good_only_price(const MeasureDecomposition& m, const CalibrationOptions& opt = {}) {
    const TypeSpace& s = m.space();
    auto g = [&](double p) {
        const HalfPlane cut = p < s.x1_hi() ? HalfPlane::le(Axis::x1, p) : HalfPlane::lt(Axis::x1, p);
        return mu_of_region(m, Region(s, {cut}), opt.quadrature).total();
    };
    const detail::Bisection b = detail::bisect(g, s.x1_lo(), s.x1_hi(), opt, "good-only price");
    CalibrationResult r;
    r.family = MechanismFamily::good_only;
    r.p_g = b.root;
    r.iterations = b.iterations;
    r.bracket = b.trace;
    const RegionPartition parts = partition_good_only(s, b.root);
    r.residuals = {{"Z", std::abs(mu_of_region(m, parts.z, opt.quadrature).total())},
                   {"W", std::abs(mu_of_region(m, parts.w, opt.quadrature).total())}};
    detail::check_residuals(r, opt, "good-only price");
    return r;
}

/// p_sb with mu({x1 + x2 <= p}) = 0, by bisection on
/// [x1_lo + x2_lo, min(x1_hi + x2_lo, x1_lo + x2_hi)].
inline CalibrationResult solve_single_bundle_price(const MeasureDecomposition& m,
                                                   const CalibrationOptions& opt = {}) {
    const TypeSpace& s = m.space();
    const double lo = s.x1_lo() + s.x2_lo();
    const double hi = std::min(s.x1_hi() + s.x2_lo(), s.x1_lo() + s.x2_hi());
    auto h = [&](double p) {
        return mu_of_region(m, Region(s, {HalfPlane::le(Axis::sum, p)}), opt.quadrature).total();
    };
    const detail::Bisection b = detail::bisect(h, lo, hi, opt, "single-bundle price");
    if (b.root < 0.0) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "single-bundle price: the zero-mass root " << b.root << " is negative";
        throw NoRootError(msg.str(), lo, hi, h(lo), h(hi));
    }
    CalibrationResult r;
    r.family = MechanismFamily::single_bundle;
    r.p_sb = b.root;
    r.iterations = b.iterations;
    r.bracket = b.trace;
    const RegionPartition parts = partition_single_bundle(s, b.root);
    r.residuals = {{"Z", std::abs(mu_of_region(m, parts.z, opt.quadrature).total())},
                   {"Y", std::abs(mu_of_region(m, parts.y, opt.quadrature).total())}};
    if (hi - b.root <= 1e-12) r.notes.push_back("root sits on the price bound min(x1_hi + x2_lo, x1_lo + x2_hi)");
    detail::check_residuals(r, opt, "single-bundle price");
    return r;
}

namespace detail {

inline std::array<double, 2> ad_tiered_F(const MeasureDecomposition& m, double p_g, double p_sb,
                                         const QuadratureSpec& q) {
    const RegionPartition parts = partition_ad_tiered(m.space(), p_g, p_sb);
    return {mu_of_region(m, parts.w, q).total(), mu_of_region(m, parts.y, q).total()};
}

inline double sup_norm(const std::array<double, 2>& f) { return std::max(std::abs(f[0]), std::abs(f[1])); }

// Admissible prices: x1_lo <= p_g <= x1_hi and 0 <= p_sb <= min(p_g, x1_lo + x2_hi).
inline bool ad_tiered_feasible(const TypeSpace& s, double p_g, double p_sb, double slack = 1e-12) {
    return p_g >= s.x1_lo() - slack && p_g <= s.x1_hi() + slack && p_sb >= -slack &&
           p_sb <= std::min(p_g, s.x1_lo() + s.x2_hi()) + slack;
}

inline PriceRoot newton_2d(const MeasureDecomposition& m, double p_g, double p_sb, const CalibrationOptions& opt) {
    const QuadratureSpec& q = opt.quadrature;
    std::array<double, 2> F = ad_tiered_F(m, p_g, p_sb, q);
    int it = 0;
    for (; it < opt.max_newton && sup_norm(F) > 1e-14; ++it) {
        const double h = opt.fd_step;
        const auto Fg = ad_tiered_F(m, p_g + h, p_sb, q);
        const auto Fs = ad_tiered_F(m, p_g, p_sb + h, q);
        const double j11 = (Fg[0] - F[0]) / h, j21 = (Fg[1] - F[1]) / h;
        const double j12 = (Fs[0] - F[0]) / h, j22 = (Fs[1] - F[1]) / h;
        const double det = j11 * j22 - j12 * j21;
        if (!(std::abs(det) > 1e-300) || !std::isfinite(det)) break;
        const double dg = -(j22 * F[0] - j12 * F[1]) / det;
        const double ds = -(-j21 * F[0] + j11 * F[1]) / det;
        double lambda = 1.0;
        bool improved = false;
        for (int k = 0; k < 40; ++k, lambda *= 0.5) {
            const double ng = p_g + lambda * dg, ns = p_sb + lambda * ds;
            const auto NF = ad_tiered_F(m, ng, ns, q);
            if (sup_norm(NF) < sup_norm(F)) {
                p_g = ng;
                p_sb = ns;
                F = NF;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return {p_g, p_sb, sup_norm(F), it};
}

}  // namespace detail

/// (p_g, p_sb) with mu(W) = mu(Y) = 0 by damped Newton from a 5 x 5 grid of
/// feasible starts (or from `start` alone when given). Every distinct
/// feasible root is reported; the first (smallest p_g) fills p_g, p_sb.
inline CalibrationResult solve_ad_tiered_prices(const MeasureDecomposition& m, const CalibrationOptions& opt = {},
                                                std::optional<std::array<double, 2>> start = std::nullopt) {
    const TypeSpace& s = m.space();
    std::vector<std::array<double, 2>> starts;
    if (start) {
        if (!detail::ad_tiered_feasible(s, (*start)[0], (*start)[1]))
            throw DomainError("ad-tiered initial guess lies outside x1_lo <= p_g <= x1_hi, 0 <= p_sb <= "
                              "min(p_g, x1_lo + x2_hi)");
        starts.push_back(*start);
    } else {
        const int n = opt.starts_per_axis;
        for (int i = 0; i < n; ++i) {
            const double pg = s.x1_lo() + s.width() * (i + 0.5) / n;
            const double cap = std::min(pg, s.x1_lo() + s.x2_hi());
            const double floor = std::max(0.0, s.x1_lo() + s.x2_lo());
            if (!(cap > floor)) continue;
            for (int j = 0; j < n; ++j) starts.push_back({pg, floor + (cap - floor) * (j + 0.5) / n});
        }
        if (starts.empty()) throw DomainError("ad-tiered prices: the feasible price set is empty on this type space");
    }

    std::vector<PriceRoot> found(starts.size());
    parallel_for(starts.size(), [&](std::size_t i) { found[i] = detail::newton_2d(m, starts[i][0], starts[i][1], opt); });

    CalibrationResult r;
    r.family = MechanismFamily::ad_tiered;
    const PriceRoot* best = nullptr;
    int total_iterations = 0;
    for (const PriceRoot& pr : found) {
        total_iterations += pr.iterations;
        if (!best || pr.residual < best->residual) best = &pr;
        if (pr.residual >= opt.residual_tol) continue;
        if (!detail::ad_tiered_feasible(s, pr.p_g, pr.p_sb)) {
            std::ostringstream note;
            note.precision(12);
            note << "rejected root (" << pr.p_g << ", " << pr.p_sb << ") outside the admissible price set";
            if (std::find(r.notes.begin(), r.notes.end(), note.str()) == r.notes.end()) r.notes.push_back(note.str());
            continue;
        }
        const bool dup = std::any_of(r.roots.begin(), r.roots.end(), [&](const PriceRoot& o) {
            return std::abs(o.p_g - pr.p_g) < 1e-6 && std::abs(o.p_sb - pr.p_sb) < 1e-6;
        });
        if (!dup) r.roots.push_back(pr);
    }
    r.iterations = total_iterations;
    if (r.roots.empty()) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "ad-tiered prices: no start converged to a feasible root; best residual " << best->residual << " at ("
            << best->p_g << ", " << best->p_sb << ")";
        throw NoRootError(msg.str(), best->p_g, best->p_sb, best->residual, best->residual);
    }
    std::sort(r.roots.begin(), r.roots.end(), [](const PriceRoot& a, const PriceRoot& b) {
        return a.p_g != b.p_g ? a.p_g < b.p_g : a.p_sb < b.p_sb;
    });
    r.p_g = r.roots.front().p_g;
    r.p_sb = r.roots.front().p_sb;
    const RegionPartition parts = partition_ad_tiered(s, *r.p_g, *r.p_sb);
    r.residuals = {{"W", std::abs(mu_of_region(m, parts.w, opt.quadrature).total())},
                   {"Y", std::abs(mu_of_region(m, parts.y, opt.quadrature).total())},
                   {"Z", std::abs(mu_of_region(m, parts.z, opt.quadrature).total())}};
    detail::check_residuals(r, opt, "ad-tiered prices");
    return r;
}

inline CalibrationResult calibrate(const MeasureDecomposition& m, MechanismFamily family,
                                   const CalibrationOptions& opt = {}) {
    switch (family) {
        case MechanismFamily::good_only: return solve_good_only_price(m, opt);
        case MechanismFamily::single_bundle: return solve_single_bundle_price(m, opt);
        case MechanismFamily::ad_tiered: return solve_ad_tiered_prices(m, opt);
    }
    throw DomainError("unknown mechanism family");
}

}  // namespace adscreen
