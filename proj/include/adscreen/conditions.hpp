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
#include "adscreen/errors.hpp"
#include "adscreen/measure.hpp"
#include "adscreen/parallel.hpp"
#include "adscreen/quadrature.hpp"

namespace adscreen {

enum class Status { pass, fail, boundary };
enum class Role { necessary, sufficient };
enum class Verdict { necessary_failed, necessary_passed_only, sufficient_passed };

inline const char* status_name(Status s) {
    switch (s) {
        case Status::pass: return "pass";
        case Status::fail: return "fail";
        case Status::boundary: return "boundary";
    }
    return "?";
}

inline const char* role_name(Role r) { return r == Role::necessary ? "necessary" : "sufficient"; }

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::necessary_failed: return "necessary_failed";
        case Verdict::necessary_passed_only: return "necessary_passed_only";
        case Verdict::sufficient_passed: return "sufficient_passed";
    }
    return "?";
}

struct ConditionItem {
    std::string id;    // "i", "ii", ... or "mm"
    std::string name;  // short description key, e.g. "zero_mass"
    Role role = Role::necessary;
    Status status = Status::pass;
    double witness = 0.0;
    std::optional<Point> witness_point;
    std::string detail;
};

struct ConditionReport {
    CanonicalMechanism mechanism;
    std::vector<ConditionItem> items;
    std::vector<std::pair<std::string, double>> masses;  // mu(Z), mu(W), mu(Y), mu(X)
    Verdict verdict = Verdict::necessary_failed;

    const ConditionItem* find(const std::string& id) const {
        for (const ConditionItem& it : items)
            if (it.id == id) return &it;
        return nullptr;
    }
};

/// Boundary status counts as satisfied; the verdict fails only on a failing item.
inline Verdict verdict_of(const std::vector<ConditionItem>& items) {
    bool all_ok = true;
    for (const ConditionItem& it : items) {
        if (it.status != Status::fail) continue;
        if (it.role == Role::necessary) return Verdict::necessary_failed;
        all_ok = false;
    }
    return all_ok ? Verdict::sufficient_passed : Verdict::necessary_passed_only;
}

struct CheckOptions {
    QuadratureSpec quadrature;
    double zero_tol = 1e-6;      // |mu(region)| accepted as zero
    double sign_tol = 1e-6;      // hinge-tail and orthant masses accepted as >= 0
    double equality_tol = 1e-12; // parameter bounds closer than this are "boundary"
    int t_points = 64;
    int anchors = 48;
    int refine = 8;
    MassMode mode = MassMode::automatic;
};

// ---------------------------------------------------------------------------
// MM

struct MMResult {
    double min_value = 0.0;  // min of [grad f.(x + v_kappa) + (3 + d2 kappa) f] / f
    Point argmin;
    bool pass = false;
    bool closed_form = false;
};

namespace detail {

inline double mm_margin(const DensityModel& d, const AdPaymentSchedule& kappa, Point x) {
    const DensityValue v = d.eval(x);
    return (v.grad.x1 * x.x1 + v.grad.x2 * (x.x2 + kappa.value(x))) / v.value + 3.0 + kappa.d2(x);
}

}  // namespace detail

/// MM minimum on a grid plus a local pattern-search refinement.
inline MMResult check_mm_grid(const DensityModel& d, const AdPaymentSchedule& kappa, int n = 64) {
    const TypeSpace& s = d.space();
    const std::vector<Point> grid = s.grid(n, n);
    std::vector<double> vals(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { vals[i] = detail::mm_margin(d, kappa, grid[i]); });
    const std::size_t k = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    Point best = grid[k];
    double best_v = vals[k];
    double h1 = s.width() / (n - 1), h2 = s.height() / (n - 1);
    for (int it = 0; it < 60 && (h1 > 1e-12 || h2 > 1e-12); ++it) {
        bool moved = false;
        for (int di = -1; di <= 1; ++di) {
            for (int dj = -1; dj <= 1; ++dj) {
                const Point p{std::clamp(best.x1 + di * h1, s.x1_lo(), s.x1_hi()),
                              std::clamp(best.x2 + dj * h2, s.x2_lo(), s.x2_hi())};
                const double v = detail::mm_margin(d, kappa, p);
                if (v < best_v) {
                    best_v = v;
                    best = p;
                    moved = true;
                }
            }
        }
        if (!moved) {
            h1 *= 0.5;
            h2 *= 0.5;
        }
    }
    return {best_v, best, best_v >= -1e-10, false};
}

/// MM check. Closed form for uniform densities and for log-linear densities
/// with constant payment; grid search otherwise.
inline MMResult check_mm(const DensityModel& d, const AdPaymentSchedule& kappa) {
    const TypeSpace& s = d.space();
    if (kappa.is_constant()) {
        const double k = kappa.k();
        if (d.is_uniform()) return {3.0, s.corner(), true, true};
        if (const auto* ll = std::get_if<LogLinear>(&d.kind())) {
            // The margin -a x1 + b (x2 + k) + 3 is affine, so its minimum is at a corner.
            const Point x{ll->a >= 0.0 ? s.x1_hi() : s.x1_lo(), ll->b >= 0.0 ? s.x2_lo() : s.x2_hi()};
            const double v = 3.0 - ll->a * x.x1 + ll->b * (x.x2 + k);
            return {v, x, v >= -1e-10, true};
        }
    }
    return check_mm_grid(d, kappa);
}

// ---------------------------------------------------------------------------
// Orthant and hinge-tail minima

struct OrthantResult {
    double min_mass = 0.0;
    Point argmin;
};

/// Minimum over anchors x of mu(orthant(x) intersected with clip): a uniform
/// grid on X and one local refinement around the grid minimizer.
inline OrthantResult orthant_min(const MeasureDecomposition& m, const RegionUnion& clip, Orientation o,
                                 const QuadratureSpec& q = {}, int n = 48, int refine = 8,
                                 MassMode mode = MassMode::automatic) {
    const TypeSpace& s = m.space();
    auto mass = [&](Point x) { return mu_of_region(m, orthant(clip, x, o), q, mode).total(); };
    const std::vector<Point> grid = s.grid(n, n);
    std::vector<double> vals(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { vals[i] = mass(grid[i]); });
    const std::size_t k = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    OrthantResult best{vals[k], grid[k]};

    const double h1 = s.width() / (n - 1), h2 = s.height() / (n - 1);
    std::vector<Point> local;
    for (int i = -refine; i <= refine; ++i)
        for (int j = -refine; j <= refine; ++j) {
            const Point p{best.argmin.x1 + i * h1 / refine, best.argmin.x2 + j * h2 / refine};
            if (s.contains(p)) local.push_back(p);
        }
    std::vector<double> lv(local.size());
    parallel_for(local.size(), [&](std::size_t i) { lv[i] = mass(local[i]); });
    for (std::size_t i = 0; i < local.size(); ++i)
        if (lv[i] < best.min_mass) best = {lv[i], local[i]};
    return best;
}

struct TailResult {
    double min_value = 0.0;
    double argmin_t = 0.0;
};

/// Minimum over t in [x1_lo, p] of the hinge tail integral, sampled on a
/// uniform t-grid and refined around the minimizer.
inline TailResult hinge_tail_min(const MeasureDecomposition& m, const RegionUnion& clip, double p,
                                 const QuadratureSpec& q = {}, int n = 64, MassMode mode = MassMode::automatic) {
    const double lo = m.space().x1_lo();
    if (!(p > lo)) return {0.0, lo};
    std::vector<double> ts(n);
    for (int i = 0; i < n; ++i) ts[i] = (i == n - 1) ? p : lo + (p - lo) * i / (n - 1);
    std::vector<double> vals(ts.size());
    parallel_for(ts.size(), [&](std::size_t i) { vals[i] = hinge_tail_integral(m, clip, ts[i], p, q, mode); });
    std::size_t k = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    TailResult best{vals[k], ts[k]};
    const double a = ts[k == 0 ? 0 : k - 1], b = ts[std::min<std::size_t>(k + 1, ts.size() - 1)];
    std::vector<double> fine(16);
    std::vector<double> fv(fine.size());
    for (std::size_t i = 0; i < fine.size(); ++i) fine[i] = a + (b - a) * (i + 0.5) / fine.size();
    parallel_for(fine.size(), [&](std::size_t i) { fv[i] = hinge_tail_integral(m, clip, fine[i], p, q, mode); });
    for (std::size_t i = 0; i < fine.size(); ++i)
        if (fv[i] < best.min_value) best = {fv[i], fine[i]};
    return best;
}

// ---------------------------------------------------------------------------
// Condition batteries

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

inline double require_constant_k(const AdPaymentSchedule& kappa) {
    if (!kappa.is_constant()) throw DomainError("condition batteries need a constant third-party payment k");
    return kappa.k();
}

// Status of "lhs <= rhs" for model parameters.
inline Status weak_le(double lhs, double rhs, double tol) {
    if (std::abs(lhs - rhs) <= tol) return Status::boundary;
    return lhs < rhs ? Status::pass : Status::fail;
}

inline ConditionItem zero_mass_item(const std::vector<std::pair<std::string, double>>& masses,
                                    const CheckOptions& opt) {
    double worst = 0.0;
    std::string which, all;
    for (const auto& [name, v] : masses) {
        if (name == "X") continue;
        if (!all.empty()) all += ", ";
        all += "mu(" + name + ") = " + fmt(v);
        if (std::abs(v) >= std::abs(worst)) {
            worst = v;
            which = name;
        }
    }
    ConditionItem it{"i", "zero_mass", Role::necessary, Status::pass, worst, std::nullopt, all};
    if (std::abs(worst) > opt.zero_tol) {
        it.status = Status::fail;
        it.detail = "mu(" + which + ") is not zero: " + all;
    }
    return it;
}

inline ConditionItem mm_item(const DensityModel& d, const AdPaymentSchedule& kappa) {
    const MMResult r = check_mm(d, kappa);
    return {"mm",
            "mm",
            Role::sufficient,
            r.pass ? Status::pass : Status::fail,
            r.min_value,
            r.argmin,
            std::string(r.closed_form ? "closed form" : "grid search") + " minimum " + fmt(r.min_value)};
}

inline ConditionItem orthant_item(std::string id, std::string name, const MeasureDecomposition& m,
                                  const RegionUnion& clip, Orientation o, const CheckOptions& opt) {
    const OrthantResult r = orthant_min(m, clip, o, opt.quadrature, opt.anchors, opt.refine, opt.mode);
    ConditionItem it{std::move(id), std::move(name), Role::sufficient, Status::pass, r.min_mass, r.argmin, ""};
    it.detail = "minimum orthant mass " + fmt(r.min_mass) + " at " + format_point(r.argmin);
    if (r.min_mass < -opt.sign_tol) it.status = Status::fail;
    return it;
}

inline ConditionItem tail_item(std::string id, const MeasureDecomposition& m, const RegionUnion& clip, double p,
                               const CheckOptions& opt) {
    const TailResult r = hinge_tail_min(m, clip, p, opt.quadrature, opt.t_points, opt.mode);
    ConditionItem it{std::move(id), "hinge_tail", Role::necessary, Status::pass, r.min_value,
                     Point{r.argmin_t, m.space().x2_lo()}, ""};
    it.detail = "minimum tail integral " + fmt(r.min_value) + " at t = " + fmt(r.argmin_t);
    if (r.min_value < -opt.sign_tol) it.status = Status::fail;
    return it;
}

inline std::vector<std::pair<std::string, double>> region_masses(const MeasureDecomposition& m,
                                                                 const RegionPartition& p, MechanismFamily fam,
                                                                 const CheckOptions& opt) {
    std::vector<std::pair<std::string, double>> out;
    out.emplace_back("Z", mu_of_region(m, p.z, opt.quadrature, opt.mode).total());
    if (fam != MechanismFamily::single_bundle)
        out.emplace_back("W", mu_of_region(m, p.w, opt.quadrature, opt.mode).total());
    if (fam != MechanismFamily::good_only)
        out.emplace_back("Y", mu_of_region(m, p.y, opt.quadrature, opt.mode).total());
    out.emplace_back("X", mu_of_region(m, whole(m.space()), opt.quadrature, opt.mode).total());
    return out;
}

}  // namespace detail

inline ConditionReport check_good_only(const DensityModel& d, const AdPaymentSchedule& kappa, double p_g,
                                       const CheckOptions& opt = {}) {
    const double k = detail::require_constant_k(kappa);
    const TypeSpace& s = d.space();
    const CanonicalMechanism mech = CanonicalMechanism::good_only(s, p_g);
    const MeasureDecomposition m(d, kappa);
    const RegionPartition parts = mech.regions();

    ConditionReport rep{mech, {}, detail::region_masses(m, parts, mech.family(), opt), Verdict::necessary_failed};
    rep.items.push_back(detail::zero_mass_item(rep.masses, opt));

    const double bound = std::abs(s.x2_hi());
    ConditionItem pay{"ii", "payment_bound", Role::necessary, detail::weak_le(k, bound, opt.equality_tol), k,
                      std::nullopt, "k = " + detail::fmt(k) + " against |x2_hi| = " + detail::fmt(bound)};
    rep.items.push_back(pay);

    rep.items.push_back(detail::tail_item("iii", m, whole(s), p_g, opt));
    rep.items.push_back(detail::mm_item(d, kappa));
    rep.items.push_back(detail::orthant_item("iv", "orthant_w", m, parts.w, Orientation::lower_right, opt));
    rep.verdict = verdict_of(rep.items);
    return rep;
}

inline ConditionReport check_single_bundle(const DensityModel& d, const AdPaymentSchedule& kappa, double p_sb,
                                           const CheckOptions& opt = {}) {
    const double k = detail::require_constant_k(kappa);
    const TypeSpace& s = d.space();
    const CanonicalMechanism mech = CanonicalMechanism::single_bundle(s, p_sb);
    const MeasureDecomposition m(d, kappa);
    const RegionPartition parts = mech.regions();

    ConditionReport rep{mech, {}, detail::region_masses(m, parts, mech.family(), opt), Verdict::necessary_failed};
    rep.items.push_back(detail::zero_mass_item(rep.masses, opt));

    const double need = std::abs(s.x2_lo());
    rep.items.push_back({"ii", "payment_bound", Role::necessary, detail::weak_le(need, k, opt.equality_tol), k,
                         std::nullopt, "k = " + detail::fmt(k) + " against |x2_lo| = " + detail::fmt(need)});
    const double cap = std::min(s.x1_hi() + s.x2_lo(), s.x1_lo() + s.x2_hi());
    rep.items.push_back({"ii.price", "price_bound", Role::necessary, detail::weak_le(p_sb, cap, opt.equality_tol),
                         p_sb, std::nullopt,
                         "p_sb = " + detail::fmt(p_sb) + " against min(x1_hi + x2_lo, x1_lo + x2_hi) = " +
                             detail::fmt(cap)});
    rep.items.push_back(detail::mm_item(d, kappa));
    rep.items.push_back(detail::orthant_item("iii", "orthant_y", m, parts.y, Orientation::upper_right, opt));
    rep.verdict = verdict_of(rep.items);
    return rep;
}

inline ConditionReport check_ad_tiered(const DensityModel& d, const AdPaymentSchedule& kappa, double p_g, double p_sb,
                                       const CheckOptions& opt = {}) {
    detail::require_constant_k(kappa);
    const TypeSpace& s = d.space();
    const CanonicalMechanism mech = CanonicalMechanism::ad_tiered(s, p_g, p_sb);
    const MeasureDecomposition m(d, kappa);
    const RegionPartition parts = mech.regions();

    ConditionReport rep{mech, {}, detail::region_masses(m, parts, mech.family(), opt), Verdict::necessary_failed};
    rep.items.push_back(detail::zero_mass_item(rep.masses, opt));
    rep.items.push_back(detail::tail_item("ii", m, parts.z, p_g, opt));
    rep.items.push_back(detail::mm_item(d, kappa));
    rep.items.push_back(detail::orthant_item("iii", "orthant_w", m, parts.w, Orientation::lower_right, opt));
    rep.items.push_back(detail::orthant_item("iv", "orthant_y", m, parts.y, Orientation::upper_right, opt));
    rep.verdict = verdict_of(rep.items);
    return rep;
}

inline ConditionReport check_mechanism(const DensityModel& d, const AdPaymentSchedule& kappa,
                                       const CanonicalMechanism& mech, const CheckOptions& opt = {}) {
    switch (mech.family()) {
        case MechanismFamily::good_only: return check_good_only(d, kappa, *mech.p_g(), opt);
        case MechanismFamily::single_bundle: return check_single_bundle(d, kappa, *mech.p_sb(), opt);
        case MechanismFamily::ad_tiered: return check_ad_tiered(d, kappa, *mech.p_g(), *mech.p_sb(), opt);
    }
    throw DomainError("unknown mechanism family");
}

// ---------------------------------------------------------------------------
// Adversarial prober

struct ProbeWitness {
    std::string region;  // "Z", "W" or "Y"
    std::string family;  // "edge", "strip", "corner", "hinge", "constant"
    std::vector<std::pair<std::string, double>> parameters;
    std::string detail;
    double value = 0.0;  // integral of the sup-normalized test function
};

struct ProbeOptions {
    QuadratureSpec quadrature;
    std::vector<double> deltas{0.1, 0.01, 0.001};
    int hinge_points = 8;
    double threshold = 1e-6;
};

namespace detail {

struct Extent {
    double x1_min = std::numeric_limits<double>::infinity();
    double x1_max = -std::numeric_limits<double>::infinity();
    double x2_min = std::numeric_limits<double>::infinity();
    double x2_max = -std::numeric_limits<double>::infinity();
    std::vector<Point> vertices;

    void add(Point p) {
        x1_min = std::min(x1_min, p.x1);
        x1_max = std::max(x1_max, p.x1);
        x2_min = std::min(x2_min, p.x2);
        x2_max = std::max(x2_max, p.x2);
        vertices.push_back(p);
    }
};

inline Extent extent_of(const RegionUnion& r) {
    Extent e;
    for (const Region& piece : r.pieces())
        for (const Trapezoid& t : piece.decompose()) {
            e.add({t.a, t.lower(t.a)});
            e.add({t.a, t.upper(t.a)});
            e.add({t.b, t.lower(t.b)});
            e.add({t.b, t.upper(t.b)});
        }
    return e;
}

// Directions (+1 nondecreasing, -1 nonincreasing) admissible for a signature component.
inline std::vector<int> directions(int v) {
    if (v == 0) return {1, -1};
    return {v};
}

}  // namespace detail

/// Searches the proof test-function families for a convex, signature-monotone
/// u with a strictly positive integral against mu restricted to a menu
/// region. Regions are scanned in the order Y, W, Z and families in the
/// order edge/strip, corner, hinge, constant; the first hit is returned.
inline std::optional<ProbeWitness> adversarial_probe(const MeasureDecomposition& m, const CanonicalMechanism& mech,
                                                     const ProbeOptions& opt = {}) {
    const TypeSpace& s = m.space();
    const RegionPartition parts = mech.regions();
    struct Target {
        const char* name;
        const RegionUnion* region;
        MonotonicitySignature sig;
    };
    const std::vector<Target> targets{{"Y", &parts.y, MonotonicitySignature::from_allocation(1, 1)},
                                      {"W", &parts.w, MonotonicitySignature::from_allocation(1, 0)},
                                      {"Z", &parts.z, MonotonicitySignature::from_allocation(0, 0)}};
    const QuadratureSpec& q = opt.quadrature;

    for (const Target& tg : targets) {
        if (tg.region->pieces().empty()) continue;
        const detail::Extent ext = detail::extent_of(*tg.region);
        if (ext.vertices.empty()) continue;
        auto hit = [&](std::string family, std::vector<std::pair<std::string, double>> params, std::string detail,
                       double value) -> std::optional<ProbeWitness> {
            if (value > opt.threshold)
                return ProbeWitness{tg.name, std::move(family), std::move(params), std::move(detail), value};
            return std::nullopt;
        };

        // Exponentials concentrating on one side of the region.
        for (int axis = 0; axis < 2; ++axis) {
            for (int dir : detail::directions(axis == 0 ? tg.sig.v1 : tg.sig.v2)) {
                const double c = axis == 0 ? (dir > 0 ? ext.x1_max : ext.x1_min) : (dir > 0 ? ext.x2_max : ext.x2_min);
                const double edge_lo = axis == 0 ? s.x1_lo() : s.x2_lo();
                const double edge_hi = axis == 0 ? s.x1_hi() : s.x2_hi();
                const bool on_edge = std::abs(c - (dir > 0 ? edge_hi : edge_lo)) <= 1e-12;
                std::string where = on_edge ? (axis == 0 ? (dir > 0 ? "right" : "left") : (dir > 0 ? "top" : "bottom"))
                                            : std::string(axis == 0 ? "x1 = " : "x2 = ") + detail::fmt(c);
                for (double delta : opt.deltas) {
                    auto u = [&](Point x) {
                        const double z = axis == 0 ? x.x1 : x.x2;
                        return std::exp(std::min(0.0, dir * (z - c)) / delta);
                    };
                    const double v = integrate_measure(m, *tg.region, u, q);
                    if (auto w = hit(on_edge ? "edge" : "strip",
                                     {{"axis", axis + 1.0}, {"direction", double(dir)}, {"delta", delta}, {"c", c}},
                                     "exp concentrating at " + where, v))
                        return w;
                }
            }
        }

        // Exponentials of a mixed direction, concentrating at a vertex.
        for (int d1 : detail::directions(tg.sig.v1)) {
            for (int d2 : detail::directions(tg.sig.v2)) {
                double top = -std::numeric_limits<double>::infinity();
                for (Point p : ext.vertices) top = std::max(top, d1 * p.x1 + d2 * p.x2);
                for (double delta : opt.deltas) {
                    auto u = [&](Point x) { return std::exp(std::min(0.0, d1 * x.x1 + d2 * x.x2 - top) / delta); };
                    const double v = integrate_measure(m, *tg.region, u, q);
                    if (auto w = hit("corner",
                                     {{"direction1", double(d1)}, {"direction2", double(d2)}, {"delta", delta}},
                                     "exp concentrating at the region's extreme vertex", v))
                        return w;
                }
            }
        }

        // Hinges in each admissible direction.
        for (int axis = 0; axis < 2; ++axis) {
            const double lo = axis == 0 ? ext.x1_min : ext.x2_min;
            const double hi = axis == 0 ? ext.x1_max : ext.x2_max;
            if (!(hi > lo)) continue;
            const Axis ax = axis == 0 ? Axis::x1 : Axis::x2;
            for (int dir : detail::directions(axis == 0 ? tg.sig.v1 : tg.sig.v2)) {
                for (int i = 1; i <= opt.hinge_points; ++i) {
                    const double t = lo + (hi - lo) * i / (opt.hinge_points + 1.0);
                    const double sup = dir > 0 ? hi - t : t - lo;
                    const RegionUnion support =
                        tg.region->with(dir > 0 ? HalfPlane::ge(ax, t) : HalfPlane::le(ax, t));
                    auto u = [&](Point x) {
                        const double z = axis == 0 ? x.x1 : x.x2;
                        return std::max(0.0, dir * (z - t)) / sup;
                    };
                    const double v = integrate_measure(m, support, u, q);
                    if (auto w = hit("hinge", {{"axis", axis + 1.0}, {"direction", double(dir)}, {"t", t}},
                                     "hinge at t = " + detail::fmt(t), v))
                        return w;
                }
            }
        }

        // Constants of either sign.
        const double mass = mu_of_region(m, *tg.region, q).total();
        if (auto w = hit("constant", {{"sign", mass > 0 ? 1.0 : -1.0}}, "nonzero region mass", std::abs(mass)))
            return w;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Regimes and general payments

struct RegimeLabel {
    bool good_only = false;
    bool ad_tiered = false;
    bool single_bundle = false;

    /// Single label; at k = |x2_lo| (where both remain possible) single_bundle.
    MechanismFamily primary() const {
        if (good_only) return MechanismFamily::good_only;
        if (single_bundle) return MechanismFamily::single_bundle;
        return MechanismFamily::ad_tiered;
    }

    std::string label() const {
        if (ad_tiered && single_bundle) return "ad_tiered|single_bundle";
        return family_name(primary());
    }
};

/// Regime partition for densities uniform in x2; parameter ties within tol count as equal.
inline RegimeLabel classify_regime_uniform(const TypeSpace& space, double k, double tol = 1e-12) {
    if (!(k >= 0.0)) throw DomainError("k must be >= 0");
    const double top = std::abs(space.x2_hi()), bottom = std::abs(space.x2_lo());
    RegimeLabel r;
    if (k <= top + tol) {
        r.good_only = true;
    } else if (k < bottom - tol) {
        r.ad_tiered = true;
    } else {
        r.single_bundle = true;
        r.ad_tiered = std::abs(k - bottom) <= tol;
    }
    return r;
}

inline RegimeLabel classify_regime_uniform(const DensityModel& d, double k, double tol = 1e-12) {
    if (!d.uniform_in_x2()) throw DomainError("regime classification needs a density uniform in x2");
    return classify_regime_uniform(d.space(), k, tol);
}

struct EdgeSignCheck {
    Edge edge = Edge::top;
    int required_sign = 0;  // +1: density >= 0, -1: density <= 0
    double min_margin = 0.0;  // min over x1 of required_sign * density
    double argmin_x1 = 0.0;
    bool pass = false;
};

struct EdgeSignReport {
    MechanismFamily family = MechanismFamily::good_only;
    std::vector<EdgeSignCheck> checks;
    bool pass = false;
};

/// Sign requirements on the horizontal edge densities of mu for a mechanism
/// family, checked on an x1-grid.
inline EdgeSignReport check_general_kappa_edges(const DensityModel& d, const AdPaymentSchedule& kappa,
                                                MechanismFamily family, int n = 257, double tol = 1e-12) {
    const MeasureDecomposition m(d, kappa);
    const TypeSpace& s = d.space();
    std::vector<std::pair<Edge, int>> req;
    switch (family) {
        case MechanismFamily::good_only: req = {{Edge::top, -1}, {Edge::bottom, 1}}; break;
        case MechanismFamily::single_bundle: req = {{Edge::top, 1}, {Edge::bottom, -1}}; break;
        case MechanismFamily::ad_tiered: req = {{Edge::top, 1}, {Edge::bottom, 1}}; break;
    }
    EdgeSignReport rep{family, {}, true};
    for (auto [edge, sign] : req) {
        EdgeSignCheck c{edge, sign, std::numeric_limits<double>::infinity(), s.x1_lo(), false};
        for (int i = 0; i < n; ++i) {
            const double x1 = (i == n - 1) ? s.x1_hi() : s.x1_lo() + s.width() * i / (n - 1);
            const double v = sign * m.edge_density(edge, x1);
            if (v < c.min_margin) {
                c.min_margin = v;
                c.argmin_x1 = x1;
            }
        }
        c.pass = c.min_margin >= -tol;
        rep.pass = rep.pass && c.pass;
        rep.checks.push_back(c);
    }
    return rep;
}

}  // namespace adscreen
