#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adscreen/domain.hpp"
#include "adscreen/errors.hpp"
#include "adscreen/quadrature.hpp"

namespace adscreen {

/// Per-component split of a signed mass.
struct MassBreakdown {
    double atom = 0.0;
    double bottom = 0.0;
    double top = 0.0;
    double left = 0.0;
    double right = 0.0;
    double interior = 0.0;

    double total() const { return atom + bottom + top + left + right + interior; }

    double& edge(Edge e) {
        switch (e) {
            case Edge::bottom: return bottom;
            case Edge::top: return top;
            case Edge::left: return left;
            case Edge::right: return right;
        }
        return bottom;
    }

    MassBreakdown& operator+=(const MassBreakdown& o) {
        atom += o.atom;
        bottom += o.bottom;
        top += o.top;
        left += o.left;
        right += o.right;
        interior += o.interior;
        return *this;
    }
};

/// Constant edge and interior densities (uniform density, constant payment).
struct ClosedFormDensities {
    double bottom = 0.0;
    double top = 0.0;
    double left = 0.0;
    double right = 0.0;
    double interior = 0.0;

    double edge(Edge e) const {
        switch (e) {
            case Edge::bottom: return bottom;
            case Edge::top: return top;
            case Edge::left: return left;
            case Edge::right: return right;
        }
        return 0.0;
    }
};

/// How mu_of_region evaluates: closed form whenever available, or always by quadrature.
enum class MassMode { automatic, numeric };

/// The transformed measure: a unit atom at the lowest type, line densities on
/// the four edges (per unit arclength), and an interior density.
class MeasureDecomposition {
public:
    MeasureDecomposition(DensityModel density, AdPaymentSchedule kappa)
        : density_(std::move(density)), kappa_(std::move(kappa)) {
        if (!kappa_.has_d2())
            throw DomainError("general third-party payment needs an analytic d/dx2 to build the measure");
        kappa_max_ = kappa_.check_bounded(density_.space());
        if (density_.is_uniform() && kappa_.is_constant()) {
            const TypeSpace& s = density_.space();
            const double f = density_.norm_const();
            const double k = kappa_.k();
            closed_form_ = ClosedFormDensities{-(s.x2_lo() + k) * f, (s.x2_hi() + k) * f, -s.x1_lo() * f,
                                               s.x1_hi() * f, -3.0 * f};
        }
    }

    const TypeSpace& space() const { return density_.space(); }
    const DensityModel& density() const { return density_; }
    const AdPaymentSchedule& kappa() const { return kappa_; }
    double kappa_max() const { return kappa_max_; }

    double atom_weight() const { return 1.0; }
    Point atom() const { return space().corner(); }

    const std::optional<ClosedFormDensities>& closed_form() const { return closed_form_; }

    /// Point on edge e at parameter s (x1 for bottom/top, x2 for left/right).
    Point edge_point(Edge e, double s) const {
        const TypeSpace& b = space();
        switch (e) {
            case Edge::bottom: return {s, b.x2_lo()};
            case Edge::top: return {s, b.x2_hi()};
            case Edge::left: return {b.x1_lo(), s};
            case Edge::right: return {b.x1_hi(), s};
        }
        return {};
    }

    /// Line density of edge e at parameter s.
    double edge_density(Edge e, double s) const {
        const Point x = edge_point(e, s);
        const double f = density_(x);
        const TypeSpace& b = space();
        switch (e) {
            case Edge::bottom: return -(b.x2_lo() + kappa_.value(x)) * f;
            case Edge::top: return (b.x2_hi() + kappa_.value(x)) * f;
            case Edge::left: return -b.x1_lo() * f;
            case Edge::right: return b.x1_hi() * f;
        }
        return 0.0;
    }

    double interior_density(Point x) const {
        const DensityValue d = density_.eval(x);
        const double k = kappa_.value(x);
        return -(d.grad.x1 * x.x1 + d.grad.x2 * (x.x2 + k) + (3.0 + kappa_.d2(x)) * d.value);
    }

private:
    DensityModel density_;
    AdPaymentSchedule kappa_;
    double kappa_max_ = 0.0;
    std::optional<ClosedFormDensities> closed_form_;
};

inline MeasureDecomposition build_measure(const DensityModel& d, const AdPaymentSchedule& kappa) {
    return MeasureDecomposition(d, kappa);
}

/// A scalar test function with analytic gradient. Kinked functions must be
/// smoothed first and flagged `differentiable = false` otherwise.
struct TestFunction {
    std::function<double(Point)> value;
    std::function<Vec2(Point)> gradient;
    bool differentiable = true;
    std::string name = "u";
};

namespace detail {

template <class U>
MassBreakdown integrate_region(const MeasureDecomposition& m, const Region& r, U&& u, const QuadratureSpec& q) {
    MassBreakdown out;
    if (r.contains(m.atom())) out.atom = m.atom_weight() * u(m.atom());
    for (Edge e : kEdges) {
        if (auto iv = r.edge_interval(e)) {
            out.edge(e) = integrate_1d([&](double s) { return u(m.edge_point(e, s)) * m.edge_density(e, s); }, iv->lo,
                                       iv->hi, q, edge_name(e));
        }
    }
    for (const Trapezoid& t : r.decompose()) {
        out.interior += integrate_trapezoid(
            [&](double a, double b) {
                const Point x{a, b};
                return u(x) * m.interior_density(x);
            },
            t, q, "interior");
    }
    return out;
}

inline MassBreakdown closed_form_region(const MeasureDecomposition& m, const ClosedFormDensities& c,
                                        const Region& r) {
    MassBreakdown out;
    if (r.contains(m.atom())) out.atom = m.atom_weight();
    for (Edge e : kEdges)
        if (auto iv = r.edge_interval(e)) out.edge(e) = c.edge(e) * iv->length();
    for (const Trapezoid& t : r.decompose()) out.interior += c.interior * t.area();
    return out;
}

}  // namespace detail

/// Signed mass of a region with its per-component breakdown.
inline MassBreakdown mu_of_region(const MeasureDecomposition& m, const RegionUnion& r, const QuadratureSpec& q = {},
                                  MassMode mode = MassMode::automatic) {
    MassBreakdown out;
    for (const Region& piece : r.pieces()) {
        if (mode == MassMode::automatic && m.closed_form()) {
            out += detail::closed_form_region(m, *m.closed_form(), piece);
        } else {
            out += detail::integrate_region(m, piece, [](Point) { return 1.0; }, q);
        }
    }
    return out;
}

/// Integral of u against the measure restricted to a region. u must be
/// smooth on each piece of the region.
template <class U>
double integrate_measure(const MeasureDecomposition& m, const RegionUnion& r, U&& u, const QuadratureSpec& q = {}) {
    double total = 0.0;
    for (const Region& piece : r.pieces()) total += detail::integrate_region(m, piece, u, q).total();
    return total;
}

inline RegionUnion whole(const TypeSpace& s) { return Region(s); }

/// Lower-right orthant [x1, x1_hi] x [x2_lo, x2] and upper-right orthant
/// [x1, x1_hi] x [x2, x2_hi] anchored at x.
enum class Orientation { lower_right, upper_right };

inline RegionUnion orthant(const RegionUnion& clip, Point x, Orientation o) {
    RegionUnion r = clip.with(HalfPlane::ge(Axis::x1, x.x1));
    return r.with(o == Orientation::lower_right ? HalfPlane::le(Axis::x2, x.x2) : HalfPlane::ge(Axis::x2, x.x2));
}

/// M(x1): mass of the slab [x1_lo, x1] x [x2_lo, x2_hi] within the clip.
inline double marginal_M(const MeasureDecomposition& m, const RegionUnion& clip, double x1, const QuadratureSpec& q = {},
                         MassMode mode = MassMode::automatic) {
    const TypeSpace& s = m.space();
    if (x1 < s.x1_lo() || x1 > s.x1_hi()) throw DomainError("marginal_M: x1 outside [x1_lo, x1_hi]");
    return mu_of_region(m, clip.with(HalfPlane::le(Axis::x1, x1)), q, mode).total();
}

/// Integral of M over [t, p].
inline double hinge_tail_integral(const MeasureDecomposition& m, const RegionUnion& clip, double t, double p,
                                  const QuadratureSpec& q = {}, MassMode mode = MassMode::automatic) {
    const TypeSpace& s = m.space();
    if (!(s.x1_lo() <= t && t <= p && p <= s.x1_hi()))
        throw DomainError("hinge_tail_integral requires x1_lo <= t <= p <= x1_hi");
    if (!(p > t)) return 0.0;
    std::vector<double> cuts{t};
    for (double b : clip.x1_breakpoints())
        if (b > t && b < p) cuts.push_back(b);
    cuts.push_back(p);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        total += integrate_1d([&](double z) { return marginal_M(m, clip, z, q, mode); }, cuts[i], cuts[i + 1], q,
                              "hinge tail");
    return total;
}

/// |int u dmu - int [(x + v_kappa).grad u - (u - u(corner))] f dx|.
inline double ibp_residual(const DensityModel& d, const AdPaymentSchedule& kappa, const TestFunction& u,
                           const QuadratureSpec& q = {}) {
    if (!u.differentiable)
        throw DomainError("ibp_residual needs a differentiable test function; smooth '" + u.name + "' first");
    if (!u.value || !u.gradient) throw DomainError("ibp_residual needs both value and gradient of the test function");
    const MeasureDecomposition m(d, kappa);
    const TypeSpace& s = d.space();
    const double lhs = integrate_measure(m, whole(s), u.value, q);
    const double u0 = u.value(s.corner());
    const Trapezoid full{s.x1_lo(), s.x1_hi(), {s.x2_lo(), 0.0}, {s.x2_hi(), 0.0}};
    const double rhs = integrate_trapezoid(
        [&](double a, double b) {
            const Point x{a, b};
            const Vec2 g = u.gradient(x);
            const double k = kappa.value(x);
            return (x.x1 * g.x1 + (x.x2 + k) * g.x2 - (u.value(x) - u0)) * d(x);
        },
        full, q, "ibp rhs");
    return std::abs(lhs - rhs);
}

}  // namespace adscreen
