#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "adscreen/errors.hpp"
#include "adscreen/quadrature.hpp"

namespace adscreen {

struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    bool operator==(const Vec2&) const = default;
};

/// A buyer type: x1 is the value of the good, x2 <= 0 the value of the bad.
using Point = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x1 * b.x1 + a.x2 * b.x2; }

// ---------------------------------------------------------------------------
// Type space

/// The rectangle [x1_lo, x1_hi] x [x2_lo, x2_hi] with 0 <= x1_lo and x2_hi <= 0.
class TypeSpace {
public:
    TypeSpace(double x1_lo, double x1_hi, double x2_lo, double x2_hi)
        : x1_lo_(x1_lo), x1_hi_(x1_hi), x2_lo_(x2_lo), x2_hi_(x2_hi) {
        if (!(std::isfinite(x1_lo) && std::isfinite(x1_hi) && std::isfinite(x2_lo) && std::isfinite(x2_hi)))
            throw DomainError("type space bounds must be finite");
        if (!(0.0 <= x1_lo && x1_lo < x1_hi))
            throw DomainError("type space requires 0 <= x1_lo < x1_hi");
        if (!(x2_lo < x2_hi && x2_hi <= 0.0))
            throw DomainError("type space requires x2_lo < x2_hi <= 0");
    }

    double x1_lo() const { return x1_lo_; }
    double x1_hi() const { return x1_hi_; }
    double x2_lo() const { return x2_lo_; }
    double x2_hi() const { return x2_hi_; }
    double width() const { return x1_hi_ - x1_lo_; }
    double height() const { return x2_hi_ - x2_lo_; }
    double area() const { return width() * height(); }

    /// The lowest type, which carries the unit atom of the transformed measure.
    Point corner() const { return {x1_lo_, x2_lo_}; }

    bool contains(Point x, double slack = 0.0) const {
        return x.x1 >= x1_lo_ - slack && x.x1 <= x1_hi_ + slack && x.x2 >= x2_lo_ - slack &&
               x.x2 <= x2_hi_ + slack;
    }

    /// Uniform n1 x n2 grid including the boundary.
    std::vector<Point> grid(int n1, int n2) const {
        std::vector<Point> pts;
        pts.reserve(static_cast<std::size_t>(n1) * n2);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                pts.push_back({lerp(x1_lo_, x1_hi_, i, n1), lerp(x2_lo_, x2_hi_, j, n2)});
        return pts;
    }

    bool operator==(const TypeSpace&) const = default;

private:
    static double lerp(double lo, double hi, int i, int n) {
        if (n <= 1) return 0.5 * (lo + hi);
        if (i == n - 1) return hi;
        return lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    }

    double x1_lo_, x1_hi_, x2_lo_, x2_hi_;
};

inline std::string format_point(Point x) {
    std::ostringstream os;
    os.precision(12);
    os << "(" << x.x1 << ", " << x.x2 << ")";
    return os.str();
}

// ---------------------------------------------------------------------------
// Densities

struct Uniform {};

/// f(x) proportional to exp(-a x1 + b x2).
struct LogLinear {
    double a = 0.0;
    double b = 0.0;
};

/// f(x) proportional to P1(x1) * P2(x2); coefficients in increasing powers.
struct ProductPolynomial {
    std::vector<double> coeffs1;
    std::vector<double> coeffs2;
};

using DensityKind = std::variant<Uniform, LogLinear, ProductPolynomial>;

struct DensityValue {
    double value = 0.0;
    Vec2 grad;
};

namespace detail {

// Value and derivative of a polynomial by Horner.
inline std::pair<double, double> poly_eval(const std::vector<double>& c, double x) {
    double p = 0.0, dp = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) {
        dp = dp * x + p;
        p = p * x + c[i];
    }
    return {p, dp};
}

}  // namespace detail

/// Type density with analytic gradient. The normalization constant is always
/// recomputed by quadrature; positivity is checked on a dense grid.
class DensityModel {
public:
    DensityModel(TypeSpace space, DensityKind kind) : space_(space), kind_(std::move(kind)) {
        if (auto* ll = std::get_if<LogLinear>(&kind_)) {
            if (!std::isfinite(ll->a) || !std::isfinite(ll->b)) throw DomainError("log-linear density needs finite a, b");
        }
        if (auto* pp = std::get_if<ProductPolynomial>(&kind_)) {
            if (pp->coeffs1.empty() || pp->coeffs2.empty())
                throw DomainError("product-polynomial density needs nonempty coefficient lists");
        }
        for (Point x : space_.grid(65, 65)) {
            double v = raw(x).value;
            if (!(v > 0.0) || !std::isfinite(v))
                throw DomainError("density must be positive on the type space; fails at " + format_point(x));
        }
        QuadratureSpec q;
        q.abs_tol = 1e-13;
        const Trapezoid full{space_.x1_lo(), space_.x1_hi(), {space_.x2_lo(), 0.0}, {space_.x2_hi(), 0.0}};
        const double mass = integrate_trapezoid([&](double a, double b) { return raw({a, b}).value; }, full, q,
                                                "density normalization");
        if (!(mass > 0.0) || !std::isfinite(mass)) throw NumericError("density normalization failed");
        norm_const_ = 1.0 / mass;
    }

    static DensityModel uniform(TypeSpace s) { return DensityModel(s, Uniform{}); }
    static DensityModel log_linear(TypeSpace s, double a, double b) { return DensityModel(s, LogLinear{a, b}); }
    static DensityModel product_polynomial(TypeSpace s, std::vector<double> c1, std::vector<double> c2) {
        return DensityModel(s, ProductPolynomial{std::move(c1), std::move(c2)});
    }

    const TypeSpace& space() const { return space_; }
    const DensityKind& kind() const { return kind_; }
    double norm_const() const { return norm_const_; }

    bool is_uniform() const { return std::holds_alternative<Uniform>(kind_); }

    /// True when f does not vary with x2.
    bool uniform_in_x2() const {
        return std::visit(
            [](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) return true;
                else if constexpr (std::is_same_v<K, LogLinear>) return k.b == 0.0;
                else return std::all_of(k.coeffs2.begin() + 1, k.coeffs2.end(), [](double c) { return c == 0.0; });
            },
            kind_);
    }

    /// f(x) and its gradient. Throws DomainError outside the (closed) space.
    DensityValue eval(Point x) const {
        const double slack = 1e-9 * (1.0 + std::max(space_.width(), space_.height()));
        if (!space_.contains(x, slack))
            throw DomainError("density evaluated outside the type space at " + format_point(x));
        DensityValue d = raw(x);
        d.value *= norm_const_;
        d.grad.x1 *= norm_const_;
        d.grad.x2 *= norm_const_;
        return d;
    }

    double operator()(Point x) const { return eval(x).value; }

private:
    DensityValue raw(Point x) const {
        return std::visit(
            [&](const auto& k) -> DensityValue {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, Uniform>) {
                    return {1.0, {0.0, 0.0}};
                } else if constexpr (std::is_same_v<K, LogLinear>) {
                    const double v = std::exp(-k.a * x.x1 + k.b * x.x2);
                    return {v, {-k.a * v, k.b * v}};
                } else {
                    auto [p1, dp1] = detail::poly_eval(k.coeffs1, x.x1);
                    auto [p2, dp2] = detail::poly_eval(k.coeffs2, x.x2);
                    return {p1 * p2, {dp1 * p2, p1 * dp2}};
                }
            },
            kind_);
    }

    TypeSpace space_;
    DensityKind kind_;
    double norm_const_ = 1.0;
};

/// Density value and gradient at x.
inline DensityValue density_eval(const DensityModel& d, Point x) { return d.eval(x); }

// ---------------------------------------------------------------------------
// Third-party payment

/// kappa(x) >= 0: payment to the seller whenever the bad is allocated to x.
class AdPaymentSchedule {
public:
    using Fn = std::function<double(Point)>;

    static AdPaymentSchedule constant(double k) {
        if (!(k >= 0.0) || !std::isfinite(k)) throw DomainError("third-party payment k must be finite and >= 0");
        AdPaymentSchedule s;
        s.constant_ = k;
        return s;
    }

    /// General kappa with optional analytic partial derivative in x2.
    static AdPaymentSchedule general(Fn value, Fn d2 = {}) {
        if (!value) throw DomainError("general third-party payment needs a value function");
        AdPaymentSchedule s;
        s.value_ = std::move(value);
        s.d2_ = std::move(d2);
        return s;
    }

    bool is_constant() const { return constant_.has_value(); }
    bool has_d2() const { return is_constant() || static_cast<bool>(d2_); }

    double k() const {
        if (!constant_) throw DomainError("third-party payment is not constant");
        return *constant_;
    }

    double value(Point x) const { return constant_ ? *constant_ : value_(x); }

    double d2(Point x) const {
        if (constant_) return 0.0;
        if (!d2_) throw DomainError("general third-party payment has no analytic d/dx2");
        return d2_(x);
    }

    /// Checks finiteness and nonnegativity on a grid; returns the grid maximum.
    double check_bounded(const TypeSpace& space) const {
        if (constant_) return *constant_;
        double mx = 0.0;
        for (Point x : space.grid(65, 65)) {
            const double v = value_(x);
            if (!std::isfinite(v)) throw DomainError("third-party payment is unbounded near " + format_point(x));
            if (v < 0.0) throw DomainError("third-party payment is negative at " + format_point(x));
            mx = std::max(mx, v);
        }
        return mx;
    }

private:
    AdPaymentSchedule() = default;

    std::optional<double> constant_;
    Fn value_;
    Fn d2_;
};

// ---------------------------------------------------------------------------
// Regions

enum class Axis { x1, x2, sum };  // normals (1,0), (0,1), (1,1)
enum class Sense { le, ge };
enum class Edge { bottom, top, left, right };

inline constexpr std::array<Edge, 4> kEdges{Edge::bottom, Edge::top, Edge::left, Edge::right};

inline const char* edge_name(Edge e) {
    switch (e) {
        case Edge::bottom: return "bottom";
        case Edge::top: return "top";
        case Edge::left: return "left";
        case Edge::right: return "right";
    }
    return "?";
}

struct HalfPlane {
    Axis normal = Axis::x1;
    Sense sense = Sense::le;
    double bound = 0.0;
    bool inclusive = true;

    double project(Point x) const {
        switch (normal) {
            case Axis::x1: return x.x1;
            case Axis::x2: return x.x2;
            case Axis::sum: return x.x1 + x.x2;
        }
        return 0.0;
    }

    bool contains(Point x) const {
        const double v = project(x);
        if (sense == Sense::le) return inclusive ? v <= bound : v < bound;
        return inclusive ? v >= bound : v > bound;
    }

    static HalfPlane le(Axis a, double b, bool incl = true) { return {a, Sense::le, b, incl}; }
    static HalfPlane ge(Axis a, double b, bool incl = true) { return {a, Sense::ge, b, incl}; }
    static HalfPlane lt(Axis a, double b) { return {a, Sense::le, b, false}; }
    static HalfPlane gt(Axis a, double b) { return {a, Sense::ge, b, false}; }
};

/// Closed parameter interval along an edge (x1 for bottom/top, x2 for left/right).
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
};

/// The type space intersected with axis-aligned and diagonal half-planes.
class Region {
public:
    explicit Region(TypeSpace base, std::vector<HalfPlane> constraints = {})
        : base_(base), constraints_(std::move(constraints)) {}

    const TypeSpace& base() const { return base_; }
    const std::vector<HalfPlane>& constraints() const { return constraints_; }

    Region with(HalfPlane h) const {
        Region r = *this;
        r.constraints_.push_back(h);
        return r;
    }

    bool contains(Point x) const {
        if (!base_.contains(x)) return false;
        return std::all_of(constraints_.begin(), constraints_.end(), [&](const HalfPlane& h) { return h.contains(x); });
    }

    /// Exact cover of the region's two-dimensional part by trapezoids with
    /// affine lower/upper boundaries. Boundary flags do not matter here.
    std::vector<Trapezoid> decompose() const {
        double a = base_.x1_lo(), b = base_.x1_hi();
        double lo_const = base_.x2_lo(), hi_const = base_.x2_hi();
        std::vector<Affine> lowers, uppers;
        for (const HalfPlane& h : constraints_) {
            switch (h.normal) {
                case Axis::x1:
                    if (h.sense == Sense::le) b = std::min(b, h.bound);
                    else a = std::max(a, h.bound);
                    break;
                case Axis::x2:
                    if (h.sense == Sense::le) hi_const = std::min(hi_const, h.bound);
                    else lo_const = std::max(lo_const, h.bound);
                    break;
                case Axis::sum:
                    (h.sense == Sense::le ? uppers : lowers).push_back({h.bound, -1.0});
                    break;
            }
        }
        std::vector<Trapezoid> out;
        if (!(b > a)) return out;
        lowers.push_back({lo_const, 0.0});
        uppers.push_back({hi_const, 0.0});

        std::vector<double> cuts{a, b};
        auto add_crossings = [&](const std::vector<Affine>& p, const std::vector<Affine>& q) {
            for (const Affine& f : p)
                for (const Affine& g : q)
                    if (f.c1 != g.c1) {
                        const double x = (g.c0 - f.c0) / (f.c1 - g.c1);
                        if (x > a && x < b) cuts.push_back(x);
                    }
        };
        add_crossings(lowers, lowers);
        add_crossings(uppers, uppers);
        add_crossings(lowers, uppers);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double s0 = cuts[i], s1 = cuts[i + 1];
            if (!(s1 > s0)) continue;
            const double mid = 0.5 * (s0 + s1);
            const Affine lo = *std::max_element(lowers.begin(), lowers.end(),
                                                [&](const Affine& f, const Affine& g) { return f(mid) < g(mid); });
            const Affine hi = *std::min_element(uppers.begin(), uppers.end(),
                                                [&](const Affine& f, const Affine& g) { return f(mid) < g(mid); });
            if (!(hi(mid) > lo(mid))) continue;
            if (!out.empty() && out.back().b == s0 && out.back().lower == lo && out.back().upper == hi) {
                out.back().b = s1;
            } else {
                out.push_back({s0, s1, lo, hi});
            }
        }
        return out;
    }

    /// Portion of an edge of the base rectangle lying in the region, or
    /// nullopt when it has zero length.
    std::optional<Interval> edge_interval(Edge e) const {
        const bool horizontal = (e == Edge::bottom || e == Edge::top);
        const double fixed = e == Edge::bottom ? base_.x2_lo()
                             : e == Edge::top  ? base_.x2_hi()
                             : e == Edge::left ? base_.x1_lo()
                                               : base_.x1_hi();
        Interval iv = horizontal ? Interval{base_.x1_lo(), base_.x1_hi()} : Interval{base_.x2_lo(), base_.x2_hi()};
        for (const HalfPlane& h : constraints_) {
            const bool along = (h.normal == Axis::x1 && horizontal) || (h.normal == Axis::x2 && !horizontal);
            if (h.normal == Axis::sum || along) {
                // Bound on the edge parameter s: s <= bound - offset (or >=).
                const double offset = (h.normal == Axis::sum) ? fixed : 0.0;
                const double lim = h.bound - offset;
                if (h.sense == Sense::le) iv.hi = std::min(iv.hi, lim);
                else iv.lo = std::max(iv.lo, lim);
            } else {
                // Constraint is constant along the edge: all or nothing.
                const Point probe = horizontal ? Point{0.5 * (base_.x1_lo() + base_.x1_hi()), fixed}
                                               : Point{fixed, 0.5 * (base_.x2_lo() + base_.x2_hi())};
                if (!h.contains(probe)) return std::nullopt;
            }
        }
        if (!(iv.hi > iv.lo)) return std::nullopt;
        return iv;
    }

    bool contains_corner() const { return contains(base_.corner()); }

    /// A point of the region certifying nonemptiness, if any.
    std::optional<Point> feasible_point() const {
        auto traps = decompose();
        if (!traps.empty()) {
            const Trapezoid& t = traps.front();
            const double m = 0.5 * (t.a + t.b);
            Point p{m, 0.5 * (t.lower(m) + t.upper(m))};
            if (contains(p)) return p;
        }
        for (Edge e : kEdges) {
            if (auto iv = edge_interval(e)) {
                const double s = 0.5 * (iv->lo + iv->hi);
                Point p = e == Edge::bottom ? Point{s, base_.x2_lo()}
                          : e == Edge::top  ? Point{s, base_.x2_hi()}
                          : e == Edge::left ? Point{base_.x1_lo(), s}
                                            : Point{base_.x1_hi(), s};
                if (contains(p)) return p;
            }
        }
        if (contains_corner()) return base_.corner();
        return std::nullopt;
    }

    bool empty() const { return !feasible_point().has_value(); }

    /// x1 values where the region's boundary changes shape; functions of x1
    /// built from this region are smooth between consecutive breakpoints.
    std::vector<double> x1_breakpoints() const {
        std::vector<double> pts;
        std::vector<double> levels{base_.x2_lo(), base_.x2_hi()};
        for (const HalfPlane& h : constraints_)
            if (h.normal == Axis::x2) levels.push_back(h.bound);
        std::vector<double> sums;
        for (const HalfPlane& h : constraints_) {
            if (h.normal == Axis::x1) pts.push_back(h.bound);
            if (h.normal == Axis::sum) sums.push_back(h.bound);
        }
        for (double s : sums) {
            for (double l : levels) pts.push_back(s - l);
        }
        std::vector<double> out;
        for (double p : pts)
            if (p > base_.x1_lo() && p < base_.x1_hi()) out.push_back(p);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    TypeSpace base_;
    std::vector<HalfPlane> constraints_;
};

/// A disjoint union of regions (used for the non-convex ad-free region).
class RegionUnion {
public:
    RegionUnion() = default;
    RegionUnion(Region r) { pieces_.push_back(std::move(r)); }  // NOLINT: implicit by design of the API
    explicit RegionUnion(std::vector<Region> pieces) : pieces_(std::move(pieces)) {}

    const std::vector<Region>& pieces() const { return pieces_; }

    bool contains(Point x) const {
        return std::any_of(pieces_.begin(), pieces_.end(), [&](const Region& r) { return r.contains(x); });
    }

    RegionUnion with(HalfPlane h) const {
        std::vector<Region> out;
        out.reserve(pieces_.size());
        for (const Region& r : pieces_) out.push_back(r.with(h));
        return RegionUnion(std::move(out));
    }

    bool empty() const {
        return std::all_of(pieces_.begin(), pieces_.end(), [](const Region& r) { return r.empty(); });
    }

    std::vector<double> x1_breakpoints() const {
        std::vector<double> out;
        for (const Region& r : pieces_) {
            auto b = r.x1_breakpoints();
            out.insert(out.end(), b.begin(), b.end());
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

private:
    std::vector<Region> pieces_;
};

// ---------------------------------------------------------------------------
// Menus and mechanisms

struct MenuItem {
    double q1 = 0.0;
    double q2 = 0.0;
    double price = 0.0;

    bool is_default() const { return q1 == 0.0 && q2 == 0.0 && price == 0.0; }
    bool operator==(const MenuItem&) const = default;
};

/// A finite menu. The default item ((0,0), 0) is always present at index 0.
class Mechanism {
public:
    Mechanism() : items_{MenuItem{}} {}

    explicit Mechanism(std::vector<MenuItem> items) {
        items_.push_back(MenuItem{});
        for (const MenuItem& it : items) {
            if (!(it.q1 >= 0.0 && it.q1 <= 1.0 && it.q2 >= 0.0 && it.q2 <= 1.0))
                throw DomainError("menu allocations must lie in [0, 1]^2");
            if (!std::isfinite(it.price)) throw DomainError("menu prices must be finite");
            if (it.is_default()) continue;
            items_.push_back(it);
        }
    }

    const std::vector<MenuItem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    const MenuItem& operator[](std::size_t i) const { return items_[i]; }

private:
    std::vector<MenuItem> items_;
};

/// Coordinatewise monotonicity required of test functions on the region of
/// types receiving an allocation: +1 nondecreasing, -1 nonincreasing, 0 free.
struct MonotonicitySignature {
    int v1 = 0;
    int v2 = 0;

    static MonotonicitySignature from_allocation(double q1, double q2) {
        auto sig = [](double a) { return a == 0.0 ? 1 : (a == 1.0 ? -1 : 0); };
        return {sig(q1), sig(q2)};
    }

    bool operator==(const MonotonicitySignature&) const = default;
};

struct GoodOnly {
    double p_g = 0.0;
};
struct SingleBundle {
    double p_sb = 0.0;
};
struct AdTiered {
    double p_g = 0.0;
    double p_sb = 0.0;
};

enum class MechanismFamily { good_only, single_bundle, ad_tiered };

inline const char* family_name(MechanismFamily f) {
    switch (f) {
        case MechanismFamily::good_only: return "good_only";
        case MechanismFamily::single_bundle: return "single_bundle";
        case MechanismFamily::ad_tiered: return "ad_tiered";
    }
    return "?";
}

/// Default, ad-free purchase and bundle purchase regions.
struct RegionPartition {
    RegionUnion z;  // default item
    RegionUnion w;  // good only, allocation (1, 0)
    RegionUnion y;  // good with the bad, allocation (1, 1)
};

inline RegionPartition partition_good_only(const TypeSpace& s, double p_g) {
    return {Region(s, {HalfPlane::le(Axis::x1, p_g)}), Region(s, {HalfPlane::gt(Axis::x1, p_g)}), RegionUnion{}};
}

inline RegionPartition partition_single_bundle(const TypeSpace& s, double p_sb) {
    return {Region(s, {HalfPlane::le(Axis::sum, p_sb)}), RegionUnion{}, Region(s, {HalfPlane::gt(Axis::sum, p_sb)})};
}

inline RegionPartition partition_ad_tiered(const TypeSpace& s, double p_g, double p_sb) {
    const double cut = p_sb - p_g;
    Region z(s, {HalfPlane::le(Axis::x1, p_g), HalfPlane::le(Axis::sum, p_sb)});
    Region w(s, {HalfPlane::gt(Axis::x1, p_g), HalfPlane::le(Axis::x2, cut)});
    RegionUnion y(std::vector<Region>{Region(s, {HalfPlane::le(Axis::x1, p_g), HalfPlane::gt(Axis::sum, p_sb)}),
                                      Region(s, {HalfPlane::gt(Axis::x1, p_g), HalfPlane::gt(Axis::x2, cut)})});
    return {std::move(z), std::move(w), std::move(y)};
}

/// Good-Only, Single-Bundle or Ad-Tiered posted prices on a type space.
class CanonicalMechanism {
public:
    using Kind = std::variant<GoodOnly, SingleBundle, AdTiered>;

    static constexpr double kPriceSlack = 1e-12;

    static CanonicalMechanism good_only(const TypeSpace& s, double p_g) {
        if (!(p_g >= s.x1_lo() - kPriceSlack && p_g <= s.x1_hi() + kPriceSlack))
            throw DomainError("good-only price must lie in [x1_lo, x1_hi]");
        return CanonicalMechanism(s, GoodOnly{p_g});
    }

    static CanonicalMechanism single_bundle(const TypeSpace& s, double p_sb) {
        if (!(p_sb >= 0.0) || !std::isfinite(p_sb)) throw DomainError("single-bundle price must be finite and >= 0");
        return CanonicalMechanism(s, SingleBundle{p_sb});
    }

    static CanonicalMechanism ad_tiered(const TypeSpace& s, double p_g, double p_sb) {
        if (!(p_g >= s.x1_lo() - kPriceSlack && p_g <= s.x1_hi() + kPriceSlack))
            throw DomainError("ad-tiered p_g must lie in [x1_lo, x1_hi]");
        if (!(p_sb >= 0.0) || !std::isfinite(p_sb)) throw DomainError("ad-tiered p_sb must be finite and >= 0");
        const double cap = std::min(p_g, s.x1_lo() + s.x2_hi());
        if (p_sb > cap + kPriceSlack) {
            std::ostringstream msg;
            msg.precision(12);
            msg << "ad-tiered prices require p_sb <= min(p_g, x1_lo + x2_hi) = " << cap << "; got p_sb = " << p_sb
                << " (the complementary variant carries an extra restriction on k and is not supported)";
            throw DomainError(msg.str());
        }
        return CanonicalMechanism(s, AdTiered{p_g, p_sb});
    }

    const TypeSpace& space() const { return space_; }
    const Kind& kind() const { return kind_; }

    MechanismFamily family() const {
        if (std::holds_alternative<GoodOnly>(kind_)) return MechanismFamily::good_only;
        if (std::holds_alternative<SingleBundle>(kind_)) return MechanismFamily::single_bundle;
        return MechanismFamily::ad_tiered;
    }

    std::optional<double> p_g() const {
        if (auto* g = std::get_if<GoodOnly>(&kind_)) return g->p_g;
        if (auto* a = std::get_if<AdTiered>(&kind_)) return a->p_g;
        return std::nullopt;
    }

    std::optional<double> p_sb() const {
        if (auto* b = std::get_if<SingleBundle>(&kind_)) return b->p_sb;
        if (auto* a = std::get_if<AdTiered>(&kind_)) return a->p_sb;
        return std::nullopt;
    }

    /// Menu ordered (default, good only, bundle).
    Mechanism menu() const {
        std::vector<MenuItem> items;
        if (auto pg = p_g()) items.push_back({1.0, 0.0, *pg});
        if (auto pb = p_sb()) items.push_back({1.0, 1.0, *pb});
        return Mechanism(std::move(items));
    }

    RegionPartition regions() const {
        return std::visit(
            [&](const auto& k) -> RegionPartition {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, GoodOnly>) return partition_good_only(space_, k.p_g);
                else if constexpr (std::is_same_v<K, SingleBundle>) return partition_single_bundle(space_, k.p_sb);
                else return partition_ad_tiered(space_, k.p_g, k.p_sb);
            },
            kind_);
    }

    /// Menu item assigned to each region.
    static MenuItem z_item() { return {0.0, 0.0, 0.0}; }
    MenuItem w_item() const { return {1.0, 0.0, p_g().value_or(0.0)}; }
    MenuItem y_item() const { return {1.0, 1.0, p_sb().value_or(0.0)}; }

private:
    CanonicalMechanism(TypeSpace s, Kind k) : space_(s), kind_(k) {}

    TypeSpace space_;
    Kind kind_;
};

// ---------------------------------------------------------------------------
// Discrete type distributions

struct WeightedPoint {
    Point x;
    double probability = 0.0;
};

class DiscreteInstance {
public:
    DiscreteInstance(TypeSpace space, std::vector<WeightedPoint> points) : space_(space), points_(std::move(points)) {
        if (points_.empty()) throw DomainError("discrete instance needs at least one point");
        double total = 0.0;
        for (const WeightedPoint& p : points_) {
            if (!(p.probability > 0.0)) throw DomainError("discrete probabilities must be > 0");
            if (!space_.contains(p.x)) throw DomainError("discrete point outside the type space: " + format_point(p.x));
            total += p.probability;
        }
        if (std::abs(total - 1.0) > 1e-12) throw DomainError("discrete probabilities must sum to 1");
    }

    const TypeSpace& space() const { return space_; }
    const std::vector<WeightedPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }

private:
    TypeSpace space_;
    std::vector<WeightedPoint> points_;
};

/// Cell-center grid whose weights are the density's cell masses.
inline DiscreteInstance discretize(const DensityModel& d, int n1, int n2, const QuadratureSpec& q = {}) {
    if (n1 < 2 || n2 < 2) throw DomainError("discretize needs n1, n2 >= 2");
    const TypeSpace& s = d.space();
    const double h1 = s.width() / n1, h2 = s.height() / n2;
    std::vector<WeightedPoint> pts;
    pts.reserve(static_cast<std::size_t>(n1) * n2);
    double total = 0.0;
    for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
            const double a = s.x1_lo() + i * h1, b = (i == n1 - 1) ? s.x1_hi() : a + h1;
            const double c = s.x2_lo() + j * h2, e = (j == n2 - 1) ? s.x2_hi() : c + h2;
            double mass = 0.0;
            try {
                mass = integrate_trapezoid([&](double u, double v) { return d({u, v}); },
                                           Trapezoid{a, b, {c, 0.0}, {e, 0.0}}, q, "cell mass");
            } catch (const NumericError& err) {
                throw NumericError("discretize: cell (" + std::to_string(i) + ", " + std::to_string(j) +
                                   ") failed: " + err.what());
            }
            pts.push_back({{0.5 * (a + b), 0.5 * (c + e)}, mass});
            total += mass;
        }
    }
    for (WeightedPoint& p : pts) p.probability /= total;
    return DiscreteInstance(s, std::move(pts));
}

}  // namespace adscreen
