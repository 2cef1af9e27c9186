#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "adscreen/errors.hpp"

namespace adscreen {

/// Settings for the adaptive Gauss-Legendre integrators.
struct QuadratureSpec {
    int gauss_order = 16;
    int max_subdivisions = 12;  // maximum bisection depth per interval
    double abs_tol = 1e-10;
    double rel_tol = 1e-12;

    void validate() const {
        if (gauss_order < 4) throw DomainError("quadrature: gauss_order must be >= 4");
        if (max_subdivisions < 0) throw DomainError("quadrature: max_subdivisions must be >= 0");
        if (!(abs_tol > 0.0)) throw DomainError("quadrature: abs_tol must be > 0");
        if (!(rel_tol >= 0.0)) throw DomainError("quadrature: rel_tol must be >= 0");
    }
};

/// Nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline GaussRule compute_gauss_rule(int n) {
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace detail

/// Cached Gauss-Legendre rule of the given order. Thread-safe.
inline const GaussRule& gauss_rule(int order) {
    static std::mutex mutex;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, detail::compute_gauss_rule(order)).first;
    return it->second;
}

template <class F>
double gauss_fixed(const GaussRule& rule, F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

namespace detail {

template <class F>
double adapt(const GaussRule& rule, F& f, double a, double b, double whole, double tol, int depth,
             const QuadratureSpec& q, const char* what) {
    const double m = 0.5 * (a + b);
    const double left = gauss_fixed(rule, f, a, m);
    const double right = gauss_fixed(rule, f, m, b);
    const double refined = left + right;
    const double diff = std::abs(refined - whole);
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(left) + std::abs(right));
    if (diff <= std::max({tol, q.rel_tol * std::abs(refined), floor})) return refined;
    if (depth >= q.max_subdivisions || !(m > a && b > m)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << what << ": quadrature did not converge on cell [" << a << ", " << b << "] (estimate "
            << refined << ", error " << diff << ")";
        throw NumericError(msg.str());
    }
    return adapt(rule, f, a, m, left, 0.5 * tol, depth + 1, q, what) +
           adapt(rule, f, m, b, right, 0.5 * tol, depth + 1, q, what);
}

}  // namespace detail

/// Adaptive Gauss-Legendre integral of f over [a, b]. Throws NumericError
/// naming the failing cell when the depth limit is reached.
template <class F>
double integrate_1d(F&& f, double a, double b, const QuadratureSpec& q, const char* what = "integral") {
    if (!(b > a)) return 0.0;
    const GaussRule& rule = gauss_rule(q.gauss_order);
    const double whole = gauss_fixed(rule, f, a, b);
    return detail::adapt(rule, f, a, b, whole, q.abs_tol, 0, q, what);
}

/// x2 = c0 + c1 * x1
struct Affine {
    double c0 = 0.0;
    double c1 = 0.0;

    double operator()(double x1) const { return c0 + c1 * x1; }
    bool operator==(const Affine&) const = default;
};

/// Generalized trapezoid {x1 in [a, b], lower(x1) <= x2 <= upper(x1)}.
struct Trapezoid {
    double a = 0.0;
    double b = 0.0;
    Affine lower;
    Affine upper;

    double area() const {
        const double w = b - a;
        return 0.5 * w * ((upper(a) - lower(a)) + (upper(b) - lower(b)));
    }
};

/// Iterated adaptive integral of g(x1, x2) over a trapezoid.
template <class G>
double integrate_trapezoid(G&& g, const Trapezoid& t, const QuadratureSpec& q, const char* what = "area integral") {
    if (!(t.b > t.a)) return 0.0;
    QuadratureSpec inner = q;
    inner.abs_tol = 0.1 * q.abs_tol / std::max(1.0, t.b - t.a);
    auto column = [&](double x1) {
        const double lo = t.lower(x1);
        const double hi = t.upper(x1);
        if (!(hi > lo)) return 0.0;
        return integrate_1d([&](double x2) { return g(x1, x2); }, lo, hi, inner, what);
    };
    return integrate_1d(column, t.a, t.b, q, what);
}

}  // namespace adscreen
