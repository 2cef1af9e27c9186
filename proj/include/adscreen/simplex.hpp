#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "adscreen/errors.hpp"

namespace adscreen {

enum class LPStatus { optimal, unbounded, infeasible };

inline const char* lp_status_name(LPStatus s) {
    switch (s) {
        case LPStatus::optimal: return "optimal";
        case LPStatus::unbounded: return "unbounded";
        case LPStatus::infeasible: return "infeasible";
    }
    return "?";
}

struct SimplexResult {
    LPStatus status = LPStatus::infeasible;
    double value = 0.0;
    std::vector<double> x;
    long pivots = 0;
};

/// Dense two-phase simplex for  max c.x  s.t.  A x <= b, x >= 0.
/// The tableau stores only the nonbasic columns. Ratio-test ties are broken
/// lexicographically against a fixed perturbation of b, then by smallest basic
/// index; stalls switch pricing to Bland's rule.
class DenseSimplex {
public:
    DenseSimplex(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                 const std::vector<double>& c, double eps = 1e-9)
        : m_(b.size()), n_(c.size()), eps_(eps), nonbasic_(n_ + 1), basic_(m_),
          T_((m_ + 2) * (n_ + 3), 0.0) {
        if (A.size() != m_) throw DomainError("simplex: A has the wrong number of rows");
        for (std::size_t i = 0; i < m_; ++i) {
            if (A[i].size() != n_) throw DomainError("simplex: A row " + std::to_string(i) + " has the wrong width");
            for (std::size_t j = 0; j < n_; ++j) at(i, j) = A[i][j];
            basic_[i] = static_cast<long>(n_ + i);
            at(i, n_) = -1.0;  // artificial column for phase 1
            at(i, n_ + 1) = b[i];
            // Symbolic right-hand-side perturbation b + e*d for the
            // lexicographic ratio test; d is fixed, so runs are reproducible.
            at(i, n_ + 2) = 1.0 + std::fmod(0.6180339887498949 * static_cast<double>(i + 1), 1.0);
        }
        for (std::size_t j = 0; j < n_; ++j) {
            nonbasic_[j] = static_cast<long>(j);
            at(m_, j) = -c[j];
        }
        nonbasic_[n_] = -1;
        at(m_ + 1, n_) = 1.0;
    }

    /// Pivot budget; exceeding it raises NumericError with the pivot count.
    void set_max_pivots(long p) { max_pivots_ = p; }

    SimplexResult solve() {
        SimplexResult out;
        std::size_t r = 0;
        for (std::size_t i = 1; i < m_; ++i)
            if (rhs(i) < rhs(r)) r = i;
        if (m_ > 0 && rhs(r) < -eps_) {
            // Phase 1: drive the artificial variable out.
            pivot(r, n_);
            if (!run(2) || at(m_ + 1, n_ + 1) < -eps_) {
                out.status = LPStatus::infeasible;
                out.pivots = pivots_;
                return out;
            }
            for (std::size_t i = 0; i < m_; ++i) {
                if (basic_[i] != -1) continue;
                std::size_t s = 0;
                for (std::size_t j = 1; j <= n_; ++j)
                    if (better_entering(at(i, j), j, at(i, s), s)) s = j;
                pivot(i, s);
            }
        }
        const bool bounded = run(1);
        out.pivots = pivots_;
        out.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            if (basic_[i] >= 0 && static_cast<std::size_t>(basic_[i]) < n_) out.x[basic_[i]] = rhs(i);
        out.status = bounded ? LPStatus::optimal : LPStatus::unbounded;
        out.value = bounded ? at(m_, n_ + 1) : std::numeric_limits<double>::infinity();
        return out;
    }

private:
    double& at(std::size_t i, std::size_t j) { return T_[i * (n_ + 3) + j]; }
    double rhs(std::size_t i) { return at(i, n_ + 1); }

    // Smallest-value selection used only to evict a leftover artificial variable.
    bool better_entering(double v, std::size_t j, double best, std::size_t s) const {
        return v < best || (v == best && nonbasic_[j] < nonbasic_[s]);
    }

    void pivot(std::size_t r, std::size_t s) {
        if (++pivots_ > max_pivots_)
            throw NumericError("simplex: stalled after " + std::to_string(pivots_ - 1) + " pivots");
        const std::size_t w = n_ + 3;
        double* row = &T_[r * w];
        const double inv = 1.0 / row[s];
        std::vector<std::size_t> nz;
        nz.reserve(w);
        for (std::size_t j = 0; j < w; ++j)
            if (row[j] != 0.0) nz.push_back(j);
        for (std::size_t i = 0; i < m_ + 2; ++i) {
            if (i == r) continue;
            double* other = &T_[i * w];
            if (other[s] == 0.0) {
                continue;
            }
            const double f = other[s] * inv;
            for (std::size_t j : nz) other[j] -= row[j] * f;
            other[s] = row[s] * f;
        }
        for (std::size_t j = 0; j < w; ++j)
            if (j != s) row[j] *= inv;
        for (std::size_t i = 0; i < m_ + 2; ++i)
            if (i != r) T_[i * w + s] *= -inv;
        row[s] = inv;
        std::swap(basic_[r], nonbasic_[s]);
    }

    // Returns false when the objective is unbounded. Entering columns follow
    // the most negative reduced cost; after a run of degenerate pivots the
    // choice falls back to Bland's rule until the objective moves again.
    bool run(int phase) {
        const std::size_t obj = (phase == 1) ? m_ : m_ + 1;
        long degenerate_run = 0;
        for (;;) {
            const bool bland = degenerate_run >= bland_after_;
            long s = -1;
            for (std::size_t j = 0; j <= n_; ++j) {
                if (phase == 1 && nonbasic_[j] == -1) continue;
                const double d = at(obj, j);
                if (d >= -eps_) continue;
                if (s < 0 || (bland ? nonbasic_[j] < nonbasic_[s]
                                    : (d < at(obj, s) || (d == at(obj, s) && nonbasic_[j] < nonbasic_[s]))))
                    s = static_cast<long>(j);
            }
            if (s < 0) return true;
            long r = -1;
            double best_ratio = 0.0, best_pert = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double a = at(i, s);
                if (a <= pivot_tol_) continue;
                const double ratio = rhs(i) / a;
                const double pert = at(i, n_ + 2) / a;
                bool take = r < 0 || ratio < best_ratio - eps_;
                if (!take && ratio <= best_ratio + eps_)
                    take = pert < best_pert - 1e-12 * std::abs(best_pert) ||
                           (pert <= best_pert + 1e-12 * std::abs(best_pert) && basic_[i] < basic_[r]);
                if (take) {
                    r = static_cast<long>(i);
                    best_ratio = ratio;
                    best_pert = pert;
                }
            }
            if (r < 0) return false;
            degenerate_run = best_ratio <= eps_ ? degenerate_run + 1 : 0;
            pivot(static_cast<std::size_t>(r), static_cast<std::size_t>(s));
        }
    }

    std::size_t m_, n_;
    double eps_;
    double pivot_tol_ = 1e-9;  // smaller column entries are treated as roundoff
    std::vector<long> nonbasic_, basic_;
    std::vector<double> T_;
    long pivots_ = 0;
    long max_pivots_ = 5'000'000;
    long bland_after_ = 20000;
};

}  // namespace adscreen
