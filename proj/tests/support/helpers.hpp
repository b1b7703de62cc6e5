// Shared oracles and fixtures for the test suites. Everything here is
// deliberately independent of the implementation paths it checks: the
// golden-section search, the exact rational arithmetic, the linear
// feasibility solver and the brute-force pairing oracle know nothing about
// the library internals.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "bellsim/direction.hpp"
#include "bellsim/models.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/stats.hpp"
#include "bellsim/tally.hpp"
#include "bellsim/trial.hpp"

namespace testsupport {

using namespace bellsim;

// ------------------------------------------------------------ optimization

// Grid seeding plus golden-section refinement; returns the argmax of f on
// [lo, hi] to within tol.
inline double golden_section_argmax(const std::function<double(double)>& f, double lo, double hi,
                                    double tol = 1e-10, int grid = 200) {
    double best_x = lo, best_v = f(lo);
    for (int g = 0; g <= grid; ++g) {
        const double x = lo + (hi - lo) * g / grid;
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
        }
    }
    const double span = (hi - lo) / grid;
    double a = std::max(lo, best_x - span), b = std::min(hi, best_x + span);
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// ----------------------------------------------------------------- algebra

// Exact rational arithmetic on 128-bit integers, enough for identity checks
// on small counts tables.
struct Frac {
    __int128 num = 0;
    __int128 den = 1;

    static __int128 gcd(__int128 a, __int128 b) {
        if (a < 0) a = -a;
        if (b < 0) b = -b;
        while (b) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        return a;
    }
    void reduce() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const __int128 g = gcd(num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }
    Frac() = default;
    Frac(std::int64_t n, std::int64_t d = 1) : num(n), den(d) { reduce(); }
    friend Frac operator+(Frac a, Frac b) {
        Frac r;
        r.num = a.num * b.den + b.num * a.den;
        r.den = a.den * b.den;
        r.reduce();
        return r;
    }
    friend Frac operator-(Frac a, Frac b) { return a + Frac{-1, 1} * b; }
    friend Frac operator*(Frac a, Frac b) {
        Frac r;
        r.num = a.num * b.num;
        r.den = a.den * b.den;
        r.reduce();
        return r;
    }
    friend bool operator==(const Frac& a, const Frac& b) {
        return a.num == b.num && a.den == b.den;
    }
};

// ------------------------------------------------------------ LP feasibility

// Phase-1 simplex: is there p >= 0 with A p = b? Returns the feasible point
// when one exists. Small dense problems only.
inline bool lp_feasible(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                        std::vector<double>* solution = nullptr, double tol = 1e-9) {
    const std::size_t m = A.size();
    const std::size_t n = m == 0 ? 0 : A[0].size();
    // Tableau with artificial variables; minimize their sum.
    std::vector<std::vector<double>> t(m + 1, std::vector<double>(n + m + 1, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        const double flip = b[i] < 0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) t[i][j] = flip * A[i][j];
        t[i][n + i] = 1.0;
        t[i][n + m] = flip * b[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) s += t[i][j];
        t[m][j] = -s;
    }
    double obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) obj += t[i][n + m];
    t[m][n + m] = -obj;

    std::vector<std::size_t> basis(m);
    for (std::size_t i = 0; i < m; ++i) basis[i] = n + i;

    for (int iter = 0; iter < 10000; ++iter) {
        std::size_t pivot_col = n + m;
        double best = -1e-12;
        for (std::size_t j = 0; j < n + m; ++j)
            if (t[m][j] < best) {
                best = t[m][j];
                pivot_col = j;
            }
        if (pivot_col == n + m) break; // optimal
        std::size_t pivot_row = m;
        double best_ratio = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (t[i][pivot_col] > 1e-12) {
                const double ratio = t[i][n + m] / t[i][pivot_col];
                if (pivot_row == m || ratio < best_ratio) {
                    best_ratio = ratio;
                    pivot_row = i;
                }
            }
        }
        if (pivot_row == m) break; // unbounded (cannot happen in phase 1)
        const double pv = t[pivot_row][pivot_col];
        for (auto& v : t[pivot_row]) v /= pv;
        for (std::size_t i = 0; i <= m; ++i) {
            if (i == pivot_row) continue;
            const double f = t[i][pivot_col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= n + m; ++j) t[i][j] -= f * t[pivot_row][j];
        }
        basis[pivot_row] = pivot_col;
    }
    const double residual = -t[m][n + m];
    if (residual > tol) return false;
    if (solution) {
        solution->assign(n, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (basis[i] < n) (*solution)[basis[i]] = t[i][n + m];
    }
    return true;
}

// --------------------------------------------------------------- geometry

// Random rotation matrix (Gram-Schmidt on a gaussian matrix).
inline std::vector<std::vector<double>> random_rotation(int dim, RngStream& rng) {
    std::vector<std::vector<double>> q(static_cast<std::size_t>(dim),
                                       std::vector<double>(static_cast<std::size_t>(dim)));
    for (auto& row : q)
        for (auto& v : row) v = rng.next_normal();
    for (std::size_t i = 0; i < q.size(); ++i) {
        for (std::size_t p = 0; p < i; ++p) {
            double d = 0.0;
            for (std::size_t c = 0; c < q.size(); ++c) d += q[i][c] * q[p][c];
            for (std::size_t c = 0; c < q.size(); ++c) q[i][c] -= d * q[p][c];
        }
        double norm = 0.0;
        for (double v : q[i]) norm += v * v;
        norm = std::sqrt(norm);
        for (double& v : q[i]) v /= norm;
    }
    return q;
}

inline Direction rotate(const Direction& d, const std::vector<std::vector<double>>& r) {
    std::vector<double> out(r.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i)
        for (std::size_t j = 0; j < r.size(); ++j) out[i] += r[i][j] * d[j];
    return Direction(out);
}

// -------------------------------------------------------------- simulation

// Uniform-random-settings run of a sampler; the same stream discipline the
// CLI uses.
inline std::vector<TrialRecord> simulate_log(models::Sampler& sampler, int k, int l,
                                             std::int64_t trials, std::uint64_t seed) {
    std::vector<TrialRecord> log;
    log.reserve(static_cast<std::size_t>(trials));
    for (std::int64_t t = 0; t < trials; ++t) {
        RngStream pick = RngStream::for_trial(seed, "settings", static_cast<std::uint64_t>(t));
        const int i = 1 + static_cast<int>(pick.next_below(static_cast<std::uint64_t>(k)));
        const int j = 1 + static_cast<int>(pick.next_below(static_cast<std::uint64_t>(l)));
        const auto o =
            sampler.sample(i, j, RngStream::for_trial(seed, "model", static_cast<std::uint64_t>(t)));
        TrialRecord rec;
        rec.trial = t;
        rec.a = i;
        rec.b = j;
        rec.x = o.x;
        rec.y = o.y;
        if (o.hidden) rec.hidden = *o.hidden;
        sampler.observe(rec);
        log.push_back(std::move(rec));
    }
    return log;
}

inline std::vector<TrialRecord> simulate_log(const models::ModelSpec& m, std::int64_t trials,
                                             std::uint64_t seed) {
    auto sampler = models::make_sampler(m);
    return simulate_log(*sampler, m.k(), m.l(), trials, seed);
}

// The per-trial i.i.d. z-test an experimenter might naively run: correlation
// estimates per cell, binomial variances, one-sided rejection of S <= 2 at
// nominal level alpha.
inline bool naive_chsh_ztest_rejects(const CorrelationTable& corr,
                                     const stats::ChshSelection& sel, double z_alpha = 1.645) {
    const double s = stats::chsh_statistic(corr, sel);
    double var = 0.0;
    for (const auto& [i, j] : sel.cells()) {
        const auto& c = corr.at(i, j);
        var += (1.0 - c->e * c->e) / static_cast<double>(c->n);
    }
    const double se = std::sqrt(var);
    if (se == 0.0) return s > 2.0;
    return (s - 2.0) / se > z_alpha;
}

// Optimal singlet settings from the text: a1 ~ 0, a2 ~ 90, b1 ~ 225,
// b2 ~ 135 degrees, as 1-sphere directions.
inline models::ModelSpec optimal_singlet_model() {
    constexpr double kPi = 3.14159265358979323846;
    models::ModelSpec m;
    m.kind = models::ModelKind::Singlet;
    m.alice = {direction_from_angle(0.0), direction_from_angle(kPi / 2)};
    m.bob = {direction_from_angle(5 * kPi / 4), direction_from_angle(3 * kPi / 4)};
    return m;
}

// The selection that maximizes S for the optimal singlet model: minus sign
// on cell (2,2).
inline stats::ChshSelection optimal_singlet_selection() {
    stats::ChshSelection sel;
    sel.signs = {+1, +1, -1, +1};
    return sel;
}

} // namespace testsupport
