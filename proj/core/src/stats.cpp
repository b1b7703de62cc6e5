#include "bellsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace bellsim::stats {

namespace {
constexpr double kFineTolerance = 1e-9;
// Two-sided normal tail beyond 4 sigma, the default threshold for the
// uniform-settings precheck.
constexpr double kUniformSettingsP = 6.334e-5;
} // namespace

int ChshSelection::sign_for(int i, int j) const {
    const auto cs = cells();
    for (std::size_t m = 0; m < 4; ++m)
        if (cs[m].first == i && cs[m].second == j) return signs[m];
    throw std::domain_error("ChshSelection: cell (" + std::to_string(i) + "," +
                            std::to_string(j) + ") not in selection");
}

void ChshSelection::validate() const {
    if (p == r || q == s) throw std::invalid_argument("ChshSelection: p != r and q != s required");
    for (int sgn : signs)
        if (sgn != -1 && sgn != +1) throw std::invalid_argument("ChshSelection: signs are +-1");
}

std::vector<ChshSelection> one_sided_selections_2x2() {
    std::vector<ChshSelection> out;
    for (int minus = 0; minus < 4; ++minus) {
        for (int flip : {+1, -1}) {
            ChshSelection sel;
            for (std::size_t m = 0; m < 4; ++m)
                sel.signs[m] = flip * (static_cast<int>(m) == minus ? -1 : +1);
            out.push_back(sel);
        }
    }
    return out;
}

double chsh_statistic(const CorrelationTable& corr, const ChshSelection& sel) {
    sel.validate();
    double s = 0.0;
    const auto cs = sel.cells();
    for (std::size_t m = 0; m < 4; ++m) {
        const auto& cell = corr.at(cs[m].first, cs[m].second);
        if (!cell)
            throw std::domain_error("chsh_statistic: no data in cell (" +
                                    std::to_string(cs[m].first) + "," +
                                    std::to_string(cs[m].second) + ")");
        s += sel.signs[m] * cell->e;
    }
    return s;
}

namespace {
int slot_of(int v) {
    if (v == -1) return 0;
    if (v == +1) return 1;
    throw std::invalid_argument("outcome signature must be -1 or +1");
}
} // namespace

double ch_statistic(const ChProbabilities& probs, int x, int y) {
    const int xs = slot_of(x), ys = slot_of(y);
    return probs.pair[0][0][xs][ys] - probs.pair[0][1][xs][ys] + probs.pair[1][0][xs][ys] +
           probs.pair[1][1][xs][ys] - probs.single_x[1][xs] - probs.single_y[0][ys];
}

double ch_statistic(const CountsTable& counts, int x, int y) {
    if (counts.k() != 2 || counts.l() != 2)
        throw std::domain_error("ch_statistic: requires a 2x2 setting grid");
    ChProbabilities probs;
    for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
            const std::int64_t emitted = counts.emitted(i, j);
            if (emitted == 0)
                throw std::domain_error("ch_statistic: no emitted trials at (" +
                                        std::to_string(i) + "," + std::to_string(j) + ")");
            for (int xv : {-1, +1})
                for (int yv : {-1, +1})
                    probs.pair[i - 1][j - 1][slot_of(xv)][slot_of(yv)] =
                        static_cast<double>(counts.pair(i, j, xv, yv)) / emitted;
        }
    }
    for (int i = 1; i <= 2; ++i) {
        std::int64_t emitted = 0, det[2] = {0, 0};
        for (int j = 1; j <= 2; ++j) {
            emitted += counts.emitted(i, j);
            for (int xv : {-1, +1}) det[slot_of(xv)] += counts.detected_x(i, j, xv);
        }
        for (int s = 0; s < 2; ++s)
            probs.single_x[i - 1][s] = static_cast<double>(det[s]) / emitted;
    }
    for (int j = 1; j <= 2; ++j) {
        std::int64_t emitted = 0, det[2] = {0, 0};
        for (int i = 1; i <= 2; ++i) {
            emitted += counts.emitted(i, j);
            for (int yv : {-1, +1}) det[slot_of(yv)] += counts.detected_y(i, j, yv);
        }
        for (int s = 0; s < 2; ++s)
            probs.single_y[j - 1][s] = static_cast<double>(det[s]) / emitted;
    }
    return ch_statistic(probs, x, y);
}

namespace {

TestReport marginal_spread_report(const CorrelationTable& corr, double tol_sigma, bool alice) {
    const int outer = alice ? corr.k() : corr.l();
    const int inner = alice ? corr.l() : corr.k();
    double worst = 0.0;
    std::int64_t total = 0;
    int comparisons = 0;
    for (int i = 1; i <= outer; ++i) {
        for (int j1 = 1; j1 <= inner; ++j1) {
            const auto& c1 = alice ? corr.at(i, j1) : corr.at(j1, i);
            if (!c1) continue;
            for (int j2 = j1 + 1; j2 <= inner; ++j2) {
                const auto& c2 = alice ? corr.at(i, j2) : corr.at(j2, i);
                if (!c2) continue;
                ++comparisons;
                const double m1 = alice ? c1->marg_x : c1->marg_y;
                const double m2 = alice ? c2->marg_x : c2->marg_y;
                const std::int64_t n1 = alice ? c1->n_x : c1->n_y;
                const std::int64_t n2 = alice ? c2->n_x : c2->n_y;
                if (n1 == 0 || n2 == 0) continue;
                const double spread = std::fabs(m1 - m2);
                if (spread == 0.0) continue;
                const double pooled =
                    (m1 * static_cast<double>(n1) + m2 * static_cast<double>(n2)) /
                    (static_cast<double>(n1) + static_cast<double>(n2));
                const double var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2);
                const double z = var > 0.0 ? spread / std::sqrt(var)
                                           : std::numeric_limits<double>::infinity();
                worst = std::max(worst, z);
            }
        }
        for (int j = 1; j <= inner; ++j) {
            const auto& c = alice ? corr.at(i, j) : corr.at(j, i);
            if (c) total += alice ? c->n_x : c->n_y;
        }
    }
    TestReport rep;
    rep.statistic = worst;
    rep.bound = tol_sigma;
    rep.n = total;
    rep.method = alice ? "no-signalling:alice" : "no-signalling:bob";
    rep.passed = worst < tol_sigma;
    rep.p_value =
        comparisons > 0 ? std::min(1.0, comparisons * normal_two_sided_p(worst)) : 1.0;
    return rep;
}

} // namespace

std::pair<TestReport, TestReport> no_signalling_check(const CorrelationTable& corr,
                                                      double tol_sigma) {
    if (corr.k() < 2 || corr.l() < 2)
        throw std::domain_error("no_signalling_check: needs at least 2 settings per party");
    return {marginal_spread_report(corr, tol_sigma, true),
            marginal_spread_report(corr, tol_sigma, false)};
}

FineResult fine_lhv_check(const CorrelationTable& corr) {
    if (corr.k() != 2 || corr.l() != 2)
        throw std::domain_error("fine_lhv_check: requires a 2x2 table");
    FineResult res;
    res.representable = true;
    const auto sels = one_sided_selections_2x2();
    for (std::size_t m = 0; m < sels.size(); ++m) {
        res.values[m] = chsh_statistic(corr, sels[m]);
        if (res.values[m] > 2.0 + kFineTolerance) {
            res.representable = false;
            res.violated.push_back(sels[m]);
        }
    }
    return res;
}

TestReport martingale_pvalue(std::span<const TrialRecord> log, const ChshSelection& sel) {
    sel.validate();
    std::int64_t n = 0, wins = 0;
    std::int64_t cell_counts[2][2] = {{0, 0}, {0, 0}};
    for (const TrialRecord& rec : log) {
        int ia, jb;
        if (rec.a == sel.p)
            ia = 0;
        else if (rec.a == sel.r)
            ia = 1;
        else
            continue;
        if (rec.b == sel.q)
            jb = 0;
        else if (rec.b == sel.s)
            jb = 1;
        else
            continue;
        ++n;
        ++cell_counts[ia][jb];
        if (rec.both_detected() && sel.sign_for(rec.a, rec.b) * (*rec.x) * (*rec.y) == +1)
            ++wins;
    }

    TestReport rep;
    rep.method = "martingale:hoeffding-azuma";
    rep.bound = 2.0;
    rep.n = n;
    if (n == 0) {
        rep.warning = "no trials in the selected cells";
        return rep;
    }
    const double w_hat = static_cast<double>(wins) / static_cast<double>(n);
    rep.statistic = 8.0 * w_hat - 4.0; // S_hat
    rep.p_value = std::exp(-2.0 * static_cast<double>(n) *
                           std::pow(std::max(0.0, w_hat - 0.75), 2));
    rep.passed = rep.statistic <= rep.bound;

    // Uniform-settings precheck: multinomial chi-square on the 4 cells.
    double chi2 = 0.0;
    const double expect = static_cast<double>(n) / 4.0;
    for (const auto& row : cell_counts)
        for (std::int64_t c : row) chi2 += (c - expect) * (c - expect) / expect;
    if (chi_square_survival(chi2, 3.0) < kUniformSettingsP)
        rep.warning = "settings are not consistent with uniform independent choices";
    return rep;
}

double ks_p_value(double d, std::int64_t n) {
    // Asymptotic Kolmogorov distribution with the Stephens correction.
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    if (lambda < 1e-10) return 1.0;
    double p = 0.0;
    for (int k = 1; k <= 128; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

TestReport ks_uniformity(std::span<const double> values, double lo, double hi) {
    if (values.size() < 20)
        throw std::invalid_argument("ks_uniformity: need at least 20 values");
    if (!(hi > lo)) throw std::invalid_argument("ks_uniformity: empty support");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = std::clamp((v[i] - lo) / (hi - lo), 0.0, 1.0);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    TestReport rep;
    rep.statistic = d;
    rep.n = static_cast<std::int64_t>(v.size());
    rep.p_value = ks_p_value(d, rep.n);
    rep.method = "ks-uniform";
    // Reference threshold at the 1e-3 level used throughout the suite.
    rep.bound = 1.95 / std::sqrt(n); // K^{-1}(1 - 1e-3) ~= 1.949
    rep.passed = rep.p_value >= 1e-3;
    return rep;
}

double chi_square_survival(double statistic, double dof) {
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

double normal_two_sided_p(double z) {
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

namespace {

struct Encoded {
    std::vector<std::array<int, 4>> rows; // A, B, Xbit, Ybit
    int k = 0, l = 0;
};

Encoded encode(std::span<const TrialRecord> log) {
    Encoded e;
    for (const TrialRecord& r : log) {
        if (!r.both_detected()) continue;
        e.k = std::max(e.k, r.a);
        e.l = std::max(e.l, r.b);
        e.rows.push_back({r.a - 1, r.b - 1, *r.x == +1 ? 1 : 0, *r.y == +1 ? 1 : 0});
    }
    return e;
}

// Factorization chi-square for a subset of the four variables, expected
// counts from products of estimated marginals, sparse cells pooled in scan
// order until every pooled bucket expects at least 5.
TestReport factorization_test(const Encoded& enc, const std::vector<int>& vars) {
    const int levels_all[4] = {enc.k, enc.l, 2, 2};
    std::vector<int> levels;
    for (int v : vars) levels.push_back(levels_all[v]);
    std::size_t n_cells = 1;
    for (int lv : levels) n_cells *= static_cast<std::size_t>(lv);

    std::vector<std::int64_t> counts(n_cells, 0);
    std::vector<std::vector<std::int64_t>> marg(vars.size());
    for (std::size_t m = 0; m < vars.size(); ++m)
        marg[m].assign(static_cast<std::size_t>(levels[m]), 0);

    for (const auto& row : enc.rows) {
        std::size_t idx = 0;
        for (std::size_t m = 0; m < vars.size(); ++m) {
            idx = idx * static_cast<std::size_t>(levels[m]) +
                  static_cast<std::size_t>(row[static_cast<std::size_t>(vars[m])]);
            ++marg[m][static_cast<std::size_t>(row[static_cast<std::size_t>(vars[m])])];
        }
        ++counts[idx];
    }
    const double n = static_cast<double>(enc.rows.size());

    // Expected cell counts under full factorization.
    std::vector<double> expected(n_cells, 0.0);
    for (std::size_t idx = 0; idx < n_cells; ++idx) {
        double p = 1.0;
        std::size_t rest = idx;
        for (std::size_t m = vars.size(); m-- > 0;) {
            const std::size_t lev = static_cast<std::size_t>(levels[m]);
            p *= static_cast<double>(marg[m][rest % lev]) / n;
            rest /= lev;
        }
        expected[idx] = n * p;
    }

    // Pool sparse cells in scan order.
    double chi2 = 0.0;
    int pools = 0;
    double obs_acc = 0.0, exp_acc = 0.0;
    for (std::size_t idx = 0; idx < n_cells; ++idx) {
        obs_acc += static_cast<double>(counts[idx]);
        exp_acc += expected[idx];
        if (exp_acc >= 5.0) {
            chi2 += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
            ++pools;
            obs_acc = exp_acc = 0.0;
        }
    }
    if (exp_acc > 0.0) {
        chi2 += (obs_acc - exp_acc) * (obs_acc - exp_acc) / exp_acc;
        ++pools;
    }

    int dof = pools - 1;
    for (std::size_t m = 0; m < vars.size(); ++m) dof -= levels[m] - 1;
    dof = std::max(dof, 1);

    static const char* names[4] = {"A", "B", "X", "Y"};
    std::string label = "chi2:(";
    for (std::size_t m = 0; m < vars.size(); ++m)
        label += std::string(m ? "," : "") + names[vars[m]];
    label += ")";

    TestReport rep;
    rep.statistic = chi2;
    rep.bound = static_cast<double>(dof);
    rep.n = enc.rows.size();
    rep.method = label;
    rep.p_value = chi_square_survival(chi2, static_cast<double>(dof));
    rep.passed = rep.p_value >= 1e-3;
    return rep;
}

// Conditional (X,Y) association given (A,B): per-cell deviation of the
// product mean from its globally estimated null value, scaled by the null
// variance of x*y, summed over occupied cells. Each term has unit mean
// under the factorized null at any occupancy, so no pooling is needed.
TestReport conditional_quad_test(const Encoded& enc) {
    std::map<std::pair<int, int>, std::array<std::int64_t, 4>> cells;
    double mx = 0.0, my = 0.0;
    for (const auto& row : enc.rows) {
        auto& c = cells[{row[0], row[1]}];
        ++c[static_cast<std::size_t>(row[2] * 2 + row[3])];
        mx += row[2] ? 1.0 : -1.0;
        my += row[3] ? 1.0 : -1.0;
    }
    const double n = static_cast<double>(enc.rows.size());
    mx /= n;
    my /= n;
    const double mu = mx * my;       // null mean of x*y
    const double denom = 1.0 - mu * mu; // null variance of x*y

    double stat = 0.0;
    std::int64_t dof = 0;
    for (const auto& [cell, c] : cells) {
        const double nc = static_cast<double>(c[0] + c[1] + c[2] + c[3]);
        // mean of x*y in the cell: ++ and -- agree, +- and -+ differ
        const double e_cell =
            (static_cast<double>(c[3] + c[0]) - static_cast<double>(c[1] + c[2])) / nc;
        if (denom > 0.0) {
            stat += nc * (e_cell - mu) * (e_cell - mu) / denom;
            ++dof;
        }
    }
    TestReport rep;
    rep.statistic = stat;
    rep.bound = static_cast<double>(dof);
    rep.n = enc.rows.size();
    rep.method = "chi2-cond:(X,Y)|(A,B)";
    rep.p_value = chi_square_survival(stat, static_cast<double>(dof));
    rep.passed = rep.p_value >= 1e-3;
    return rep;
}

} // namespace

std::vector<TestReport> independence_tests(std::span<const TrialRecord> log, Arity arity) {
    const Encoded enc = encode(log);
    if (enc.rows.empty()) throw std::invalid_argument("independence_tests: empty log");
    std::vector<TestReport> out;
    switch (arity) {
    case Arity::Pair:
        for (const auto& pair : std::vector<std::vector<int>>{
                 {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}})
            out.push_back(factorization_test(enc, pair));
        break;
    case Arity::Triple:
        for (const auto& triple : std::vector<std::vector<int>>{
                 {0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}})
            out.push_back(factorization_test(enc, triple));
        break;
    case Arity::Quad: out.push_back(conditional_quad_test(enc)); break;
    }
    return out;
}

} // namespace bellsim::stats
