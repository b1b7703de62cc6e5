// Estimators and hypothesis tests over counts/correlation tables: the CHSH
// and Clauser-Horne statistics, the no-signalling marginal check, Fine's
// representability test, a memory-robust martingale p-value for the CHSH
// game, Kolmogorov-Smirnov uniformity, and chi-square factorization tests.
//
// Significance is reported as p-values throughout; no report expresses
// evidence as a number of standard deviations.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bellsim/tally.hpp"
#include "bellsim/trial.hpp"

namespace bellsim::stats {

// One CHSH combination: signed sum over the four cells
// (p,q), (r,q), (r,s), (p,s) in that order. The default signs reproduce
// S = E(pq) + E(rq) + E(rs) - E(ps).
struct ChshSelection {
    int p = 1, r = 2; // Alice settings, p != r
    int q = 1, s = 2; // Bob settings, q != s
    std::array<int, 4> signs = {+1, +1, +1, -1};

    std::array<std::pair<int, int>, 4> cells() const {
        return {{{p, q}, {r, q}, {r, s}, {p, s}}};
    }
    int sign_for(int i, int j) const;
    void validate() const;
};

// The 8 one-sided CHSH forms on the 2x2 grid: 4 choices of the minus cell,
// each with both global signs.
std::vector<ChshSelection> one_sided_selections_2x2();

struct TestReport {
    double statistic = 0.0;
    double bound = 0.0;
    double p_value = 1.0;
    std::int64_t n = 0;
    std::string method;
    bool passed = true;
    std::string warning; // empty when clean
};

// Signed sum of the four selected correlations. Throws std::domain_error
// when a selected cell is absent.
double chsh_statistic(const CorrelationTable& corr, const ChshSelection& sel);

// Exact per-setting-pair probabilities for the Clauser-Horne statistic:
// pair[i][j] is the joint outcome law at (a_i, b_j) (outcome slots
// 0 = -1, 1 = +1) and single_x/y are the one-arm detection probabilities.
struct ChProbabilities {
    double pair[2][2][2][2] = {};
    double single_x[2][2] = {}; // [i][x slot]
    double single_y[2][2] = {}; // [j][y slot]
};

// Six-term Clauser-Horne combination for outcome signature (x, y):
// S_xy = p_xy(1,1) - p_xy(1,2) + p_xy(2,1) + p_xy(2,2) - p_x(2) - p_y(1).
// Bounded by [-1, 0] for every local model.
double ch_statistic(const ChProbabilities& probs, int x, int y);

// Same, with probabilities estimated from counts normalized by emitted
// trials per setting pair (the normalization that needs no fair-sampling
// assumption). Requires a 2x2 grid; throws std::domain_error on zero
// denominators.
double ch_statistic(const CountsTable& counts, int x, int y);

// Marginal-equality (no-signalling) check: for each of Alice's settings,
// the spread of P(X=+1 | a_i, b_j) across j in pooled standard errors;
// statistic = the worst spread, passed iff below tol_sigma. Returns
// {alice_report, bob_report}.
std::pair<TestReport, TestReport> no_signalling_check(const CorrelationTable& corr,
                                                      double tol_sigma);

struct FineResult {
    bool representable = false;
    std::array<double, 8> values{}; // aligned with one_sided_selections_2x2()
    std::vector<ChshSelection> violated;
};

// Evaluates all 8 one-sided CHSH forms on a 2x2 table; representable
// (an LHV joint law exists, given no-signalling) iff all values <= 2.
FineResult fine_lhv_check(const CorrelationTable& corr);

// Memory-robust p-value for the CHSH game at the given selection. Each
// trial in the selection's four cells scores a win when
// sign(cell) * x * y = +1; a missing detection scores a loss. Under any
// local model, with or without memory, the conditional win probability is
// at most 3/4, so by Hoeffding-Azuma
//   p = exp(-2 N max(0, w_hat - 3/4)^2).
// The report's statistic is S_hat = 8 w_hat - 4; a warning is set when the
// realized setting frequencies are inconsistent with uniform choices.
TestReport martingale_pvalue(std::span<const TrialRecord> log, const ChshSelection& sel);

// Kolmogorov-Smirnov test against Uniform[lo, hi]; asymptotic p-value with
// the Stephens small-sample correction. Requires at least 20 values.
TestReport ks_uniformity(std::span<const double> values, double lo, double hi);

enum class Arity { Pair, Triple, Quad };

// Chi-square factorization tests on (A, B, X, Y) over both-detected
// records. Pair and triple tests compare cell counts against products of
// estimated marginals, pooling sparse cells until expected counts reach 5.
// The quad test is the conditional dependence test: per-cell 2x2
// association of (X, Y) given (A, B), summed over cells, which stays valid
// at any cell occupancy. One report per tested grouping.
std::vector<TestReport> independence_tests(std::span<const TrialRecord> log, Arity arity);

// Tail helpers shared by the tests and the CLI report.
double chi_square_survival(double statistic, double dof);
double normal_two_sided_p(double z);
double ks_p_value(double d, std::int64_t n);

} // namespace bellsim::stats
