// Exact rational check of the CH decomposition identity
//   S = S_++ + S_-- - S_+- - S_-+
// on a 2x2 counts table, with every probability emission-normalized. Used
// by both the unit and acceptance suites.

#pragma once

#include "bellsim/tally.hpp"
#include "support/helpers.hpp"

namespace testsupport {

inline bool ch_identity_holds_exactly(const bellsim::CountsTable& t) {
    using bellsim::CountsTable;
    auto pair_frac = [&](int i, int j, int x, int y) {
        return Frac(t.pair(i, j, x, y), t.emitted(i, j));
    };
    auto single_x_frac = [&](int i, int x) {
        std::int64_t det = 0, emit = 0;
        for (int j = 1; j <= 2; ++j) {
            det += t.detected_x(i, j, x);
            emit += t.emitted(i, j);
        }
        return Frac(det, emit);
    };
    auto single_y_frac = [&](int j, int y) {
        std::int64_t det = 0, emit = 0;
        for (int i = 1; i <= 2; ++i) {
            det += t.detected_y(i, j, y);
            emit += t.emitted(i, j);
        }
        return Frac(det, emit);
    };
    auto s_sig = [&](int x, int y) {
        return pair_frac(1, 1, x, y) - pair_frac(1, 2, x, y) + pair_frac(2, 1, x, y) +
               pair_frac(2, 2, x, y) - single_x_frac(2, x) - single_y_frac(1, y);
    };
    auto e_cell = [&](int i, int j) {
        return pair_frac(i, j, 1, 1) + pair_frac(i, j, -1, -1) - pair_frac(i, j, 1, -1) -
               pair_frac(i, j, -1, 1);
    };
    const Frac lhs = e_cell(1, 1) - e_cell(1, 2) + e_cell(2, 1) + e_cell(2, 2);
    const Frac rhs = s_sig(1, 1) + s_sig(-1, -1) - s_sig(1, -1) - s_sig(-1, 1);
    return lhs == rhs;
}

// Random 2x2 counts table with one-sided detections mixed in.
inline bellsim::CountsTable random_counts_table(bellsim::RngStream& rng,
                                                std::int64_t max_count = 40) {
    bellsim::CountsTable t(2, 2);
    for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
            bellsim::TrialRecord r;
            r.a = i;
            r.b = j;
            for (int x : {-1, +1}) {
                for (int y : {-1, +1}) {
                    const auto n = rng.next_below(static_cast<std::uint64_t>(max_count)) + 1;
                    r.x = x;
                    r.y = y;
                    for (std::uint64_t q = 0; q < n; ++q) t.add(r);
                }
            }
            r.x = +1;
            r.y.reset();
            for (std::uint64_t q = 0; q < rng.next_below(5); ++q) t.add(r);
            r.x.reset();
            r.y = -1;
            for (std::uint64_t q = 0; q < rng.next_below(5); ++q) t.add(r);
        }
    }
    return t;
}

} // namespace testsupport
