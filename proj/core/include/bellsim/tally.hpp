// Tallying event logs into N(a_i, b_j, x, y) counts and turning counts into
// correlation estimates. The counts table is the sufficient statistic for
// every estimator downstream; tallying is a pure fold, so logs may be
// sharded across workers and the partial tables merged pointwise.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bellsim/trial.hpp"

namespace bellsim {

class CountsTable {
public:
    CountsTable() = default;
    CountsTable(int k, int l);

    int k() const noexcept { return k_; }
    int l() const noexcept { return l_; }

    // Pair counts over both-detected records; x,y in {-1,+1}.
    std::int64_t pair(int i, int j, int x, int y) const;
    // One-sided detections where the other arm reported nothing.
    std::int64_t single_x(int i, int j, int x) const;
    std::int64_t single_y(int i, int j, int y) const;
    // All records routed to this setting pair, detected or not.
    std::int64_t emitted(int i, int j) const;
    std::int64_t n_emitted() const noexcept { return n_emitted_; }
    // Detections on one arm at (i,j) irrespective of the other arm.
    std::int64_t detected_x(int i, int j, int x) const;
    std::int64_t detected_y(int i, int j, int y) const;
    std::int64_t both(int i, int j) const;

    void add(const TrialRecord& r);
    void merge(const CountsTable& other);

private:
    struct Cell {
        std::int64_t n[2][2] = {{0, 0}, {0, 0}}; // [x][y], index 0 = -1, 1 = +1
        std::int64_t sx[2] = {0, 0};             // x detected, y missing
        std::int64_t sy[2] = {0, 0};             // y detected, x missing
        std::int64_t emitted = 0;
    };

    const Cell& cell(int i, int j) const;
    Cell& cell(int i, int j);

    int k_ = 0, l_ = 0;
    std::int64_t n_emitted_ = 0;
    std::vector<Cell> cells_;
};

struct CorrelationCell {
    double e = 0.0;      // [N(++) + N(--) - N(+-) - N(-+)] / n
    double marg_x = 0.0; // P(X=+1 | a_i, b_j), over X-detected records
    double marg_y = 0.0;
    std::int64_t n = 0;   // both-detected sample size behind e
    std::int64_t n_x = 0; // X-detected sample size behind marg_x
    std::int64_t n_y = 0;
};

class CorrelationTable {
public:
    CorrelationTable() = default;
    CorrelationTable(int k, int l) : k_(k), l_(l), cells_(static_cast<std::size_t>(k) * l) {}

    int k() const noexcept { return k_; }
    int l() const noexcept { return l_; }

    // Absent when no both-detected records landed in the cell.
    const std::optional<CorrelationCell>& at(int i, int j) const;
    std::optional<CorrelationCell>& at(int i, int j);

private:
    int k_ = 0, l_ = 0;
    std::vector<std::optional<CorrelationCell>> cells_;
};

// Counts every both-detected record into its (i,j,x,y) cell and one-sided
// detections into the singles tallies. Throws std::out_of_range naming the
// offending trial index when a label falls outside the grid.
CountsTable tally(std::span<const TrialRecord> log, int k, int l);

CorrelationTable correlations(const CountsTable& counts);

} // namespace bellsim
