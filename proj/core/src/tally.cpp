#include "bellsim/tally.hpp"

#include <stdexcept>
#include <string>

namespace bellsim {

namespace {
int outcome_bit(int v) {
    if (v == -1) return 0;
    if (v == +1) return 1;
    throw std::invalid_argument("outcome must be -1 or +1, got " + std::to_string(v));
}
} // namespace

CountsTable::CountsTable(int k, int l) : k_(k), l_(l) {
    if (k < 1 || l < 1) throw std::invalid_argument("CountsTable: grid sizes must be >= 1");
    cells_.resize(static_cast<std::size_t>(k) * l);
}

const CountsTable::Cell& CountsTable::cell(int i, int j) const {
    if (i < 1 || i > k_ || j < 1 || j > l_)
        throw std::out_of_range("CountsTable: cell (" + std::to_string(i) + "," +
                                std::to_string(j) + ") outside " + std::to_string(k_) + "x" +
                                std::to_string(l_) + " grid");
    return cells_[static_cast<std::size_t>(i - 1) * l_ + (j - 1)];
}

CountsTable::Cell& CountsTable::cell(int i, int j) {
    return const_cast<Cell&>(static_cast<const CountsTable*>(this)->cell(i, j));
}

std::int64_t CountsTable::pair(int i, int j, int x, int y) const {
    return cell(i, j).n[outcome_bit(x)][outcome_bit(y)];
}
std::int64_t CountsTable::single_x(int i, int j, int x) const {
    return cell(i, j).sx[outcome_bit(x)];
}
std::int64_t CountsTable::single_y(int i, int j, int y) const {
    return cell(i, j).sy[outcome_bit(y)];
}
std::int64_t CountsTable::emitted(int i, int j) const { return cell(i, j).emitted; }

std::int64_t CountsTable::detected_x(int i, int j, int x) const {
    const Cell& c = cell(i, j);
    const int xb = outcome_bit(x);
    return c.sx[xb] + c.n[xb][0] + c.n[xb][1];
}
std::int64_t CountsTable::detected_y(int i, int j, int y) const {
    const Cell& c = cell(i, j);
    const int yb = outcome_bit(y);
    return c.sy[yb] + c.n[0][yb] + c.n[1][yb];
}
std::int64_t CountsTable::both(int i, int j) const {
    const Cell& c = cell(i, j);
    return c.n[0][0] + c.n[0][1] + c.n[1][0] + c.n[1][1];
}

void CountsTable::add(const TrialRecord& r) {
    if (r.a < 1 || r.a > k_ || r.b < 1 || r.b > l_)
        throw std::out_of_range("tally: trial " + std::to_string(r.trial) + " has label (" +
                                std::to_string(r.a) + "," + std::to_string(r.b) +
                                ") outside the " + std::to_string(k_) + "x" +
                                std::to_string(l_) + " grid");
    Cell& c = cell(r.a, r.b);
    ++c.emitted;
    ++n_emitted_;
    if (r.x && r.y) {
        ++c.n[outcome_bit(*r.x)][outcome_bit(*r.y)];
    } else if (r.x) {
        ++c.sx[outcome_bit(*r.x)];
    } else if (r.y) {
        ++c.sy[outcome_bit(*r.y)];
    }
}

void CountsTable::merge(const CountsTable& other) {
    if (other.k_ != k_ || other.l_ != l_)
        throw std::invalid_argument("CountsTable::merge: grid mismatch");
    for (std::size_t idx = 0; idx < cells_.size(); ++idx) {
        Cell& c = cells_[idx];
        const Cell& o = other.cells_[idx];
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) c.n[x][y] += o.n[x][y];
        for (int x = 0; x < 2; ++x) c.sx[x] += o.sx[x];
        for (int y = 0; y < 2; ++y) c.sy[y] += o.sy[y];
        c.emitted += o.emitted;
    }
    n_emitted_ += other.n_emitted_;
}

CountsTable tally(std::span<const TrialRecord> log, int k, int l) {
    CountsTable t(k, l);
    for (const TrialRecord& r : log) t.add(r);
    return t;
}

const std::optional<CorrelationCell>& CorrelationTable::at(int i, int j) const {
    if (i < 1 || i > k_ || j < 1 || j > l_)
        throw std::out_of_range("CorrelationTable: cell outside grid");
    return cells_[static_cast<std::size_t>(i - 1) * l_ + (j - 1)];
}
std::optional<CorrelationCell>& CorrelationTable::at(int i, int j) {
    return const_cast<std::optional<CorrelationCell>&>(
        static_cast<const CorrelationTable*>(this)->at(i, j));
}

CorrelationTable correlations(const CountsTable& counts) {
    CorrelationTable tbl(counts.k(), counts.l());
    for (int i = 1; i <= counts.k(); ++i) {
        for (int j = 1; j <= counts.l(); ++j) {
            const std::int64_t n = counts.both(i, j);
            if (n == 0) continue; // cell stays absent
            CorrelationCell c;
            c.n = n;
            const std::int64_t agree = counts.pair(i, j, +1, +1) + counts.pair(i, j, -1, -1);
            const std::int64_t differ = counts.pair(i, j, +1, -1) + counts.pair(i, j, -1, +1);
            c.e = static_cast<double>(agree - differ) / static_cast<double>(n);
            c.n_x = counts.detected_x(i, j, +1) + counts.detected_x(i, j, -1);
            c.n_y = counts.detected_y(i, j, +1) + counts.detected_y(i, j, -1);
            c.marg_x = c.n_x > 0 ? static_cast<double>(counts.detected_x(i, j, +1)) / c.n_x : 0.0;
            c.marg_y = c.n_y > 0 ? static_cast<double>(counts.detected_y(i, j, +1)) / c.n_y : 0.0;
            tbl.at(i, j) = c;
        }
    }
    return tbl;
}

} // namespace bellsim
