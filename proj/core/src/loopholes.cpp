#include "bellsim/loopholes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bellsim/stats.hpp"

namespace bellsim::loopholes {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<TrialRecord> apply_detection(std::vector<TrialRecord> log,
                                         const EfficiencyConfig& cfg, std::uint64_t seed) {
    if (!(cfg.eta_a >= 0.0 && cfg.eta_a <= 1.0 && cfg.eta_b >= 0.0 && cfg.eta_b <= 1.0))
        throw std::invalid_argument("apply_detection: efficiencies must lie in [0,1]");
    for (TrialRecord& r : log) {
        RngStream rng = RngStream::for_trial(seed, "detect", static_cast<std::uint64_t>(r.trial));
        // Outcome-blind: the draw happens per arm regardless of the value.
        const bool keep_a = rng.next_bernoulli(cfg.eta_a);
        const bool keep_b = rng.next_bernoulli(cfg.eta_b);
        if (!keep_a && r.x) {
            r.x.reset();
            r.ta.reset();
        }
        if (!keep_b && r.y) {
            r.y.reset();
            r.tb.reset();
        }
    }
    return log;
}

std::pair<std::vector<SidedEvent>, std::vector<SidedEvent>> split_sides(
    std::span<const TrialRecord> log) {
    std::vector<SidedEvent> a, b;
    for (const TrialRecord& r : log) {
        if (r.x && r.ta) a.push_back(SidedEvent{r.trial, *r.ta, r.a, *r.x});
        if (r.y && r.tb) b.push_back(SidedEvent{r.trial, *r.tb, r.b, *r.y});
    }
    auto by_time = [](const SidedEvent& u, const SidedEvent& v) { return u.t < v.t; };
    std::sort(a.begin(), a.end(), by_time);
    std::sort(b.begin(), b.end(), by_time);
    return {std::move(a), std::move(b)};
}

namespace {

CoincidenceResult pair_fixed_slots(std::span<const SidedEvent> a, std::span<const SidedEvent> b) {
    CoincidenceResult res;
    std::size_t ib = 0;
    std::vector<SidedEvent> bs(b.begin(), b.end());
    std::sort(bs.begin(), bs.end(),
              [](const SidedEvent& u, const SidedEvent& v) { return u.slot < v.slot; });
    std::vector<SidedEvent> as(a.begin(), a.end());
    std::sort(as.begin(), as.end(),
              [](const SidedEvent& u, const SidedEvent& v) { return u.slot < v.slot; });
    std::int64_t next_trial = 0;
    for (const SidedEvent& ea : as) {
        while (ib < bs.size() && bs[ib].slot < ea.slot) {
            ++res.unpaired_b;
            ++ib;
        }
        if (ib < bs.size() && bs[ib].slot == ea.slot) {
            TrialRecord r;
            r.trial = next_trial++;
            r.a = ea.setting;
            r.b = bs[ib].setting;
            r.x = ea.outcome;
            r.y = bs[ib].outcome;
            r.ta = ea.t;
            r.tb = bs[ib].t;
            res.log.push_back(std::move(r));
            ++ib;
        } else {
            ++res.unpaired_a;
        }
    }
    res.unpaired_b += static_cast<std::int64_t>(bs.size() - ib);
    return res;
}

CoincidenceResult pair_moving_window(std::span<const SidedEvent> a, std::span<const SidedEvent> b,
                                     double window) {
    CoincidenceResult res;
    std::size_t ia = 0, ib = 0;
    std::int64_t next_trial = 0;
    while (ia < a.size() && ib < b.size()) {
        // Take the globally earliest unpaired event and look across.
        if (a[ia].t <= b[ib].t) {
            const SidedEvent& ea = a[ia];
            if (b[ib].t - ea.t <= window) {
                if (ib + 1 < b.size() && b[ib + 1].t - ea.t <= window) ++res.ambiguous;
                TrialRecord r;
                r.trial = next_trial++;
                r.a = ea.setting;
                r.b = b[ib].setting;
                r.x = ea.outcome;
                r.y = b[ib].outcome;
                r.ta = ea.t;
                r.tb = b[ib].t;
                res.log.push_back(std::move(r));
                ++ia;
                ++ib;
            } else {
                ++res.unpaired_a;
                ++ia;
            }
        } else {
            const SidedEvent& eb = b[ib];
            if (a[ia].t - eb.t <= window) {
                if (ia + 1 < a.size() && a[ia + 1].t - eb.t <= window) ++res.ambiguous;
                TrialRecord r;
                r.trial = next_trial++;
                r.a = a[ia].setting;
                r.b = eb.setting;
                r.x = a[ia].outcome;
                r.y = eb.outcome;
                r.ta = a[ia].t;
                r.tb = eb.t;
                res.log.push_back(std::move(r));
                ++ia;
                ++ib;
            } else {
                ++res.unpaired_b;
                ++ib;
            }
        }
    }
    res.unpaired_a += static_cast<std::int64_t>(a.size() - ia);
    res.unpaired_b += static_cast<std::int64_t>(b.size() - ib);
    return res;
}

} // namespace

CoincidenceResult apply_coincidence(std::span<const SidedEvent> a, std::span<const SidedEvent> b,
                                    const CoincidenceConfig& cfg) {
    if (!(cfg.window > 0.0)) throw std::invalid_argument("apply_coincidence: window must be > 0");
    for (std::size_t i = 1; i < a.size(); ++i)
        if (a[i].t < a[i - 1].t)
            throw std::invalid_argument("apply_coincidence: stream A timestamps not sorted");
    for (std::size_t i = 1; i < b.size(); ++i)
        if (b[i].t < b[i - 1].t)
            throw std::invalid_argument("apply_coincidence: stream B timestamps not sorted");
    return cfg.pairing == Pairing::FixedSlots ? pair_fixed_slots(a, b)
                                              : pair_moving_window(a, b, cfg.window);
}

namespace {

class MemorySampler final : public models::Sampler {
public:
    explicit MemorySampler(MemoryStrategy s) : s_(std::move(s)) {}

    models::TrialOutcome sample(int i, int j, RngStream rng) override {
        // Each arm receives its own copy of the shared stream and the same
        // public past; they cannot see each other's current setting.
        const MemoryView view{std::span<const TrialRecord>(past_), rng};
        models::TrialOutcome o;
        o.x = s_.alice(i, view);
        o.y = s_.bob(j, view);
        if ((o.x && *o.x != -1 && *o.x != +1) || (o.y && *o.y != -1 && *o.y != +1))
            throw std::logic_error("memory strategy answered outside {-1,+1}");
        return o;
    }

    void observe(const TrialRecord& r) override {
        TrialRecord pub;
        pub.trial = r.trial;
        pub.a = r.a;
        pub.b = r.b;
        pub.x = r.x;
        pub.y = r.y;
        past_.push_back(std::move(pub));
    }

private:
    MemoryStrategy s_;
    std::vector<TrialRecord> past_;
};

} // namespace

std::unique_ptr<models::Sampler> memory_adversary(MemoryStrategy strategy) {
    if (!strategy.alice || !strategy.bob)
        throw std::invalid_argument("memory_adversary: both party rules required");
    return std::make_unique<MemorySampler>(std::move(strategy));
}

MemoryStrategy settings_pattern_exploiter() {
    MemoryStrategy s;
    s.id = "memory:pattern";
    s.alice = [](int, const MemoryView&) { return +1; };
    s.bob = [](int own, const MemoryView& view) {
        // Extrapolate Alice's next setting from her last one (period-2
        // switching); a coin flip against uniform settings.
        int predicted = 1;
        if (!view.past.empty()) predicted = view.past.back().a == 1 ? 2 : 1;
        // Alice answers +1, so answer the target sign of the predicted cell
        // (minus cell (2,2)).
        return (predicted == 2 && own == 2) ? -1 : +1;
    };
    return s;
}

namespace {

// The four deterministic boundary tables for the sign pattern with the
// minus on cell (2,2); table c forfeits exactly cell c and wins the rest.
struct BoundaryTables {
    // f[c][setting-1], g[c][setting-1]
    static constexpr int f[4][2] = {{+1, -1}, {+1, +1}, {+1, -1}, {+1, +1}};
    static constexpr int g[4][2] = {{-1, +1}, {+1, -1}, {+1, +1}, {+1, +1}};
};

struct FeedbackState {
    std::size_t processed = 0;
    int anti_cell = 3;
    double sum_xy[4] = {0, 0, 0, 0};
    std::int64_t n[4] = {0, 0, 0, 0};

    void sync(std::span<const TrialRecord> past, int refresh) {
        static constexpr int w[4] = {+1, +1, +1, -1};
        while (processed < past.size()) {
            const TrialRecord& r = past[processed];
            if (r.a >= 1 && r.a <= 2 && r.b >= 1 && r.b <= 2 && r.both_detected()) {
                const int c = (r.a - 1) * 2 + (r.b - 1);
                sum_xy[c] += static_cast<double>(*r.x * *r.y);
                ++n[c];
            }
            ++processed;
            if (processed % static_cast<std::size_t>(refresh) == 0) {
                // Forfeit the cell where one more loss dents its ratio
                // estimate the least: the most-sampled cell, with the
                // realized correlation as tie-breaker. The per-cell
                // estimator weights a loss there by the smallest 1/n.
                double best = -1e30;
                int best_c = anti_cell;
                for (int c = 0; c < 4; ++c) {
                    const double e = n[c] > 0 ? sum_xy[c] / static_cast<double>(n[c]) : 1.0;
                    const double score =
                        static_cast<double>(n[c]) + 0.25 * (1.0 - w[c] * e);
                    if (score > best + 1e-12) {
                        best = score;
                        best_c = c;
                    }
                }
                anti_cell = best_c;
            }
        }
    }
};

} // namespace

MemoryStrategy outcome_feedback_exploiter(int refresh) {
    if (refresh < 1) throw std::invalid_argument("outcome_feedback_exploiter: refresh >= 1");
    MemoryStrategy s;
    s.id = "memory:feedback";
    auto alice_state = std::make_shared<FeedbackState>();
    auto bob_state = std::make_shared<FeedbackState>();
    // Separate state replicas per arm; they evolve identically because both
    // consume the identical public past.
    s.alice = [alice_state, refresh](int own, const MemoryView& view) {
        alice_state->sync(view.past, refresh);
        return BoundaryTables::f[alice_state->anti_cell][own - 1];
    };
    s.bob = [bob_state, refresh](int own, const MemoryView& view) {
        bob_state->sync(view.past, refresh);
        return BoundaryTables::g[bob_state->anti_cell][own - 1];
    };
    return s;
}

MemoryStrategy memoryless_sign_strategy(std::vector<Direction> alice,
                                        std::vector<Direction> bob) {
    MemoryStrategy s;
    s.id = "memory:none";
    auto a_dirs = std::make_shared<std::vector<Direction>>(std::move(alice));
    auto b_dirs = std::make_shared<std::vector<Direction>>(std::move(bob));
    s.alice = [a_dirs](int own, const MemoryView& view) {
        RngStream rng = view.shared;
        const Direction phi = uniform_direction((*a_dirs)[0].dim(), rng);
        return dot((*a_dirs)[static_cast<std::size_t>(own - 1)], phi) >= 0.0 ? +1 : -1;
    };
    s.bob = [b_dirs](int own, const MemoryView& view) {
        RngStream rng = view.shared;
        const Direction phi = uniform_direction((*b_dirs)[0].dim(), rng);
        return -dot((*b_dirs)[static_cast<std::size_t>(own - 1)], phi) >= 0.0 ? +1 : -1;
    };
    return s;
}

void install_automatons() {
    models::register_automaton("memory:pattern", [](const models::ModelSpec&) {
        return memory_adversary(settings_pattern_exploiter());
    });
    models::register_automaton("memory:feedback", [](const models::ModelSpec&) {
        return memory_adversary(outcome_feedback_exploiter());
    });
    models::register_automaton("memory:none", [](const models::ModelSpec& m) {
        std::vector<Direction> a = m.alice, b = m.bob;
        if (a.empty() || b.empty()) {
            // Optimal singlet angles in the plane.
            a = {direction_from_angle(0.0), direction_from_angle(kPi / 2)};
            b = {direction_from_angle(5 * kPi / 4), direction_from_angle(3 * kPi / 4)};
        }
        return memory_adversary(memoryless_sign_strategy(std::move(a), std::move(b)));
    });
}

namespace {

double ch_value(double r, double eta, const std::array<double, 4>& ang) {
    stats::ChProbabilities probs;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const models::OutcomeDist d =
                models::eberhard_probs(r, ang[static_cast<std::size_t>(i)],
                                       ang[static_cast<std::size_t>(2 + j)], eta);
            for (int x : {-1, +1})
                for (int y : {-1, +1})
                    probs.pair[i][j][x == +1 ? 1 : 0][y == +1 ? 1 : 0] = d.at(x, y);
            if (j == 0)
                for (int x : {-1, +1}) probs.single_x[i][x == +1 ? 1 : 0] = d.marginal_x(x);
            if (i == 0)
                for (int y : {-1, +1}) probs.single_y[j][y == +1 ? 1 : 0] = d.marginal_y(y);
        }
    }
    return stats::ch_statistic(probs, +1, +1);
}

// Derivative-free simplex maximization over the four polarizer angles.
double nelder_mead_refine(double r, double eta, std::array<double, 4> seed) {
    using Point = std::array<double, 4>;
    auto f = [&](const Point& p) { return ch_value(r, eta, p); };

    std::array<Point, 5> simplex;
    std::array<double, 5> val;
    simplex[0] = seed;
    for (int v = 1; v <= 4; ++v) {
        simplex[static_cast<std::size_t>(v)] = seed;
        simplex[static_cast<std::size_t>(v)][static_cast<std::size_t>(v - 1)] +=
            5.0 * kPi / 180.0;
    }
    for (int v = 0; v < 5; ++v)
        val[static_cast<std::size_t>(v)] = f(simplex[static_cast<std::size_t>(v)]);

    for (int iter = 0; iter < 400; ++iter) {
        std::array<int, 5> order = {0, 1, 2, 3, 4};
        std::sort(order.begin(), order.end(),
                  [&](int u, int v) { return val[static_cast<std::size_t>(u)] >
                                             val[static_cast<std::size_t>(v)]; });
        const int best = order[0], worst = order[4], second_worst = order[3];
        if (val[static_cast<std::size_t>(best)] - val[static_cast<std::size_t>(worst)] < 1e-13)
            break;

        Point centroid{};
        for (int v : {order[0], order[1], order[2], order[3]})
            for (int d = 0; d < 4; ++d)
                centroid[static_cast<std::size_t>(d)] +=
                    simplex[static_cast<std::size_t>(v)][static_cast<std::size_t>(d)] / 4.0;

        auto blend = [&](double coef) {
            Point p;
            for (int d = 0; d < 4; ++d)
                p[static_cast<std::size_t>(d)] =
                    centroid[static_cast<std::size_t>(d)] +
                    coef * (centroid[static_cast<std::size_t>(d)] -
                            simplex[static_cast<std::size_t>(worst)][static_cast<std::size_t>(d)]);
            return p;
        };

        const Point refl = blend(1.0);
        const double f_refl = f(refl);
        if (f_refl > val[static_cast<std::size_t>(best)]) {
            const Point exp_p = blend(2.0);
            const double f_exp = f(exp_p);
            if (f_exp > f_refl) {
                simplex[static_cast<std::size_t>(worst)] = exp_p;
                val[static_cast<std::size_t>(worst)] = f_exp;
            } else {
                simplex[static_cast<std::size_t>(worst)] = refl;
                val[static_cast<std::size_t>(worst)] = f_refl;
            }
        } else if (f_refl > val[static_cast<std::size_t>(second_worst)]) {
            simplex[static_cast<std::size_t>(worst)] = refl;
            val[static_cast<std::size_t>(worst)] = f_refl;
        } else {
            const Point contr = blend(-0.5);
            const double f_contr = f(contr);
            if (f_contr > val[static_cast<std::size_t>(worst)]) {
                simplex[static_cast<std::size_t>(worst)] = contr;
                val[static_cast<std::size_t>(worst)] = f_contr;
            } else {
                for (int v = 0; v < 5; ++v) {
                    if (v == best) continue;
                    for (int d = 0; d < 4; ++d)
                        simplex[static_cast<std::size_t>(v)][static_cast<std::size_t>(d)] =
                            0.5 * (simplex[static_cast<std::size_t>(v)][static_cast<std::size_t>(d)] +
                                   simplex[static_cast<std::size_t>(best)][static_cast<std::size_t>(d)]);
                    val[static_cast<std::size_t>(v)] = f(simplex[static_cast<std::size_t>(v)]);
                }
            }
        }
    }
    return *std::max_element(val.begin(), val.end());
}

} // namespace

double max_ch_violation(double r, double eta, double grid_step_deg) {
    if (!(grid_step_deg > 0.0)) throw std::invalid_argument("max_ch_violation: bad grid step");
    const double step = grid_step_deg * kPi / 180.0;
    const int n_steps = static_cast<int>(std::floor(kPi / step));

    // Coarse grid seeding over the four angles, keep the best seeds.
    std::array<double, 4> best_seed{};
    double best = -1e30;
    std::array<double, 4> ang{};
    for (int i1 = 0; i1 < n_steps; ++i1) {
        ang[0] = i1 * step;
        for (int i2 = 0; i2 < n_steps; ++i2) {
            ang[1] = i2 * step;
            for (int j1 = 0; j1 < n_steps; ++j1) {
                ang[2] = j1 * step;
                for (int j2 = 0; j2 < n_steps; ++j2) {
                    ang[3] = j2 * step;
                    const double v = ch_value(r, eta, ang);
                    if (v > best) {
                        best = v;
                        best_seed = ang;
                    }
                }
            }
        }
    }
    return std::max(best, nelder_mead_refine(r, eta, best_seed));
}

double efficiency_threshold(double r, double grid_step_deg) {
    if (!(r > 0.0 && r <= 1.0))
        throw std::invalid_argument("efficiency_threshold: r must lie in (0,1]");
    auto violates = [&](double eta) { return max_ch_violation(r, eta, grid_step_deg) > 1e-12; };
    if (!violates(1.0))
        throw std::runtime_error("efficiency_threshold: no violation even at unit efficiency");
    double lo = 0.5, hi = 1.0;
    if (violates(lo)) return lo; // below any admissible threshold; not reachable for r in (0,1]
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        (violates(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace bellsim::loopholes
