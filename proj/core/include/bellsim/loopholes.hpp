// Loophole injectors: fair-sampling detection losses, coincidence-window
// re-pairing of one-sided event streams, local memory strategies, and the
// detection-efficiency threshold scan for the Eberhard state.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bellsim/models.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/trial.hpp"

namespace bellsim::loopholes {

struct EfficiencyConfig {
    double eta_a = 1.0;
    double eta_b = 1.0;
};

// Outcome-blind fair sampling: each detection survives independently with
// its arm's probability, otherwise becomes a non-detection (timestamp
// cleared). Record order preserved; draws keyed by (seed, "detect", trial).
std::vector<TrialRecord> apply_detection(std::vector<TrialRecord> log,
                                         const EfficiencyConfig& cfg, std::uint64_t seed);

enum class Pairing { FixedSlots, MovingWindow };

struct CoincidenceConfig {
    double window = 1e-2; // seconds
    Pairing pairing = Pairing::MovingWindow;
};

// One detector's view of a trial: emission slot, arrival time, local
// setting and outcome.
struct SidedEvent {
    std::int64_t slot = 0;
    double t = 0.0;
    int setting = 1;
    int outcome = +1;
};

struct CoincidenceResult {
    std::vector<TrialRecord> log;
    std::int64_t ambiguous = 0; // pairings resolved among >1 in-window candidates
    std::int64_t unpaired_a = 0;
    std::int64_t unpaired_b = 0;
};

// Re-pairs two timestamp-sorted one-sided streams into trials. Fixed-slots
// pairing matches equal emission slots; the moving window repeatedly takes
// the globally earliest unpaired event and greedily pairs it with the
// earliest opposite-side event within the window. Both protocols look at
// timestamps only, never at outcomes.
CoincidenceResult apply_coincidence(std::span<const SidedEvent> a,
                                    std::span<const SidedEvent> b,
                                    const CoincidenceConfig& cfg);

// Splits a log with timestamps into the two one-sided detection streams.
std::pair<std::vector<SidedEvent>, std::vector<SidedEvent>> split_sides(
    std::span<const TrialRecord> log);

// What a local memory strategy is allowed to see when answering: its own
// current setting, the shared per-trial randomness, and the public record
// of finished trials. The other arm's current setting is not representable.
struct MemoryView {
    std::span<const TrialRecord> past;
    RngStream shared; // identical copy on both arms, fresh each trial
};

struct MemoryStrategy {
    std::string id;
    std::function<int(int own_setting, const MemoryView&)> alice;
    std::function<int(int own_setting, const MemoryView&)> bob;
};

// Wraps a memory strategy as a sampler usable wherever a model is. The
// shared per-trial stream is the sampler's own rng argument, so a
// memoryless strategy reproduces its closed-form counterpart draw for
// draw under the same run seed.
std::unique_ptr<models::Sampler> memory_adversary(MemoryStrategy strategy);

// Built-ins.
//
// Predicts the other arm's current setting by extrapolating its past
// pattern and plays the signalling-optimal table against the prediction.
// Against periodic settings it wins every trial; against uniform random
// settings the prediction is a coin flip and the win rate is exactly the
// local bound 3/4.
MemoryStrategy settings_pattern_exploiter();

// Plays the deterministic boundary tables (CHSH = 2), re-deciding every
// `refresh` trials which cell to forfeit: always the one where a loss
// moves the per-cell ratio estimate least (most samples, least slack).
// The per-trial win probability stays exactly 3/4, but losses
// systematically land where the standard estimator down-weights them, so
// a per-trial i.i.d. analysis of S rejects too often.
MemoryStrategy outcome_feedback_exploiter(int refresh = 1);

// A memoryless control: the shared-spin sign strategy evaluated through
// the memory interface. Statistics coincide with ModelKind::SignLhv.
MemoryStrategy memoryless_sign_strategy(std::vector<Direction> alice,
                                        std::vector<Direction> bob);

// Registers the built-ins as model automatons:
//   "memory:pattern", "memory:feedback", "memory:none" (sign strategy at
//   the optimal singlet angles).
void install_automatons();

// Largest Clauser-Horne value S_++ reachable over polarizer angle
// quadruples at detection efficiency eta (exact state probabilities, no
// sampling): coarse grid seeding plus Nelder-Mead refinement.
double max_ch_violation(double r, double eta, double grid_step_deg = 15.0);

// Smallest symmetric-arm efficiency at which some angle quadruple still
// violates S_++ <= 0, by bisection to 1e-4 over the angle-optimized exact
// value. For the maximally entangled state this is 2(sqrt(2)-1) ~ 0.8284;
// it decreases toward 2/3 as r -> 0.
double efficiency_threshold(double r, double grid_step_deg = 15.0);

} // namespace bellsim::loopholes
