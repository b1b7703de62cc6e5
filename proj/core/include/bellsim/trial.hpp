// The per-trial event record shared by every module: which keys were
// pressed, what (if anything) each detector reported, and optional arrival
// timestamps. A missing detection is a first-class value (std::nullopt), not
// a dropped record; tallying policy decides what to do with it.

#pragma once

#include <any>
#include <cstdint>
#include <optional>

namespace bellsim {

enum class Party { Alice, Bob };

struct SettingLabel {
    Party party = Party::Alice;
    int index = 1; // 1-based key label a_i or b_j

    friend bool operator==(const SettingLabel&, const SettingLabel&) = default;
};

struct TrialRecord {
    std::int64_t trial = 0;
    int a = 1; // Alice's key index (1..k)
    int b = 1; // Bob's key index (1..l)
    std::optional<int> x; // -1, +1, or no detection
    std::optional<int> y;
    std::optional<double> ta; // arrival timestamps, seconds
    std::optional<double> tb;

    // Opaque hidden-state trace (e.g. models::LoopState), for debugging and
    // plots only. Never consulted by tallying or estimators.
    std::any hidden;

    bool both_detected() const noexcept { return x.has_value() && y.has_value(); }
};

} // namespace bellsim
