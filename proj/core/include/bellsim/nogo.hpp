// Two-party distributed-computing challenge. A referee runs trials against
// two isolated party automata: each trial it hands both parties identical
// hidden data (SHARE), then independent uniform settings (SETTING), and
// collects answers (ANSWER). Locality is structural: a party's interface
// exposes only its own setting, the shared data, and the public record of
// finished trials. The final verdict is the CHSH statistic plus the
// memory-robust martingale p-value; no local strategy beats the bound.

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bellsim/models.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/stats.hpp"
#include "bellsim/trial.hpp"

namespace bellsim::nogo {

class PartyAutomaton {
public:
    virtual ~PartyAutomaton() = default;
    virtual std::string name() const = 0;
    // Per-trial hidden data, delivered before any setting exists. `past` is
    // the public record of earlier trials (both parties' settings and
    // answers; exchanging it between trials is subluminal).
    virtual void init(std::int64_t trial, RngStream shared,
                      std::span<const TrialRecord> past) = 0;
    virtual int respond(int setting) = 0;
};

// Test-only interface for the cheat mode: the referee leaks the other
// party's setting before respond(). Exists to show the harness can tell a
// signalling strategy from a local one; honest runs never call it.
class CheatParty : public PartyAutomaton {
public:
    virtual void leak_other_setting(int setting) = 0;
};

struct RefereeConfig {
    std::int64_t n_trials = 1000;
    std::uint64_t seed = 0;
    stats::ChshSelection sel;
    std::string transcript_path; // message JSONL; empty = no transcript
    bool cheat_leak = false;     // enables LEAK messages (negative testing)
};

struct ChallengeReport {
    stats::TestReport chsh;       // statistic = S at cfg.sel
    stats::TestReport martingale; // game p-value at cfg.sel
    std::vector<TrialRecord> log; // analyze-compatible trial records
};

// Thrown when a party breaks the per-trial protocol (answer outside
// {-1,+1}, or a response requested out of order).
struct ProtocolViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ChallengeReport run_challenge(PartyAutomaton& alice, PartyAutomaton& bob,
                              const RefereeConfig& cfg);

// Static locality audit of a message transcript: per trial the order must
// be SHARE(alice), SHARE(bob) with identical payloads, then SETTINGs, then
// ANSWERs; any LEAK message or misordering is reported.
struct AuditResult {
    bool ok = true;
    std::vector<std::string> problems;
};
AuditResult audit_transcript(const std::string& path);

// Named strategies for the zoo and the CLI.
struct StrategyPair {
    std::string name;
    std::unique_ptr<PartyAutomaton> alice;
    std::unique_ptr<PartyAutomaton> bob;
};

// Builds one named strategy pair. Known ids:
//   det:<a>:<b>       deterministic tables, a, b in 0..15 (own setting and
//                     one shared lambda bit),
//   shared-coin       both answer the shared coin,
//   sign-lhv          shared-spin sign strategy at the optimal angles,
//   memory:pattern, memory:feedback, memory:none
//   cheat:quantum     signalling strategy reproducing the singlet
//                     correlations (requires cheat_leak).
StrategyPair make_strategy(const std::string& name);
std::vector<std::string> strategy_names(); // the non-deterministic ids above

// The full zoo: all 16x16 deterministic table pairs plus the named
// randomized and memory strategies.
std::vector<StrategyPair> strategy_zoo();

// Deterministic tables as counterfactual-ready strategy descriptions.
// Codes 0..15 encode the response to (setting, lambda bit).
int deterministic_table_count_per_party(); // 16
models::DeterministicStrategy deterministic_pair(int code_alice, int code_bob);

} // namespace bellsim::nogo
