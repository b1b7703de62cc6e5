#include "bellsim/nogo.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <nlohmann/json.hpp>

#include "bellsim/loopholes.hpp"
#include "bellsim/tally.hpp"

namespace bellsim::nogo {

namespace {
constexpr double kPi = std::numbers::pi;
using nlohmann::json;

char hex_digit(unsigned v) { return v < 10 ? static_cast<char>('0' + v) : static_cast<char>('a' + v - 10); }

std::string payload_hex(RngStream shared) {
    // The SHARE payload as bytes: the first two words of the shared stream.
    std::string s;
    for (int w = 0; w < 2; ++w) {
        std::uint64_t v = shared.next_u64();
        for (int i = 15; i >= 0; --i) s.push_back(hex_digit((v >> (4 * i)) & 0xF));
    }
    return s;
}

class Transcript {
public:
    explicit Transcript(const std::string& path) {
        if (!path.empty()) {
            out_.open(path);
            if (!out_) throw std::runtime_error("cannot open transcript file: " + path);
        }
    }
    void message(const json& j) {
        if (out_.is_open()) out_ << j.dump() << '\n';
    }

private:
    std::ofstream out_;
};

} // namespace

ChallengeReport run_challenge(PartyAutomaton& alice, PartyAutomaton& bob,
                              const RefereeConfig& cfg) {
    cfg.sel.validate();
    Transcript transcript(cfg.transcript_path);
    ChallengeReport report;
    report.log.reserve(static_cast<std::size_t>(cfg.n_trials));

    for (std::int64_t t = 0; t < cfg.n_trials; ++t) {
        RngStream shared = RngStream::for_trial(cfg.seed, "nogo-share", static_cast<std::uint64_t>(t));
        const std::string payload = payload_hex(shared);
        transcript.message({{"kind", "SHARE"}, {"trial", t}, {"to", "alice"}, {"payload", payload}});
        transcript.message({{"kind", "SHARE"}, {"trial", t}, {"to", "bob"}, {"payload", payload}});
        alice.init(t, shared, report.log);
        bob.init(t, shared, report.log);

        RngStream pick = RngStream::for_trial(cfg.seed, "nogo-settings", static_cast<std::uint64_t>(t));
        const int a = 1 + static_cast<int>(pick.next_below(2));
        const int b = 1 + static_cast<int>(pick.next_below(2));

        if (cfg.cheat_leak) {
            if (auto* cheat = dynamic_cast<CheatParty*>(&bob)) {
                transcript.message({{"kind", "LEAK"}, {"trial", t}, {"to", "bob"}, {"setting", a}});
                cheat->leak_other_setting(a);
            }
            if (auto* cheat = dynamic_cast<CheatParty*>(&alice)) {
                transcript.message({{"kind", "LEAK"}, {"trial", t}, {"to", "alice"}, {"setting", b}});
                cheat->leak_other_setting(b);
            }
        }

        transcript.message({{"kind", "SETTING"}, {"trial", t}, {"to", "alice"}, {"setting", a}});
        transcript.message({{"kind", "SETTING"}, {"trial", t}, {"to", "bob"}, {"setting", b}});
        const int x = alice.respond(a);
        const int y = bob.respond(b);
        if ((x != -1 && x != +1) || (y != -1 && y != +1))
            throw ProtocolViolation("trial " + std::to_string(t) +
                                    ": answer outside {-1,+1} (alice=" + std::to_string(x) +
                                    ", bob=" + std::to_string(y) + ")");
        transcript.message({{"kind", "ANSWER"}, {"trial", t}, {"from", "alice"}, {"value", x}});
        transcript.message({{"kind", "ANSWER"}, {"trial", t}, {"from", "bob"}, {"value", y}});

        TrialRecord rec;
        rec.trial = t;
        rec.a = a;
        rec.b = b;
        rec.x = x;
        rec.y = y;
        report.log.push_back(std::move(rec));
    }

    const CountsTable counts = tally(report.log, 2, 2);
    const CorrelationTable corr = correlations(counts);
    report.chsh.statistic = stats::chsh_statistic(corr, cfg.sel);
    report.chsh.bound = 2.0;
    report.chsh.n = counts.n_emitted();
    report.chsh.method = "chsh";
    report.chsh.passed = report.chsh.statistic <= 2.0;
    report.chsh.p_value = 1.0;
    report.martingale = stats::martingale_pvalue(report.log, cfg.sel);

    transcript.message({{"kind", "VERDICT"},
                        {"trials", cfg.n_trials},
                        {"S", report.chsh.statistic},
                        {"martingale_p", report.martingale.p_value}});
    return report;
}

AuditResult audit_transcript(const std::string& path) {
    AuditResult res;
    std::ifstream in(path);
    if (!in) {
        res.ok = false;
        res.problems.push_back("cannot open transcript: " + path);
        return res;
    }
    // phase per trial: 0 = expect shares, 1 = expect settings, 2 = answers
    std::int64_t trial = -1;
    int shares = 0, settings = 0, answers = 0;
    std::string share_payload;
    std::string line;
    std::size_t line_no = 0;
    auto flag = [&](const std::string& msg) {
        res.ok = false;
        res.problems.push_back("line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            flag("unparseable message");
            continue;
        }
        const std::string kind = j.value("kind", "");
        if (kind == "VERDICT") continue;
        const std::int64_t t = j.value("trial", static_cast<std::int64_t>(-1));
        if (t != trial) {
            if (trial >= 0 && (shares != 2 || settings != 2 || answers != 2))
                flag("trial " + std::to_string(trial) + " incomplete before trial " +
                     std::to_string(t));
            if (t != trial + 1) flag("trial counter jumped to " + std::to_string(t));
            trial = t;
            shares = settings = answers = 0;
            share_payload.clear();
        }
        if (kind == "SHARE") {
            if (settings > 0 || answers > 0) flag("SHARE after SETTING/ANSWER");
            const std::string payload = j.value("payload", "");
            if (shares == 0)
                share_payload = payload;
            else if (payload != share_payload)
                flag("SHARE payloads differ between parties");
            ++shares;
        } else if (kind == "SETTING") {
            if (shares != 2) flag("SETTING before both SHAREs");
            if (answers > 0) flag("SETTING after ANSWER");
            ++settings;
        } else if (kind == "ANSWER") {
            if (settings != 2) flag("ANSWER before both SETTINGs");
            ++answers;
        } else if (kind == "LEAK") {
            flag("cross-party LEAK message (cheat mode)");
        } else {
            flag("unknown message kind '" + kind + "'");
        }
    }
    return res;
}

namespace {

// Deterministic table: answer = table[(setting-1)*2 + lambda_bit].
class TableParty final : public PartyAutomaton {
public:
    TableParty(std::string name, std::array<int, 4> table)
        : name_(std::move(name)), table_(table) {}

    std::string name() const override { return name_; }
    void init(std::int64_t, RngStream shared, std::span<const TrialRecord>) override {
        lambda_bit_ = static_cast<int>(shared.next_u64() & 1);
    }
    int respond(int setting) override {
        return table_[static_cast<std::size_t>((setting - 1) * 2 + lambda_bit_)];
    }

private:
    std::string name_;
    std::array<int, 4> table_;
    int lambda_bit_ = 0;
};

std::array<int, 4> table_from_code(int code) {
    std::array<int, 4> t{};
    for (int b = 0; b < 4; ++b) t[static_cast<std::size_t>(b)] = (code >> b) & 1 ? +1 : -1;
    return t;
}

class SharedCoinParty final : public PartyAutomaton {
public:
    explicit SharedCoinParty(std::string name) : name_(std::move(name)) {}
    std::string name() const override { return name_; }
    void init(std::int64_t, RngStream shared, std::span<const TrialRecord>) override {
        coin_ = (shared.next_u64() & 1) ? +1 : -1;
    }
    int respond(int) override { return coin_; }

private:
    std::string name_;
    int coin_ = +1;
};

// Adapter running one arm of a loopholes::MemoryStrategy.
class MemoryParty final : public PartyAutomaton {
public:
    MemoryParty(std::string name, std::function<int(int, const loopholes::MemoryView&)> rule)
        : name_(std::move(name)), rule_(std::move(rule)) {}
    std::string name() const override { return name_; }
    void init(std::int64_t, RngStream shared, std::span<const TrialRecord> past) override {
        shared_ = shared;
        past_ = past;
    }
    int respond(int setting) override {
        const loopholes::MemoryView view{past_, shared_};
        return rule_(setting, view);
    }

private:
    std::string name_;
    std::function<int(int, const loopholes::MemoryView&)> rule_;
    RngStream shared_;
    std::span<const TrialRecord> past_;
};

// Shared-spin sign strategy at the optimal singlet angles.
loopholes::MemoryStrategy sign_lhv_strategy() {
    std::vector<Direction> a = {direction_from_angle(0.0), direction_from_angle(kPi / 2)};
    std::vector<Direction> b = {direction_from_angle(5 * kPi / 4),
                                direction_from_angle(3 * kPi / 4)};
    return loopholes::memoryless_sign_strategy(std::move(a), std::move(b));
}

// Cheat: Alice answers a shared coin; Bob, knowing Alice's setting via the
// leak, reconstructs her answer from the shared data and draws his own so
// the pair reproduces the singlet correlations at the optimal angles.
class CheatAlice final : public CheatParty {
public:
    std::string name() const override { return "cheat:quantum"; }
    void init(std::int64_t, RngStream shared, std::span<const TrialRecord>) override {
        shared_ = shared;
    }
    void leak_other_setting(int) override {}
    int respond(int) override {
        RngStream rng = shared_;
        return rng.next_u64() & 1 ? +1 : -1;
    }

private:
    RngStream shared_;
};

class CheatBob final : public CheatParty {
public:
    std::string name() const override { return "cheat:quantum"; }
    void init(std::int64_t, RngStream shared, std::span<const TrialRecord>) override {
        shared_ = shared;
        other_setting_ = 0;
    }
    void leak_other_setting(int setting) override { other_setting_ = setting; }
    int respond(int setting) override {
        if (other_setting_ == 0)
            throw ProtocolViolation("cheat:quantum requires the cheat leak enabled");
        RngStream rng = shared_;
        const int x = rng.next_u64() & 1 ? +1 : -1;
        // Optimal-angle singlet correlations: E = +1/sqrt(2) except the
        // (2,2) cell, where E = -1/sqrt(2).
        const double e = (other_setting_ == 2 && setting == 2) ? -1.0 / std::numbers::sqrt2
                                                               : 1.0 / std::numbers::sqrt2;
        const double u = rng.next_double();
        return u < (1.0 + e) / 2.0 ? x : -x;
    }

private:
    RngStream shared_;
    int other_setting_ = 0;
};

} // namespace

int deterministic_table_count_per_party() { return 16; }

models::DeterministicStrategy deterministic_pair(int code_alice, int code_bob) {
    if (code_alice < 0 || code_alice > 15 || code_bob < 0 || code_bob > 15)
        throw std::invalid_argument("deterministic_pair: codes are 0..15");
    models::DeterministicStrategy s;
    s.k = s.l = 2;
    s.n_lambda = 2;
    s.alice.resize(4);
    s.bob.resize(4);
    const auto ta = table_from_code(code_alice);
    const auto tb = table_from_code(code_bob);
    for (int setting = 1; setting <= 2; ++setting) {
        for (int lam = 0; lam < 2; ++lam) {
            s.alice[static_cast<std::size_t>((setting - 1) * 2 + lam)] =
                ta[static_cast<std::size_t>((setting - 1) * 2 + lam)];
            s.bob[static_cast<std::size_t>((setting - 1) * 2 + lam)] =
                tb[static_cast<std::size_t>((setting - 1) * 2 + lam)];
        }
    }
    return s;
}

StrategyPair make_strategy(const std::string& name) {
    StrategyPair pair;
    pair.name = name;
    if (name.rfind("det:", 0) == 0) {
        const auto rest = name.substr(4);
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("deterministic strategy id is det:<a>:<b>");
        const int ca = std::stoi(rest.substr(0, colon));
        const int cb = std::stoi(rest.substr(colon + 1));
        if (ca < 0 || ca > 15 || cb < 0 || cb > 15)
            throw std::invalid_argument("deterministic table codes are 0..15");
        pair.alice = std::make_unique<TableParty>(name, table_from_code(ca));
        pair.bob = std::make_unique<TableParty>(name, table_from_code(cb));
        return pair;
    }
    if (name == "shared-coin") {
        pair.alice = std::make_unique<SharedCoinParty>(name);
        pair.bob = std::make_unique<SharedCoinParty>(name);
        return pair;
    }
    if (name == "sign-lhv") {
        auto s = sign_lhv_strategy();
        pair.alice = std::make_unique<MemoryParty>(name, s.alice);
        pair.bob = std::make_unique<MemoryParty>(name, s.bob);
        return pair;
    }
    if (name == "memory:pattern") {
        auto s = loopholes::settings_pattern_exploiter();
        pair.alice = std::make_unique<MemoryParty>(name, s.alice);
        pair.bob = std::make_unique<MemoryParty>(name, s.bob);
        return pair;
    }
    if (name == "memory:feedback") {
        auto s = loopholes::outcome_feedback_exploiter();
        pair.alice = std::make_unique<MemoryParty>(name, s.alice);
        pair.bob = std::make_unique<MemoryParty>(name, s.bob);
        return pair;
    }
    if (name == "memory:none") {
        auto s = sign_lhv_strategy();
        pair.alice = std::make_unique<MemoryParty>(name, s.alice);
        pair.bob = std::make_unique<MemoryParty>(name, s.bob);
        return pair;
    }
    if (name == "cheat:quantum") {
        pair.alice = std::make_unique<CheatAlice>();
        pair.bob = std::make_unique<CheatBob>();
        return pair;
    }
    throw std::invalid_argument("unknown strategy '" + name + "'");
}

std::vector<std::string> strategy_names() {
    return {"shared-coin", "sign-lhv", "memory:pattern", "memory:feedback",
            "memory:none", "cheat:quantum"};
}

std::vector<StrategyPair> strategy_zoo() {
    std::vector<StrategyPair> zoo;
    for (int ca = 0; ca < 16; ++ca)
        for (int cb = 0; cb < 16; ++cb)
            zoo.push_back(make_strategy("det:" + std::to_string(ca) + ":" + std::to_string(cb)));
    for (const char* name : {"shared-coin", "sign-lhv", "memory:pattern", "memory:feedback"})
        zoo.push_back(make_strategy(name));
    return zoo;
}

} // namespace bellsim::nogo
