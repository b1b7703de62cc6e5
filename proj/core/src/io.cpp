#include "bellsim/io.hpp"

#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace bellsim::io {

using nlohmann::json;
using nlohmann::ordered_json;

std::string record_to_jsonl(const TrialRecord& r) {
    ordered_json j;
    j["i"] = r.trial;
    j["a"] = r.a;
    j["b"] = r.b;
    j["x"] = r.x ? json(*r.x) : json(nullptr);
    j["y"] = r.y ? json(*r.y) : json(nullptr);
    if (r.ta) j["ta"] = *r.ta;
    if (r.tb) j["tb"] = *r.tb;
    if (r.hidden.has_value()) {
        if (const auto* st = std::any_cast<models::LoopState>(&r.hidden)) {
            j["hv"] = {{"alpha", st->alpha},
                       {"beta", st->beta},
                       {"lambda", st->lambda},
                       {"lambda_a", st->lambda_a},
                       {"lambda_b", st->lambda_b}};
        }
    }
    return j.dump();
}

TrialRecord record_from_json(const std::string& line, std::size_t line_no) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(line_no, "not a JSON object");
    TrialRecord r;
    try {
        r.trial = j.at("i").get<std::int64_t>();
        r.a = j.at("a").get<int>();
        r.b = j.at("b").get<int>();
        const auto& jx = j.at("x");
        const auto& jy = j.at("y");
        if (!jx.is_null()) r.x = jx.get<int>();
        if (!jy.is_null()) r.y = jy.get<int>();
        if (j.contains("ta") && !j["ta"].is_null()) r.ta = j["ta"].get<double>();
        if (j.contains("tb") && !j["tb"].is_null()) r.tb = j["tb"].get<double>();
        if (j.contains("hv")) {
            const auto& h = j["hv"];
            models::LoopState st;
            st.alpha = h.value("alpha", 0.0);
            st.beta = h.at("beta").get<double>();
            st.lambda = h.at("lambda").get<double>();
            st.lambda_a = h.at("lambda_a").get<double>();
            st.lambda_b = h.at("lambda_b").get<double>();
            r.hidden = st;
        }
    } catch (const json::exception& e) {
        throw ParseError(line_no, e.what());
    }
    if ((r.x && *r.x != -1 && *r.x != 1) || (r.y && *r.y != -1 && *r.y != 1))
        throw ParseError(line_no, "outcomes must be -1, 1 or null");
    return r;
}

void write_log(std::ostream& out, std::span<const TrialRecord> log) {
    for (const TrialRecord& r : log) out << record_to_jsonl(r) << '\n';
}

std::vector<TrialRecord> read_log(std::istream& in) {
    std::vector<TrialRecord> log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        log.push_back(record_from_json(line, line_no));
    }
    return log;
}

void write_table_csv(std::ostream& out, const CountsTable& counts) {
    out << "i,j,npp,npm,nmp,nmm,e\n";
    std::ostringstream row;
    for (int i = 1; i <= counts.k(); ++i) {
        for (int j = 1; j <= counts.l(); ++j) {
            const std::int64_t npp = counts.pair(i, j, +1, +1);
            const std::int64_t npm = counts.pair(i, j, +1, -1);
            const std::int64_t nmp = counts.pair(i, j, -1, +1);
            const std::int64_t nmm = counts.pair(i, j, -1, -1);
            const std::int64_t n = npp + npm + nmp + nmm;
            out << i << ',' << j << ',' << npp << ',' << npm << ',' << nmp << ',' << nmm << ',';
            if (n > 0) {
                row.str("");
                row.precision(17);
                row << static_cast<double>(npp + nmm - npm - nmp) / static_cast<double>(n);
                out << row.str();
            }
            out << '\n';
        }
    }
}

CountsTable read_table_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError(0, "empty CSV");
    int k = 0, l = 0;
    struct Row {
        int i, j;
        std::int64_t n[4];
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Row r{};
        std::istringstream ss(line);
        char comma;
        if (!(ss >> r.i >> comma >> r.j >> comma >> r.n[0] >> comma >> r.n[1] >> comma >>
              r.n[2] >> comma >> r.n[3]))
            throw ParseError(line_no, "malformed CSV row");
        k = std::max(k, r.i);
        l = std::max(l, r.j);
        rows.push_back(r);
    }
    if (rows.empty()) throw ParseError(line_no, "no data rows");
    CountsTable t(k, l);
    for (const Row& r : rows) {
        TrialRecord rec;
        rec.a = r.i;
        rec.b = r.j;
        const int xs[4] = {+1, +1, -1, -1};
        const int ys[4] = {+1, -1, +1, -1};
        for (int c = 0; c < 4; ++c) {
            rec.x = xs[c];
            rec.y = ys[c];
            for (std::int64_t m = 0; m < r.n[c]; ++m) t.add(rec);
        }
    }
    return t;
}

namespace {

std::vector<Direction> directions_from_json(const json& arr) {
    std::vector<Direction> out;
    for (const auto& v : arr) out.emplace_back(v.get<std::vector<double>>());
    return out;
}

std::vector<Direction> directions_from_angles(const json& arr) {
    std::vector<Direction> out;
    for (const auto& v : arr)
        out.push_back(direction_from_angle(v.get<double>() * std::numbers::pi / 180.0));
    return out;
}

} // namespace

models::ModelSpec model_from_json(const json& j, std::uint64_t seed) {
    if (!j.is_object() || !j.contains("kind"))
        throw std::invalid_argument("model JSON: missing \"kind\"");
    models::ModelSpec m;
    m.kind = models::kind_from_name(j.at("kind").get<std::string>());
    m.r = j.value("r", 1.0);
    if (m.kind == models::ModelKind::Automaton) {
        m.automaton_id = j.value("id", "");
        if (m.automaton_id.empty())
            throw std::invalid_argument("model JSON: automaton requires \"id\"");
        m.k_hint = j.value("k", 2);
        m.l_hint = j.value("l", 2);
    }
    if (j.contains("settings")) {
        m.alice = directions_from_json(j.at("settings").at("alice"));
        m.bob = directions_from_json(j.at("settings").at("bob"));
    } else if (j.contains("angles_deg")) {
        m.alice = directions_from_angles(j.at("angles_deg").at("alice"));
        m.bob = directions_from_angles(j.at("angles_deg").at("bob"));
    } else if (j.contains("random_keys")) {
        const auto& rk = j.at("random_keys");
        const int dim = rk.value("dim", 2);
        const int k = rk.at("k").get<int>();
        const int l = rk.at("l").get<int>();
        RngStream rng = RngStream::for_module(seed, "keys");
        auto [a, b] = models::carol_keys(dim, k, l, rng);
        m.alice = std::move(a);
        m.bob = std::move(b);
    }
    m.validate();
    return m;
}

models::ModelSpec read_model(const std::string& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("model file is not valid JSON: " + path);
    return model_from_json(j, seed);
}

json model_to_json(const models::ModelSpec& m) {
    json j;
    j["kind"] = models::kind_name(m.kind);
    if (m.kind == models::ModelKind::Eberhard) j["r"] = m.r;
    if (m.kind == models::ModelKind::Automaton) {
        j["id"] = m.automaton_id;
        j["k"] = m.k();
        j["l"] = m.l();
    }
    if (!m.alice.empty()) {
        json a = json::array(), b = json::array();
        for (const auto& d : m.alice)
            a.push_back(std::vector<double>(d.coords().begin(), d.coords().end()));
        for (const auto& d : m.bob)
            b.push_back(std::vector<double>(d.coords().begin(), d.coords().end()));
        j["settings"] = {{"alice", a}, {"bob", b}};
    }
    return j;
}

} // namespace bellsim::io
