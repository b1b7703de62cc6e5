// bellsim command-line front end: simulate | inject | analyze | table |
// scan | plot | nogo. Every subcommand is deterministic given its flags and
// seed, and pipelines compose through JSONL on stdin/stdout.
//
// Exit codes: 0 success, 1 usage or input error, 2 empty/degenerate data,
// 3 protocol violation (nogo).

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <sstream>

#include "bellsim/io.hpp"
#include "bellsim/loopholes.hpp"
#include "bellsim/models.hpp"
#include "bellsim/nogo.hpp"
#include "bellsim/stats.hpp"
#include "bellsim/svg.hpp"
#include "bellsim/tally.hpp"

namespace {

using namespace bellsim;
using nlohmann::json;
constexpr double kPi = std::numbers::pi;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNoData = 2;
constexpr int kExitProtocol = 3;

struct OutputTarget {
    std::string path = "-";

    // Writes to the path, or stdout for "-".
    void write(const std::string& content) const {
        if (path == "-") {
            std::cout << content;
            return;
        }
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot open output file: " + path);
        out << content;
    }

    // Streaming variant for record-at-a-time output.
    struct Stream {
        std::ofstream file;
        std::ostream& os;
        explicit Stream(const std::string& p)
            : file(p == "-" ? std::ofstream() : std::ofstream(p)),
              os(p == "-" ? std::cout : file) {
            if (p != "-" && !file) throw std::runtime_error("cannot open output file: " + p);
        }
    };
    Stream stream() const { return Stream(path); }
};

std::vector<TrialRecord> load_log(const std::string& path) {
    if (path == "-") return io::read_log(std::cin);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log file: " + path);
    return io::read_log(in);
}

json report_to_json(const stats::TestReport& r) {
    json j{{"statistic", r.statistic}, {"bound", r.bound},     {"p_value", r.p_value},
           {"n", r.n},                 {"method", r.method},   {"passed", r.passed}};
    if (!r.warning.empty()) j["warning"] = r.warning;
    return j;
}

json selection_to_json(const stats::ChshSelection& sel) {
    return json{{"p", sel.p}, {"r", sel.r}, {"q", sel.q}, {"s", sel.s}, {"signs", sel.signs}};
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    std::string model_path;
    std::string manifest_path;
    std::int64_t trials = 1000;
    std::uint64_t seed = 0;
    bool trace = false;
    bool timestamps = false;
    double slot_period = 1.0;
    double jitter = 0.0;
    OutputTarget out;
};

int run_simulate(SimulateOptions opt) {
    if (!opt.manifest_path.empty()) {
        std::ifstream in(opt.manifest_path);
        if (!in) throw std::runtime_error("cannot open manifest: " + opt.manifest_path);
        json man = json::parse(in);
        if (man.contains("model")) opt.model_path = man["model"].get<std::string>();
        opt.trials = man.value("trials", opt.trials);
        opt.seed = man.value("seed", opt.seed);
        opt.trace = man.value("trace", opt.trace);
        opt.timestamps = man.value("timestamps", opt.timestamps);
        opt.slot_period = man.value("slot_period", opt.slot_period);
        opt.jitter = man.value("jitter", opt.jitter);
        if (man.contains("out")) opt.out.path = man["out"].get<std::string>();
    }
    if (opt.model_path.empty()) throw CLI::ValidationError("--model or --manifest is required");
    if (opt.trials < 1) throw CLI::ValidationError("--trials must be >= 1");

    const models::ModelSpec model = io::read_model(opt.model_path, opt.seed);
    auto sampler = models::make_sampler(model);
    const int k = model.k(), l = model.l();

    OutputTarget::Stream out = opt.out.stream();
    for (std::int64_t t = 0; t < opt.trials; ++t) {
        RngStream pick = RngStream::for_trial(opt.seed, "settings", static_cast<std::uint64_t>(t));
        const int i = 1 + static_cast<int>(pick.next_below(static_cast<std::uint64_t>(k)));
        const int j = 1 + static_cast<int>(pick.next_below(static_cast<std::uint64_t>(l)));
        const models::TrialOutcome o =
            sampler->sample(i, j, RngStream::for_trial(opt.seed, "model", static_cast<std::uint64_t>(t)));

        TrialRecord rec;
        rec.trial = t;
        rec.a = i;
        rec.b = j;
        rec.x = o.x;
        rec.y = o.y;
        if (opt.timestamps) {
            RngStream ts = RngStream::for_trial(opt.seed, "time", static_cast<std::uint64_t>(t));
            const double base = static_cast<double>(t) * opt.slot_period;
            auto arrival = [&](bool present) -> std::optional<double> {
                if (!present) return std::nullopt;
                double dt = 0.0;
                if (opt.jitter > 0.0) dt = -opt.jitter * std::log(1.0 - ts.next_double());
                return base + dt;
            };
            rec.ta = arrival(rec.x.has_value());
            rec.tb = arrival(rec.y.has_value());
        }
        if (opt.trace && o.hidden) rec.hidden = *o.hidden;
        sampler->observe(rec);
        out.os << io::record_to_jsonl(rec) << '\n';
    }
    return kExitOk;
}

// ----------------------------------------------------------------- analyze

json correlations_json(const CountsTable& counts, const CorrelationTable& corr) {
    json arr = json::array();
    for (int i = 1; i <= corr.k(); ++i) {
        for (int j = 1; j <= corr.l(); ++j) {
            const auto& c = corr.at(i, j);
            if (!c) continue;
            arr.push_back(json{{"i", i},
                               {"j", j},
                               {"n", c->n},
                               {"emitted", counts.emitted(i, j)},
                               {"e", c->e},
                               {"marg_x", c->marg_x},
                               {"marg_y", c->marg_y}});
        }
    }
    return arr;
}

// Best CHSH selection over all setting pairs and sign patterns.
std::pair<stats::ChshSelection, double> best_chsh(const CorrelationTable& corr) {
    stats::ChshSelection best;
    double best_val = -1e300;
    for (int p = 1; p <= corr.k(); ++p)
        for (int r = p + 1; r <= corr.k(); ++r)
            for (int q = 1; q <= corr.l(); ++q)
                for (int s = q + 1; s <= corr.l(); ++s) {
                    if (!corr.at(p, q) || !corr.at(p, s) || !corr.at(r, q) || !corr.at(r, s))
                        continue;
                    for (int minus = 0; minus < 4; ++minus) {
                        for (int flip : {+1, -1}) {
                            stats::ChshSelection sel;
                            sel.p = p, sel.r = r, sel.q = q, sel.s = s;
                            for (int m = 0; m < 4; ++m)
                                sel.signs[static_cast<std::size_t>(m)] =
                                    flip * (m == minus ? -1 : +1);
                            const double v = stats::chsh_statistic(corr, sel);
                            if (v > best_val) {
                                best_val = v;
                                best = sel;
                            }
                        }
                    }
                }
    return {best, best_val};
}

int run_analyze(const std::string& log_path, const std::string& format,
                const OutputTarget& out) {
    const std::vector<TrialRecord> log = load_log(log_path);
    if (log.empty()) {
        if (format == "csv")
            std::cerr << "analyze: no data\n";
        else
            out.write(json{{"error", "no data"}, {"n_records", 0}}.dump(2) + "\n");
        return kExitNoData;
    }
    int k = 2, l = 2;
    for (const TrialRecord& r : log) {
        k = std::max(k, r.a);
        l = std::max(l, r.b);
    }
    const CountsTable counts = tally(log, k, l);
    const CorrelationTable corr = correlations(counts);

    if (format == "csv") { // just the counts/correlation table
        std::ostringstream buf;
        io::write_table_csv(buf, counts);
        out.write(buf.str());
        return kExitOk;
    }

    json rep;
    rep["n_records"] = log.size();
    rep["k"] = k;
    rep["l"] = l;
    rep["correlations"] = correlations_json(counts, corr);

    bool have_all_cells = true;
    for (int i = 1; i <= k && have_all_cells; ++i)
        for (int j = 1; j <= l; ++j)
            if (!corr.at(i, j)) {
                have_all_cells = false;
                break;
            }

    if (k == 2 && l == 2 && have_all_cells) {
        json chsh = json::array();
        for (const auto& sel : stats::one_sided_selections_2x2())
            chsh.push_back(json{{"selection", selection_to_json(sel)},
                                {"value", stats::chsh_statistic(corr, sel)}});
        rep["chsh"] = chsh;

        const stats::FineResult fine = stats::fine_lhv_check(corr);
        json violated = json::array();
        for (const auto& sel : fine.violated) violated.push_back(selection_to_json(sel));
        rep["fine_lhv"] = json{{"representable", fine.representable}, {"violated", violated}};

        json ch;
        const char* names[4] = {"pp", "pm", "mp", "mm"};
        const int xs[4] = {+1, +1, -1, -1};
        const int ys[4] = {+1, -1, +1, -1};
        for (int m = 0; m < 4; ++m)
            ch[names[m]] = stats::ch_statistic(counts, xs[m], ys[m]);
        rep["ch"] = ch;

        json mart = json::array();
        for (const auto& sel : stats::one_sided_selections_2x2())
            mart.push_back(json{{"selection", selection_to_json(sel)},
                                {"report", report_to_json(stats::martingale_pvalue(log, sel))}});
        rep["martingale"] = mart;
    } else if (have_all_cells && k >= 2 && l >= 2) {
        const auto [sel, val] = best_chsh(corr);
        rep["chsh_best"] = json{{"selection", selection_to_json(sel)},
                                {"value", val},
                                {"martingale",
                                 report_to_json(stats::martingale_pvalue(log, sel))}};
    }

    if (k >= 2 && l >= 2) {
        const auto [alice_rep, bob_rep] = stats::no_signalling_check(corr, 4.0);
        rep["no_signalling"] =
            json{{"alice", report_to_json(alice_rep)}, {"bob", report_to_json(bob_rep)}};
    }

    json tests;
    for (auto [name, arity] :
         std::initializer_list<std::pair<const char*, stats::Arity>>{
             {"pair", stats::Arity::Pair}, {"triple", stats::Arity::Triple},
             {"quad", stats::Arity::Quad}}) {
        json arr = json::array();
        for (const auto& t : stats::independence_tests(log, arity)) arr.push_back(report_to_json(t));
        tests[std::string("independence_") + name] = arr;
    }
    std::vector<double> evalues;
    for (int i = 1; i <= k; ++i)
        for (int j = 1; j <= l; ++j)
            if (corr.at(i, j)) evalues.push_back(corr.at(i, j)->e);
    if (evalues.size() >= 20)
        tests["ks_correlations"] = report_to_json(stats::ks_uniformity(evalues, -1.0, 1.0));
    rep["tests"] = tests;

    out.write(rep.dump(2) + "\n");
    return kExitOk;
}

// ------------------------------------------------------------------ inject

struct InjectOptions {
    std::string log_path = "-";
    double eta = -1.0; // sets both arms
    double eta_a = -1.0, eta_b = -1.0;
    double window = 0.0;
    std::string pairing = "moving";
    std::uint64_t seed = 0;
    OutputTarget out;
};

int run_inject(InjectOptions opt) {
    std::vector<TrialRecord> log = load_log(opt.log_path);
    if (log.empty()) {
        std::cerr << "inject: empty log\n";
        return kExitNoData;
    }
    if (opt.eta >= 0.0) {
        if (opt.eta_a < 0.0) opt.eta_a = opt.eta;
        if (opt.eta_b < 0.0) opt.eta_b = opt.eta;
    }
    const bool detect = opt.eta_a >= 0.0 || opt.eta_b >= 0.0;
    if (detect) {
        loopholes::EfficiencyConfig cfg;
        cfg.eta_a = opt.eta_a >= 0.0 ? opt.eta_a : 1.0;
        cfg.eta_b = opt.eta_b >= 0.0 ? opt.eta_b : 1.0;
        log = loopholes::apply_detection(std::move(log), cfg, opt.seed);
    }
    if (opt.window > 0.0) {
        const auto [sa, sb] = loopholes::split_sides(log);
        if (sa.empty() && sb.empty()) {
            std::cerr << "inject: log carries no timestamps; simulate with --timestamps\n";
            return kExitNoData;
        }
        loopholes::CoincidenceConfig cfg;
        cfg.window = opt.window;
        cfg.pairing = opt.pairing == "slots" ? loopholes::Pairing::FixedSlots
                                             : loopholes::Pairing::MovingWindow;
        auto res = loopholes::apply_coincidence(sa, sb, cfg);
        std::cerr << "inject: paired " << res.log.size() << " trials, " << res.ambiguous
                  << " ambiguous, " << res.unpaired_a << "+" << res.unpaired_b << " unpaired\n";
        log = std::move(res.log);
    }
    std::ostringstream buf;
    io::write_log(buf, log);
    opt.out.write(buf.str());
    return kExitOk;
}

// ------------------------------------------------------------- table / scan

int run_table(const std::string& format, const OutputTarget& out) {
    const std::vector<int> rows = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 20};
    std::ostringstream buf;
    if (format == "json") {
        json arr = json::array();
        for (int n : rows) arr.push_back(json{{"n", n}, {"s_max", geom::s_max(n).s}});
        buf << arr.dump(2) << '\n';
    } else {
        buf << "n,s_max\n";
        buf.setf(std::ios::fixed);
        buf.precision(6);
        for (int n : rows) buf << n << ',' << geom::s_max(n).s << '\n';
    }
    out.write(buf.str());
    return kExitOk;
}

struct ScanOptions {
    int scurve_n = 0;
    std::string hcurves_list;
    double r = -1.0;
    bool crit_only = false;
    int points = 256;
    double gamma_max = kPi / 3.0;
    double eta_min = 0.5, eta_max = 1.0, eta_step = 0.025;
    OutputTarget out;
};

int run_scan(const ScanOptions& opt) {
    std::ostringstream buf;
    buf.setf(std::ios::fixed);
    buf.precision(9);
    if (opt.scurve_n > 0) {
        buf << "gamma,s\n";
        for (int p = 0; p <= opt.points; ++p) {
            const double g = opt.gamma_max * p / opt.points;
            buf << g << ',' << geom::s_curve(g, opt.scurve_n) << '\n';
        }
    } else if (!opt.hcurves_list.empty()) {
        std::vector<int> ns;
        std::stringstream ss(opt.hcurves_list);
        for (std::string tok; std::getline(ss, tok, ',');) ns.push_back(std::stoi(tok));
        if (ns.empty()) throw CLI::ValidationError("--hcurves needs a list like 1,2,3");
        buf << "gamma";
        for (int n : ns) buf << ",h" << n;
        buf << '\n';
        for (int p = 0; p <= opt.points; ++p) {
            const double g = kPi * p / opt.points;
            buf << g;
            for (int n : ns) buf << ',' << geom::cdf_h(g, n);
            buf << '\n';
        }
    } else if (opt.r >= 0.0) {
        if (opt.crit_only) {
            const double crit = loopholes::efficiency_threshold(opt.r);
            buf << "r,eta_crit\n" << opt.r << ',' << crit << '\n';
        } else {
            buf << "eta,max_violation\n";
            for (double eta = opt.eta_min; eta <= opt.eta_max + 1e-12; eta += opt.eta_step)
                buf << eta << ',' << loopholes::max_ch_violation(opt.r, eta) << '\n';
            std::cerr << "scan: eta_crit(r=" << opt.r
                      << ") = " << loopholes::efficiency_threshold(opt.r) << '\n';
        }
    } else {
        throw CLI::ValidationError("scan: pick one of --scurve, --hcurves, --threshold");
    }
    opt.out.write(buf.str());
    return kExitOk;
}

// -------------------------------------------------------------------- plot

struct PlotOptions {
    std::string kind;
    int n = 2;
    std::string n_list = "1,2,3,4,5";
    std::string model_path;
    std::string log_path;
    int i = 10, j = 15;
    double gamma_max = kPi / 3.0;
    std::uint64_t seed = 0;
    OutputTarget out;
};

int run_plot(const PlotOptions& opt) {
    std::string svg_text;
    if (opt.kind == "hcurves") {
        std::vector<int> ns;
        std::stringstream ss(opt.n_list);
        for (std::string tok; std::getline(ss, tok, ',');) ns.push_back(std::stoi(tok));
        svg_text = svg::hcurves(ns);
    } else if (opt.kind == "scurve") {
        svg_text = svg::scurve(opt.n, opt.gamma_max);
    } else if (opt.kind == "fig6") {
        if (opt.model_path.empty()) throw CLI::ValidationError("plot fig6 needs --model");
        const models::ModelSpec model = io::read_model(opt.model_path, opt.seed);
        svg_text = svg::correlation_distribution(model, std::min(opt.i, model.k()),
                                                 std::min(opt.j, model.l()));
    } else if (opt.kind == "fig9") {
        if (opt.log_path.empty()) throw CLI::ValidationError("plot fig9 needs --log");
        const auto log = load_log(opt.log_path);
        svg_text = svg::loop_rectangle(log, opt.i, opt.j);
    } else {
        throw CLI::ValidationError("plot: unknown --kind (hcurves|scurve|fig6|fig9)");
    }
    opt.out.write(svg_text);
    return kExitOk;
}

// -------------------------------------------------------------------- nogo

struct NogoOptions {
    std::string alice, bob;
    std::int64_t trials = 1000;
    std::uint64_t seed = 0;
    std::string messages_path;
    std::string log_path;
    bool cheat = false;
    bool list = false;
    OutputTarget out;
};

int run_nogo(const NogoOptions& opt) {
    if (opt.list) {
        json j = json::array();
        for (const auto& name : nogo::strategy_names()) j.push_back(name);
        j.push_back("det:<0..15>:<0..15>");
        opt.out.write(j.dump(2) + "\n");
        return kExitOk;
    }
    nogo::StrategyPair alice_pair = nogo::make_strategy(opt.alice);
    nogo::StrategyPair bob_pair = nogo::make_strategy(opt.bob);

    nogo::RefereeConfig cfg;
    cfg.n_trials = opt.trials;
    cfg.seed = opt.seed;
    cfg.sel.signs = {+1, +1, -1, +1}; // minus on cell (2,2)
    cfg.transcript_path = opt.messages_path;
    cfg.cheat_leak = opt.cheat;

    const nogo::ChallengeReport rep = nogo::run_challenge(*alice_pair.alice, *bob_pair.bob, cfg);
    if (!opt.log_path.empty()) {
        std::ofstream out(opt.log_path);
        if (!out) throw std::runtime_error("cannot open log file: " + opt.log_path);
        io::write_log(out, rep.log);
    }
    json verdict{{"alice", opt.alice},
                 {"bob", opt.bob},
                 {"trials", opt.trials},
                 {"seed", opt.seed},
                 {"chsh", report_to_json(rep.chsh)},
                 {"martingale", report_to_json(rep.martingale)}};
    opt.out.write(verdict.dump(2) + "\n");
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    loopholes::install_automatons();

    CLI::App app{"Bell-CHSH simulation laboratory"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Sample an event log from a model");
    c_sim->add_option("--model", sim.model_path, "model JSON file");
    c_sim->add_option("--manifest", sim.manifest_path, "run manifest JSON");
    c_sim->add_option("--trials,-n", sim.trials, "number of trials");
    c_sim->add_option("--seed", sim.seed, "run seed");
    c_sim->add_flag("--trace", sim.trace, "record hidden traces when the model has them");
    c_sim->add_flag("--timestamps", sim.timestamps, "record arrival timestamps");
    c_sim->add_option("--slot-period", sim.slot_period, "seconds between emission slots");
    c_sim->add_option("--jitter", sim.jitter, "mean exponential arrival jitter (seconds)");
    c_sim->add_option("--out,-o", sim.out.path, "output file (- = stdout)");

    std::string analyze_log = "-";
    std::string analyze_format = "json";
    OutputTarget analyze_out;
    auto* c_an = app.add_subcommand("analyze", "Estimators and tests over a JSONL log");
    c_an->add_option("--log", analyze_log, "event log (- = stdin)");
    c_an->add_option("--format", analyze_format, "json (full report) | csv (counts table)");
    c_an->add_option("--out,-o", analyze_out.path, "output file");

    InjectOptions inj;
    auto* c_inj = app.add_subcommand("inject", "Degrade a log with loopholes");
    c_inj->add_option("--log", inj.log_path, "event log (- = stdin)");
    c_inj->add_option("--eta", inj.eta, "detection efficiency, both arms");
    c_inj->add_option("--eta-a", inj.eta_a, "Alice-arm detection efficiency");
    c_inj->add_option("--eta-b", inj.eta_b, "Bob-arm detection efficiency");
    c_inj->add_option("--window", inj.window, "coincidence window (seconds)");
    c_inj->add_option("--pairing", inj.pairing, "moving|slots");
    c_inj->add_option("--seed", inj.seed, "seed for detection draws");
    c_inj->add_option("--out,-o", inj.out.path, "output file");

    std::string table_format = "csv";
    OutputTarget table_out;
    auto* c_tab = app.add_subcommand("table", "Closed-form |S_n| maxima (n = 1..11, 20)");
    c_tab->add_option("--format", table_format, "csv|json");
    c_tab->add_option("--out,-o", table_out.path, "output file");

    ScanOptions scan;
    auto* c_scan = app.add_subcommand("scan", "CSV scans: S_n curve, H_n curves, thresholds");
    c_scan->add_option("--scurve", scan.scurve_n, "emit gamma,s for this n");
    c_scan->add_option("--hcurves", scan.hcurves_list, "emit H_n columns for n list, e.g. 1,2,3");
    c_scan->add_option("--threshold,--r", scan.r, "emit eta,max_violation for Eberhard r");
    c_scan->add_flag("--crit", scan.crit_only, "emit only r,eta_crit");
    c_scan->add_option("--points", scan.points, "samples per curve");
    c_scan->add_option("--gamma-max", scan.gamma_max, "scurve upper end (radians)");
    c_scan->add_option("--eta-min", scan.eta_min, "threshold scan start");
    c_scan->add_option("--eta-max", scan.eta_max, "threshold scan end");
    c_scan->add_option("--eta-step", scan.eta_step, "threshold scan step");
    c_scan->add_option("--out,-o", scan.out.path, "output file");

    PlotOptions plot;
    auto* c_plot = app.add_subcommand("plot", "Standalone SVG plots");
    c_plot->add_option("--kind", plot.kind, "hcurves|scurve|fig6|fig9")->required();
    c_plot->add_option("--n", plot.n, "sphere dimension (scurve)");
    c_plot->add_option("--n-list", plot.n_list, "dimensions (hcurves)");
    c_plot->add_option("--model", plot.model_path, "model JSON (fig6)");
    c_plot->add_option("--log", plot.log_path, "traced event log (fig9)");
    c_plot->add_option("--i", plot.i, "Alice key to highlight/select");
    c_plot->add_option("--j", plot.j, "Bob key to highlight/select");
    c_plot->add_option("--gamma-max", plot.gamma_max, "scurve range");
    c_plot->add_option("--seed", plot.seed, "seed (models with random keys)");
    c_plot->add_option("--out,-o", plot.out.path, "output SVG file")->required();

    NogoOptions ng;
    auto* c_nogo = app.add_subcommand("nogo", "Two-party referee challenge");
    c_nogo->add_option("--alice", ng.alice, "Alice strategy id");
    c_nogo->add_option("--bob", ng.bob, "Bob strategy id");
    c_nogo->add_option("--trials", ng.trials, "number of trials");
    c_nogo->add_option("--seed", ng.seed, "run seed");
    c_nogo->add_option("--messages", ng.messages_path, "message transcript JSONL");
    c_nogo->add_option("--log", ng.log_path, "analyze-compatible trial log");
    c_nogo->add_flag("--cheat", ng.cheat, "enable the setting leak (negative testing)");
    c_nogo->add_flag("--list", ng.list, "list strategy ids");
    c_nogo->add_option("--out,-o", ng.out.path, "verdict output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (c_sim->parsed()) return run_simulate(sim);
        if (c_an->parsed()) return run_analyze(analyze_log, analyze_format, analyze_out);
        if (c_inj->parsed()) return run_inject(inj);
        if (c_tab->parsed()) return run_table(table_format, table_out);
        if (c_scan->parsed()) return run_scan(scan);
        if (c_plot->parsed()) return run_plot(plot);
        if (c_nogo->parsed()) {
            if (!ng.list && (ng.alice.empty() || ng.bob.empty()))
                throw CLI::ValidationError("nogo needs --alice and --bob (or --list)");
            return run_nogo(ng);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nogo::ProtocolViolation& e) {
        std::cerr << "protocol violation: " << e.what() << '\n';
        return kExitProtocol;
    } catch (const svg::MissingTrace& e) {
        std::cerr << "error: " << e.what() << "\n"
                  << "hint: simulate a loop-of-four model with --trace to record hidden states\n";
        return kExitNoData;
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
