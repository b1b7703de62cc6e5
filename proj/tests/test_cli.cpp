#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace {

const std::string kCli = BELLSIM_CLI_PATH;

struct Result {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_count = 0;

// Runs the CLI via the shell, capturing stdout/stderr.
Result run(const std::string& args) {
    const std::string tag = std::to_string(run_count++);
    const std::string out_path = "cli_out_" + tag + ".txt";
    const std::string err_path = "cli_err_" + tag + ".txt";
    const std::string cmd = kCli + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    Result r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return r;
}

struct TempFile {
    std::string path;
    TempFile(const std::string& name, const std::string& content) : path(name) {
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

const char* kSingletModel =
    R"({"kind":"singlet","angles_deg":{"alice":[0,90],"bob":[225,135]}})";

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    for (std::string line; std::getline(ss, line);)
        if (!line.empty()) lines.push_back(line);
    return lines;
}

} // namespace

TEST_CASE("simulate emits well-formed JSONL") {
    TempFile model("cli_model1.json", kSingletModel);
    const Result r = run("simulate --model " + model.path + " --trials 10 --seed 1");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 10);
    for (const auto& line : lines) {
        const json j = json::parse(line);
        CHECK(j.contains("i"));
        CHECK(j.contains("a"));
        CHECK((j["x"].is_null() || j["x"].is_number()));
    }
}

TEST_CASE("simulate is deterministic given the seed") {
    TempFile model("cli_model2.json", kSingletModel);
    const std::string args = "simulate --model " + model.path + " --trials 200 --seed 99";
    const Result r1 = run(args);
    const Result r2 = run(args);
    CHECK(r1.out == r2.out);
    const Result r3 = run("simulate --model " + model.path + " --trials 200 --seed 100");
    CHECK(r1.out != r3.out);
}

TEST_CASE("manifest runs reproduce flag runs") {
    TempFile model("cli_model3.json", kSingletModel);
    TempFile manifest("cli_manifest.json",
                      R"({"model":"cli_model3.json","trials":50,"seed":7})");
    const Result direct = run("simulate --model " + model.path + " --trials 50 --seed 7");
    const Result via_manifest = run("simulate --manifest " + manifest.path);
    CHECK(direct.out == via_manifest.out);
}

TEST_CASE("pipeline stages compose byte-for-byte") {
    TempFile model("cli_model4.json", kSingletModel);
    run("simulate --model " + model.path + " --trials 500 --seed 3 --out cli_stage.jsonl");
    run("inject --log cli_stage.jsonl --eta-a 0.8 --eta-b 0.8 --seed 5 --out cli_stage2.jsonl");
    const Result staged = run("analyze --log cli_stage2.jsonl");
    const Result piped = run("simulate --model " + model.path + " --trials 500 --seed 3 | " +
                             kCli + " inject --eta-a 0.8 --eta-b 0.8 --seed 5 | " + kCli +
                             " analyze");
    CHECK(staged.exit_code == 0);
    CHECK(staged.out == piped.out);
    std::remove("cli_stage.jsonl");
    std::remove("cli_stage2.jsonl");
}

TEST_CASE("analyze on a clean singlet log finds the quantum value") {
    TempFile model("cli_model5.json", kSingletModel);
    run("simulate --model " + model.path + " --trials 100000 --seed 11 --out cli_an.jsonl");
    const Result r = run("analyze --log cli_an.jsonl");
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    double best = -10;
    for (const auto& entry : rep["chsh"]) best = std::max(best, entry["value"].get<double>());
    CHECK(best == doctest::Approx(2.828).epsilon(0.02));
    CHECK(rep["fine_lhv"]["representable"] == false);
    CHECK(rep["no_signalling"]["alice"]["passed"] == true);
    std::remove("cli_an.jsonl");
}

TEST_CASE("analyze on a local-model log keeps every CHSH form under the bound") {
    // At the CHSH-optimal angles the sign model saturates S = 2, so only the
    // noise-tolerant bound applies there.
    TempFile boundary("cli_model_lhv1.json",
                      R"({"kind":"sign-lhv","angles_deg":{"alice":[0,90],"bob":[225,135]}})");
    run("simulate --model " + boundary.path + " --trials 100000 --seed 17 --out cli_lhv.jsonl");
    const Result r = run("analyze --log cli_lhv.jsonl");
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    const double four_sigma = 4.0 * 8.0 * std::sqrt(0.1875 / 100000.0);
    for (const auto& entry : rep["chsh"])
        CHECK(entry["value"].get<double>() <= 2.0 + four_sigma);

    // Interior angles stay representable even with sampling noise.
    TempFile interior("cli_model_lhv2.json",
                      R"({"kind":"sign-lhv","angles_deg":{"alice":[0,50],"bob":[100,170]}})");
    run("simulate --model " + interior.path + " --trials 100000 --seed 18 --out cli_lhv.jsonl");
    const Result r2 = run("analyze --log cli_lhv.jsonl");
    REQUIRE(r2.exit_code == 0);
    CHECK(json::parse(r2.out)["fine_lhv"]["representable"] == true);
    std::remove("cli_lhv.jsonl");
}

TEST_CASE("analyze: empty log exits 2 with an explicit no-data report") {
    TempFile empty("cli_empty.jsonl", "");
    const Result r = run("analyze --log " + empty.path);
    CHECK(r.exit_code == 2);
    CHECK(json::parse(r.out)["error"] == "no data");
}

TEST_CASE("analyze: malformed line is reported with its number") {
    TempFile bad("cli_bad.jsonl",
                 "{\"i\":0,\"a\":1,\"b\":1,\"x\":1,\"y\":1}\n{broken\n");
    const Result r = run("analyze --log " + bad.path);
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("line 2") != std::string::npos);
}

TEST_CASE("table emits the closed-form maxima") {
    const Result r = run("table");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 13); // header + 12 rows
    CHECK(lines[0] == "n,s_max");
    CHECK(lines[2] == "2,2.828427");
    CHECK(lines[5] == "5,3.697653");
    CHECK(lines[10] == "10,3.959522");
    CHECK(lines[12] == "20,3.999066");
}

TEST_CASE("scan --scurve peaks at pi/4") {
    const Result r = run("scan --scurve 2 --points 600");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() > 600);
    double best_g = 0, best_s = -10;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto comma = lines[i].find(',');
        const double g = std::stod(lines[i].substr(0, comma));
        const double s = std::stod(lines[i].substr(comma + 1));
        if (s > best_s) {
            best_s = s;
            best_g = g;
        }
    }
    CHECK(best_s == doctest::Approx(2.828427).epsilon(1e-4));
    CHECK(best_g == doctest::Approx(0.785398).epsilon(1e-2));
}

TEST_CASE("scan --threshold --crit reports the critical efficiency") {
    const Result r = run("scan --threshold 1.0 --crit");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "r,eta_crit");
    const double crit = std::stod(lines[1].substr(lines[1].find(',') + 1));
    CHECK(crit == doctest::Approx(0.8284).epsilon(0.005));
}

TEST_CASE("scan --hcurves emits one column per dimension") {
    const Result r = run("scan --hcurves 1,2,3 --points 10");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    CHECK(lines[0] == "gamma,h1,h2,h3");
    CHECK(lines.size() == 12);
}

TEST_CASE("plot subcommands write SVG files") {
    TempFile model("cli_model6.json",
                   R"({"kind":"loop-of-four","random_keys":{"dim":2,"k":12,"l":16}})");
    SUBCASE("hcurves") {
        const Result r = run("plot --kind hcurves --n-list 1,2,3,4,5 --out cli_h.svg");
        CHECK(r.exit_code == 0);
        const std::string svg = slurp("cli_h.svg");
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.size() < 2 * 1024 * 1024);
        std::remove("cli_h.svg");
    }
    SUBCASE("scurve") {
        const Result r = run("plot --kind scurve --n 2 --out cli_s.svg");
        CHECK(r.exit_code == 0);
        CHECK(slurp("cli_s.svg").rfind("<svg", 0) == 0);
        std::remove("cli_s.svg");
    }
    SUBCASE("fig6") {
        const Result r =
            run("plot --kind fig6 --model " + model.path + " --i 10 --j 15 --seed 4 --out cli_f6.svg");
        CHECK(r.exit_code == 0);
        CHECK(slurp("cli_f6.svg").rfind("<svg", 0) == 0);
        std::remove("cli_f6.svg");
    }
    SUBCASE("fig9 needs traces and says so") {
        run("simulate --model " + model.path + " --trials 300 --seed 4 --out cli_plain.jsonl");
        const Result fail = run("plot --kind fig9 --log cli_plain.jsonl --i 1 --j 1 --out cli_f9.svg");
        CHECK(fail.exit_code == 2);
        CHECK(fail.err.find("--trace") != std::string::npos);

        run("simulate --model " + model.path +
            " --trials 4000 --seed 4 --trace --out cli_traced.jsonl");
        const Result ok = run("plot --kind fig9 --log cli_traced.jsonl --i 1 --j 1 --out cli_f9.svg");
        CHECK(ok.exit_code == 0);
        const std::string svg = slurp("cli_f9.svg");
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.size() < 2 * 1024 * 1024);
        std::remove("cli_f9.svg");
        std::remove("cli_plain.jsonl");
        std::remove("cli_traced.jsonl");
    }
}

TEST_CASE("nogo verdicts and logs") {
    const Result r = run("nogo --alice sign-lhv --bob sign-lhv --trials 3000 --seed 13 "
                         "--log cli_nogo.jsonl");
    CHECK(r.exit_code == 0);
    const json verdict = json::parse(r.out);
    CHECK(verdict["chsh"]["statistic"].get<double>() <= 2.2);
    CHECK(verdict["martingale"]["p_value"].get<double>() > 1e-3);
    // the emitted log is analyze-compatible
    const Result an = run("analyze --log cli_nogo.jsonl");
    CHECK(an.exit_code == 0);
    std::remove("cli_nogo.jsonl");

    const Result list = run("nogo --list");
    CHECK(list.exit_code == 0);
    CHECK(list.out.find("sign-lhv") != std::string::npos);
}

TEST_CASE("automaton models run through simulate") {
    TempFile model("cli_model7.json", R"({"kind":"automaton","id":"memory:feedback","k":2,"l":2})");
    const Result r = run("simulate --model " + model.path + " --trials 50 --seed 2");
    CHECK(r.exit_code == 0);
    CHECK(lines_of(r.out).size() == 50);
}

TEST_CASE("analyze --format csv emits the counts table") {
    TempFile model("cli_model9.json", kSingletModel);
    run("simulate --model " + model.path + " --trials 1000 --seed 8 --out cli_csv.jsonl");
    const Result r = run("analyze --log cli_csv.jsonl --format csv");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 5); // header + 4 cells
    CHECK(lines[0] == "i,j,npp,npm,nmp,nmm,e");
    std::remove("cli_csv.jsonl");
}

TEST_CASE("table --format json") {
    const Result r = run("table --format json");
    CHECK(r.exit_code == 0);
    const json rows = json::parse(r.out);
    REQUIRE(rows.size() == 12);
    CHECK(rows[1]["n"] == 2);
    CHECK(rows[1]["s_max"].get<double>() == doctest::Approx(2.828427).epsilon(1e-6));
}

TEST_CASE("a 10^6-trial loop-of-four run completes comfortably inside the budget") {
    TempFile model("cli_model10.json",
                   R"({"kind":"loop-of-four","random_keys":{"dim":2,"k":30,"l":30}})");
    const auto t0 = std::chrono::steady_clock::now();
    const Result r = run("simulate --model " + model.path +
                         " --trials 1000000 --seed 5 --out cli_big.jsonl");
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(r.exit_code == 0);
    CHECK(elapsed < 60.0);
    std::ifstream in("cli_big.jsonl");
    std::size_t count = 0;
    for (std::string line; std::getline(in, line);) ++count;
    CHECK(count == 1000000);

    // the wide-grid analysis path: best-selection scan plus the grid tests
    const Result an = run("analyze --log cli_big.jsonl");
    REQUIRE(an.exit_code == 0);
    const json rep = json::parse(an.out);
    CHECK(rep["k"] == 30);
    const double best = rep["chsh_best"]["value"].get<double>();
    CHECK(best > 2.0); // some selection of a 30x30 grid violates the bound
    CHECK(best < 4.0);
    CHECK(rep["tests"]["independence_quad"][0]["p_value"].get<double>() < 1e-3);
    CHECK(rep["tests"]["ks_correlations"]["p_value"].get<double>() > 1e-3);
    std::remove("cli_big.jsonl");
}

TEST_CASE("inject --eta sets both arms") {
    TempFile model("cli_model8.json", kSingletModel);
    run("simulate --model " + model.path + " --trials 400 --seed 6 --out cli_eta.jsonl");
    const Result both = run("inject --log cli_eta.jsonl --eta 0.7 --seed 9");
    const Result split = run("inject --log cli_eta.jsonl --eta-a 0.7 --eta-b 0.7 --seed 9");
    CHECK(both.exit_code == 0);
    CHECK(both.out == split.out);
    std::remove("cli_eta.jsonl");
}

TEST_CASE("protocol violations exit 3") {
    // The quantum cheat strategy refuses to play without the leak.
    const Result r = run("nogo --alice cheat:quantum --bob cheat:quantum --trials 10 --seed 1");
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("protocol violation") != std::string::npos);
}

TEST_CASE("scan --threshold grid mode emits eta,max_violation rows") {
    const Result r = run("scan --threshold 1.0 --eta-min 0.8 --eta-max 0.9 --eta-step 0.05");
    CHECK(r.exit_code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 4); // header + 3 rows
    CHECK(lines[0] == "eta,max_violation");
    // below the critical point the best value is negative, above positive
    CHECK(std::stod(lines[1].substr(lines[1].find(',') + 1)) < 0.0);
    CHECK(std::stod(lines[3].substr(lines[3].find(',') + 1)) > 0.0);
    CHECK(r.err.find("eta_crit") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run("simulate --no-such-flag").exit_code == 1);
    CHECK(run("plot --kind nope --out x.svg").exit_code == 1);
    CHECK(run("nonexistent-command").exit_code == 1);
    CHECK(run("simulate").exit_code == 1); // missing --model
    TempFile garbage("cli_garbage.json", "{not json");
    CHECK(run("simulate --model cli_garbage.json --trials 5").exit_code == 1);
    CHECK(run("--help").exit_code == 0);
}
