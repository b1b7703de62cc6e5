#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include "bellsim/models.hpp"
#include "bellsim/stats.hpp"
#include "support/helpers.hpp"

using namespace bellsim;
using namespace bellsim::models;
using testsupport::simulate_log;

namespace {
constexpr double kPi = std::numbers::pi;

ModelSpec model_with(ModelKind kind, std::vector<Direction> a, std::vector<Direction> b) {
    ModelSpec m;
    m.kind = kind;
    m.alice = std::move(a);
    m.bob = std::move(b);
    return m;
}

ModelSpec random_key_model(ModelKind kind, int dim, int k, int l, std::uint64_t seed) {
    RngStream rng = RngStream::for_module(seed, "keys");
    auto [a, b] = carol_keys(dim, k, l, rng);
    return model_with(kind, std::move(a), std::move(b));
}

// Independent oracle for the Eberhard pair probabilities: build the state
// as an explicit 4-vector, the analyzers as rank-1 projectors, and take
// Kronecker products. Shares no code with models::eberhard_probs.
double eberhard_oracle_prob(double r, double alpha, double beta, int x, int y) {
    const double nrm = 1.0 / std::sqrt(1.0 + r * r);
    // basis order |HH>, |HV>, |VH>, |VV>
    const double psi[4] = {0.0, nrm, r * nrm, 0.0};
    const double ax = x == +1 ? alpha : alpha + kPi / 2;
    // Bob's '+' axis at angle beta from the V axis, mirrored.
    const double by = y == +1 ? kPi / 2 - beta : -beta;
    const double ea[2] = {std::cos(ax), std::sin(ax)};
    const double eb[2] = {std::cos(by), std::sin(by)};
    double amp = 0.0;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) amp += ea[p] * eb[q] * psi[2 * p + q];
    return amp * amp;
}

} // namespace

TEST_CASE("correlation_exact: singlet") {
    const Direction a({0.0, 0.0, 1.0});
    auto m = model_with(ModelKind::Singlet, {a}, {a});
    CHECK(correlation_exact(m, 1, 1) == doctest::Approx(-1.0));
    m.bob = {Direction({1.0, 0.0, 0.0})};
    CHECK(correlation_exact(m, 1, 1) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("correlation_exact: loop and graph models equal cos(eta) in n=2") {
    RngStream rng(5, 0);
    for (int t = 0; t < 200; ++t) {
        const Direction a = uniform_direction(2, rng);
        const Direction b = uniform_direction(2, rng);
        const double eta = geom::closeness_eta(a, b, geom::EtaConvention::Singlet);
        const auto graph = model_with(ModelKind::NSphereGraph, {a}, {b});
        const auto loop = model_with(ModelKind::LoopOfFour, {a}, {b});
        CHECK(correlation_exact(graph, 1, 1) == doctest::Approx(std::cos(eta)).epsilon(1e-12));
        CHECK(correlation_exact(loop, 1, 1) == doctest::Approx(std::cos(eta)).epsilon(1e-12));
    }
    SUBCASE("eta = pi/2 gives zero correlation") {
        const Direction a({1.0, 0.0, 0.0});
        const Direction b({-1.0, 0.0, 0.0});
        // angle pi/2 from a means eta = pi/2 under the singlet convention
        const Direction c({0.0, 1.0, 0.0});
        const auto loop = model_with(ModelKind::LoopOfFour, {a}, {c});
        CHECK(correlation_exact(loop, 1, 1) == doctest::Approx(0.0).epsilon(1e-15));
        (void)b;
    }
}

TEST_CASE("sign-LHV closed form matches its brute-force sample mean") {
    RngStream rng(6, 0);
    const Direction a = uniform_direction(2, rng);
    const Direction b = uniform_direction(2, rng);
    const auto m = model_with(ModelKind::SignLhv, {a}, {b});
    const double expect = 2.0 * angle_between(a, b) / kPi - 1.0;
    CHECK(correlation_exact(m, 1, 1) == doctest::Approx(expect));

    const int n = 200000;
    double sum = 0.0;
    for (int t = 0; t < n; ++t) {
        const auto o = sample_trial(m, 1, 1, RngStream::for_trial(7, "model", static_cast<std::uint64_t>(t)));
        sum += *o.x * *o.y;
    }
    CHECK(sum / n == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("singlet at equal settings is perfectly anti-correlated") {
    const Direction a({0.6, -0.8, 0.0});
    const auto m = model_with(ModelKind::Singlet, {a}, {a});
    for (int t = 0; t < 2000; ++t) {
        const auto o = sample_trial(m, 1, 1, RngStream::for_trial(8, "model", static_cast<std::uint64_t>(t)));
        CHECK(*o.x == -*o.y);
    }
}

TEST_CASE("loop-of-four mechanics") {
    SUBCASE("worked example: beta=1.476, lambda=3.258") {
        const double la = geom::loop_separation(0.0, 3.258);
        const double lb = geom::loop_separation(1.476, 3.258);
        CHECK(la == doctest::Approx(0.742));
        CHECK(lb == doctest::Approx(1.782));
        CHECK((la <= 1.0 ? +1 : -1) == +1); // not-green
        CHECK((lb <= 1.0 ? +1 : -1) == -1); // green
    }
    SUBCASE("coincident points force x == y") {
        const Direction a({1.0, 0.0, 0.0});
        const auto m = model_with(ModelKind::LoopOfFour, {a}, {a.antipode()}); // eta=0, beta=0
        for (int t = 0; t < 3000; ++t) {
            const auto o =
                sample_trial(m, 1, 1, RngStream::for_trial(9, "model", static_cast<std::uint64_t>(t)));
            CHECK(*o.x == *o.y);
        }
    }
}

TEST_CASE("loop-of-four hidden state satisfies the loop and rectangle identities") {
    const auto m = random_key_model(ModelKind::LoopOfFour, 2, 3, 3, 77);
    for (int t = 0; t < 50000; ++t) {
        const int i = 1 + t % 3, j = 1 + (t / 3) % 3;
        const auto o =
            sample_trial(m, i, j, RngStream::for_trial(10, "model", static_cast<std::uint64_t>(t)));
        REQUIRE(o.hidden.has_value());
        const LoopState& st = *o.hidden;
        CHECK(st.lambda_a == doctest::Approx(geom::loop_separation(st.alpha, st.lambda)));
        CHECK(st.lambda_b == doctest::Approx(geom::loop_separation(st.beta, st.lambda)));
        const double sum = st.lambda_a + st.lambda_b;
        const double diff = std::fabs(st.lambda_a - st.lambda_b);
        const bool on_rectangle = std::fabs(sum - st.beta) < 1e-12 ||
                                  std::fabs(sum - (4.0 - st.beta)) < 1e-12 ||
                                  std::fabs(diff - st.beta) < 1e-12;
        CHECK(on_rectangle);
    }
}

TEST_CASE("loop-of-four marginals are uniform and fair") {
    const auto m = random_key_model(ModelKind::LoopOfFour, 2, 2, 2, 78);
    std::vector<double> la, lb;
    std::int64_t plus = 0, n = 100000;
    for (int t = 0; t < n; ++t) {
        const auto o =
            sample_trial(m, 1, 2, RngStream::for_trial(11, "model", static_cast<std::uint64_t>(t)));
        la.push_back(o.hidden->lambda_a);
        lb.push_back(o.hidden->lambda_b);
        plus += *o.x == +1;
    }
    CHECK(stats::ks_uniformity(la, 0.0, 2.0).p_value > 1e-3);
    CHECK(stats::ks_uniformity(lb, 0.0, 2.0).p_value > 1e-3);
    // P(x=+1) = 1/2 within 4 sigma
    CHECK(std::fabs(plus / static_cast<double>(n) - 0.5) < 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("loop-of-four sample mean tracks 1 - beta and cos(eta)") {
    const auto m = random_key_model(ModelKind::LoopOfFour, 2, 4, 4, 79);
    for (int i = 1; i <= 2; ++i) {
        for (int j = 1; j <= 2; ++j) {
            const double expect = correlation_exact(m, i, j);
            const double eta = geom::closeness_eta(m.alice[static_cast<std::size_t>(i - 1)],
                                                   m.bob[static_cast<std::size_t>(j - 1)],
                                                   geom::EtaConvention::Singlet);
            const double beta = geom::cdf_h(eta, 2);
            CHECK(expect == doctest::Approx(1.0 - beta).epsilon(1e-12));
            CHECK(expect == doctest::Approx(std::cos(eta)).epsilon(1e-12));
            const int n = 40000;
            double sum = 0.0;
            for (int t = 0; t < n; ++t) {
                const auto o = sample_trial(
                    m, i, j,
                    RngStream::for_trial(static_cast<std::uint64_t>(100 + 10 * i + j), "model",
                                         static_cast<std::uint64_t>(t)));
                sum += static_cast<double>(*o.x * *o.y);
            }
            const double sigma = std::sqrt((1.0 - expect * expect) / n) + 1e-9;
            CHECK(std::fabs(sum / n - expect) < 3.5 * sigma);
        }
    }
}

TEST_CASE("eberhard_probs against the independent 4-dim oracle") {
    for (double r : {1.0, 0.7, 0.3, 0.0}) {
        for (int ga = 0; ga < 8; ++ga) {
            for (int gb = 0; gb < 8; ++gb) {
                const double alpha = kPi * ga / 8;
                const double beta = kPi * gb / 8;
                const OutcomeDist d = eberhard_probs(r, alpha, beta, 1.0);
                CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
                for (int x : {-1, +1})
                    for (int y : {-1, +1})
                        CHECK(d.at(x, y) ==
                              doctest::Approx(eberhard_oracle_prob(r, alpha, beta, x, y))
                                  .epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("eberhard r=1 reproduces cos 2(alpha - beta)") {
    for (int ga = 0; ga < 12; ++ga) {
        for (int gb = 0; gb < 12; ++gb) {
            const double alpha = kPi * ga / 12, beta = kPi * gb / 12;
            const OutcomeDist d = eberhard_probs(1.0, alpha, beta, 1.0);
            CHECK(d.correlation() ==
                  doctest::Approx(std::cos(2.0 * (alpha - beta))).epsilon(1e-12));
        }
    }
}

TEST_CASE("eberhard efficiency handling") {
    SUBCASE("eff = 0 puts all mass on double non-detection") {
        const OutcomeDist d = eberhard_probs(0.8, 0.3, 1.1, 0.0);
        CHECK(d.at(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("eff splits mass consistently") {
        const OutcomeDist full = eberhard_probs(0.6, 0.4, 0.9, 1.0);
        const OutcomeDist d = eberhard_probs(0.6, 0.4, 0.9, 0.7);
        CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
        for (int x : {-1, +1})
            for (int y : {-1, +1})
                CHECK(d.at(x, y) == doctest::Approx(0.49 * full.at(x, y)).epsilon(1e-12));
        CHECK(d.marginal_x(0) == doctest::Approx(0.3).epsilon(1e-12));
    }
    SUBCASE("r = 0 is a product state") {
        for (int ga = 0; ga < 6; ++ga) {
            for (int gb = 0; gb < 6; ++gb) {
                const OutcomeDist d = eberhard_probs(0.0, kPi * ga / 6, kPi * gb / 6, 1.0);
                const double ex = d.marginal_x(+1) - d.marginal_x(-1);
                const double ey = d.marginal_y(+1) - d.marginal_y(-1);
                const double exy = d.at(+1, +1) + d.at(-1, -1) - d.at(+1, -1) - d.at(-1, +1);
                CHECK(exy == doctest::Approx(ex * ey).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("counterfactual extension of the sign model") {
    const auto m = random_key_model(ModelKind::SignLhv, 2, 2, 2, 80);
    const JointLaw4 law = counterfactual_extension(m, 4096);
    CHECK(law.sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (double p : law.p) CHECK(p >= 0.0);

    SUBCASE("all 8 one-sided CHSH values stay in [-2, 2]") {
        for (double v : one_sided_chsh(law)) CHECK(v <= 2.0 + 1e-12);
    }
    SUBCASE("pair marginals reproduce the closed form within quadrature error") {
        for (int i : {1, 2})
            for (int j : {1, 2})
                CHECK(law.correlation(i, j) ==
                      doctest::Approx(correlation_exact(m, i, j)).epsilon(0.08));
    }
}

TEST_CASE("counterfactual extension at equal settings: X1 = -Y1 surely") {
    RngStream rng(81, 0);
    const Direction a = uniform_direction(2, rng);
    const Direction a2 = uniform_direction(2, rng);
    const auto m = model_with(ModelKind::SignLhv, {a, a2}, {a, a2});
    const JointLaw4 law = counterfactual_extension(m, 20000);
    double p_opposite = 0.0;
    for (int x1 : {-1, +1})
        for (int x2 : {-1, +1})
            for (int y2 : {-1, +1}) p_opposite += law.prob(x1, x2, -x1, y2);
    CHECK(p_opposite == doctest::Approx(1.0));
}

TEST_CASE("counterfactual extension rejects non-deterministic models") {
    const auto singlet = testsupport::optimal_singlet_model();
    CHECK_THROWS_AS(counterfactual_extension(singlet, 100), std::invalid_argument);
}

TEST_CASE("deterministic strategy tables give well-formed laws") {
    RngStream rng(82, 0);
    for (int t = 0; t < 50; ++t) {
        DeterministicStrategy s;
        s.k = s.l = 2;
        s.n_lambda = 4;
        for (int i = 0; i < 8; ++i) {
            s.alice.push_back(rng.next_bernoulli(0.5) ? +1 : -1);
            s.bob.push_back(rng.next_bernoulli(0.5) ? +1 : -1);
        }
        const JointLaw4 law = counterfactual_extension(s);
        CHECK(law.sum() == doctest::Approx(1.0));
        for (double p : law.p) CHECK(p >= 0.0);
        for (double v : one_sided_chsh(law)) CHECK(v <= 2.0);
    }
}

TEST_CASE("carol_keys") {
    RngStream rng(83, 0);
    auto [a, b] = carol_keys(2, 30, 30, rng);
    CHECK(a.size() == 30);
    CHECK(b.size() == 30);
    for (const auto& d : a) CHECK(d.coords().size() == 3);

    RngStream r1(84, 0), r2(84, 0);
    auto k1 = carol_keys(3, 2, 2, r1);
    auto k2 = carol_keys(3, 2, 2, r2);
    for (int i = 0; i < 2; ++i)
        CHECK(dot(k1.first[static_cast<std::size_t>(i)], k2.first[static_cast<std::size_t>(i)]) ==
              doctest::Approx(1.0));
    CHECK_THROWS_AS(carol_keys(2, 1, 5, rng), std::invalid_argument);
}

TEST_CASE("no-signalling holds exactly for closed-form models") {
    const auto keys = random_key_model(ModelKind::NSphereGraph, 2, 3, 3, 85);
    for (ModelKind kind : {ModelKind::Singlet, ModelKind::PhotonPair, ModelKind::SignLhv,
                           ModelKind::NSphereGraph, ModelKind::LoopOfFour}) {
        auto m = keys;
        m.kind = kind;
        if (kind == ModelKind::PhotonPair) m = random_key_model(kind, 1, 3, 3, 86);
        // marginals are exactly fair for every setting pair
        for (int i = 1; i <= 3; ++i) {
            for (int j = 1; j <= 3; ++j) {
                const double e = correlation_exact(m, i, j);
                const double p_plus = (1.0 + e) / 4.0 + (1.0 - e) / 4.0;
                CHECK(p_plus == doctest::Approx(0.5));
            }
        }
    }
}

TEST_CASE("rotation invariance of correlations") {
    RngStream rng(87, 0);
    const auto m = random_key_model(ModelKind::NSphereGraph, 2, 4, 4, 88);
    const auto rot = testsupport::random_rotation(3, rng);
    for (ModelKind kind : {ModelKind::Singlet, ModelKind::SignLhv, ModelKind::NSphereGraph,
                           ModelKind::LoopOfFour}) {
        auto base = m;
        base.kind = kind;
        auto rotated = base;
        for (auto& d : rotated.alice) d = testsupport::rotate(d, rot);
        for (auto& d : rotated.bob) d = testsupport::rotate(d, rot);
        for (int i = 1; i <= 4; ++i)
            for (int j = 1; j <= 4; ++j)
                CHECK(std::fabs(correlation_exact(base, i, j) -
                                correlation_exact(rotated, i, j)) < 1e-10);
    }
}

TEST_CASE("Carol statistics: pairs and triples independent, the quadruple is not") {
    const auto m = random_key_model(ModelKind::NSphereGraph, 2, 30, 30, 4242);
    auto sampler = make_sampler(m);
    const auto log = simulate_log(*sampler, 30, 30, 1800, 4242);

    for (const auto& rep : stats::independence_tests(log, stats::Arity::Pair))
        CHECK_MESSAGE(rep.p_value > 1e-3, rep.method);
    for (const auto& rep : stats::independence_tests(log, stats::Arity::Triple))
        CHECK_MESSAGE(rep.p_value > 1e-3, rep.method);
    const auto quad = stats::independence_tests(log, stats::Arity::Quad);
    REQUIRE(quad.size() == 1);
    CHECK(quad[0].p_value < 1e-3);
}

TEST_CASE("automaton plumbing") {
    ModelSpec m;
    m.kind = ModelKind::Automaton;
    m.automaton_id = "no-such-strategy";
    m.k_hint = m.l_hint = 2;
    CHECK_THROWS_AS(make_sampler(m), std::invalid_argument);
    CHECK_THROWS_AS(sample_trial(m, 1, 1, RngStream(0, 0)), std::invalid_argument);
}
