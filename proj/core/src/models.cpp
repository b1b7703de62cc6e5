#include "bellsim/models.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace bellsim::models {

namespace {
constexpr double kPi = std::numbers::pi;

int sign_pm(double v) { return v >= 0.0 ? +1 : -1; } // ties (measure zero) go to +1

double eta_singlet(const ModelSpec& m, int i, int j) {
    return geom::closeness_eta(m.alice[static_cast<std::size_t>(i - 1)],
                               m.bob[static_cast<std::size_t>(j - 1)],
                               geom::EtaConvention::Singlet);
}

double planar_angle(const Direction& d) { return angle_of(d); }

void check_indices(const ModelSpec& m, int i, int j) {
    if (i < 1 || i > m.k() || j < 1 || j > m.l())
        throw std::out_of_range("model: setting index out of range");
}

struct AutomatonEntry {
    AutomatonFactory factory;
    std::optional<DeterministicStrategy> table;
};

std::map<std::string, AutomatonEntry>& registry() {
    static std::map<std::string, AutomatonEntry> r;
    return r;
}
std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

const char* kind_name(ModelKind k) {
    switch (k) {
    case ModelKind::Singlet: return "singlet";
    case ModelKind::PhotonPair: return "photon-pair";
    case ModelKind::Eberhard: return "eberhard";
    case ModelKind::SignLhv: return "sign-lhv";
    case ModelKind::LoopOfFour: return "loop-of-four";
    case ModelKind::NSphereGraph: return "nsphere-graph";
    case ModelKind::Automaton: return "automaton";
    }
    return "?";
}

ModelKind kind_from_name(const std::string& name) {
    for (ModelKind k : {ModelKind::Singlet, ModelKind::PhotonPair, ModelKind::Eberhard,
                        ModelKind::SignLhv, ModelKind::LoopOfFour, ModelKind::NSphereGraph,
                        ModelKind::Automaton})
        if (name == kind_name(k)) return k;
    throw std::invalid_argument("unknown model kind: " + name);
}

void ModelSpec::validate() const {
    if (kind == ModelKind::Eberhard && !(r >= 0.0 && r <= 1.0))
        throw std::invalid_argument("eberhard: r must lie in [0,1]");
    if (kind == ModelKind::Automaton) {
        if (k() < 1 || l() < 1)
            throw std::invalid_argument("automaton: needs k,l >= 1");
        return;
    }
    if (alice.empty() || bob.empty())
        throw std::invalid_argument(std::string(kind_name(kind)) + ": settings required");
    const int d = alice.front().dim();
    for (const auto& u : alice)
        if (u.dim() != d) throw std::invalid_argument("settings: mixed dimensions");
    for (const auto& v : bob)
        if (v.dim() != d) throw std::invalid_argument("settings: mixed dimensions");
    if ((kind == ModelKind::Eberhard || kind == ModelKind::PhotonPair) && d != 1)
        throw std::invalid_argument(std::string(kind_name(kind)) +
                                    ": settings are planar polarizer angles (1-sphere)");
}

int JointLaw4::index(int x1, int x2, int y1, int y2) {
    auto bit = [](int v) {
        if (v != -1 && v != +1) throw std::invalid_argument("outcome must be -1/+1");
        return v == +1 ? 1 : 0;
    };
    return (bit(x1) << 3) | (bit(x2) << 2) | (bit(y1) << 1) | bit(y2);
}

double JointLaw4::prob(int x1, int x2, int y1, int y2) const {
    return p[static_cast<std::size_t>(index(x1, x2, y1, y2))];
}

double JointLaw4::correlation(int i, int j) const {
    double e = 0.0;
    for (int idx = 0; idx < 16; ++idx) {
        const int x = (idx >> (i == 1 ? 3 : 2)) & 1 ? +1 : -1;
        const int y = (idx >> (j == 1 ? 1 : 0)) & 1 ? +1 : -1;
        e += p[static_cast<std::size_t>(idx)] * x * y;
    }
    return e;
}

double JointLaw4::sum() const {
    double s = 0.0;
    for (double v : p) s += v;
    return s;
}

std::array<double, 8> one_sided_chsh(const JointLaw4& law) {
    const double e11 = law.correlation(1, 1);
    const double e12 = law.correlation(1, 2);
    const double e21 = law.correlation(2, 1);
    const double e22 = law.correlation(2, 2);
    const double base = e11 + e12 + e21 + e22;
    std::array<double, 8> out{};
    const double es[4] = {e11, e12, e21, e22};
    for (int m = 0; m < 4; ++m) {
        out[static_cast<std::size_t>(2 * m)] = base - 2.0 * es[m];
        out[static_cast<std::size_t>(2 * m + 1)] = -(base - 2.0 * es[m]);
    }
    return out;
}

double correlation_exact(const ModelSpec& m, int i, int j) {
    check_indices(m, i, j);
    switch (m.kind) {
    case ModelKind::Singlet:
        return -std::cos(angle_between(m.alice[static_cast<std::size_t>(i - 1)],
                                       m.bob[static_cast<std::size_t>(j - 1)]));
    case ModelKind::PhotonPair:
        return std::cos(2.0 * angle_between(m.alice[static_cast<std::size_t>(i - 1)],
                                            m.bob[static_cast<std::size_t>(j - 1)]));
    case ModelKind::SignLhv:
        return 2.0 *
                   angle_between(m.alice[static_cast<std::size_t>(i - 1)],
                                 m.bob[static_cast<std::size_t>(j - 1)]) /
                   kPi -
               1.0;
    case ModelKind::LoopOfFour:
    case ModelKind::NSphereGraph:
        return 1.0 - geom::cdf_h(eta_singlet(m, i, j), m.dim());
    case ModelKind::Eberhard:
        return eberhard_probs(m.r, planar_angle(m.alice[static_cast<std::size_t>(i - 1)]),
                              planar_angle(m.bob[static_cast<std::size_t>(j - 1)]), 1.0)
            .correlation();
    case ModelKind::Automaton:
        throw std::invalid_argument("correlation_exact: automatons have no closed form");
    }
    throw std::logic_error("unreachable");
}

namespace {

TrialOutcome sample_pair_law(double e, RngStream& rng) {
    // P(x,y) = (1 + x*y*e)/4; atoms ordered (+,+), (+,-), (-,+), (-,-).
    const double p_agree = (1.0 + e) / 4.0;
    const double p_differ = (1.0 - e) / 4.0;
    const double u = rng.next_double();
    TrialOutcome o;
    if (u < p_agree) {
        o.x = +1, o.y = +1;
    } else if (u < p_agree + p_differ) {
        o.x = +1, o.y = -1;
    } else if (u < p_agree + 2 * p_differ) {
        o.x = -1, o.y = +1;
    } else {
        o.x = -1, o.y = -1;
    }
    return o;
}

TrialOutcome sample_loop(const ModelSpec& m, int i, int j, RngStream& rng) {
    const double beta = geom::cdf_h(eta_singlet(m, i, j), m.dim());
    const double lambda = rng.next_in(0.0, 4.0);
    LoopState st;
    st.alpha = 0.0;
    st.beta = beta;
    st.lambda = lambda;
    st.lambda_a = geom::loop_separation(st.alpha, lambda);
    st.lambda_b = geom::loop_separation(beta, lambda);
    TrialOutcome o;
    // Eq-style closed/open split: [0,1] -> +1 (not-green), (1,2] -> -1 (green).
    o.x = st.lambda_a <= 1.0 ? +1 : -1;
    o.y = st.lambda_b <= 1.0 ? +1 : -1;
    o.hidden = st;
    return o;
}

TrialOutcome sample_sign_lhv(const ModelSpec& m, int i, int j, RngStream& rng) {
    const Direction phi = uniform_direction(m.dim(), rng);
    TrialOutcome o;
    o.x = sign_pm(dot(m.alice[static_cast<std::size_t>(i - 1)], phi));
    o.y = sign_pm(-dot(m.bob[static_cast<std::size_t>(j - 1)], phi));
    return o;
}

TrialOutcome sample_eberhard(const ModelSpec& m, int i, int j, RngStream& rng) {
    const OutcomeDist d =
        eberhard_probs(m.r, planar_angle(m.alice[static_cast<std::size_t>(i - 1)]),
                       planar_angle(m.bob[static_cast<std::size_t>(j - 1)]), 1.0);
    const double u = rng.next_double();
    double acc = 0.0;
    TrialOutcome o;
    for (int x : {-1, +1, 0}) {
        for (int y : {-1, +1, 0}) {
            acc += d.at(x, y);
            if (u < acc) {
                if (x != 0) o.x = x;
                if (y != 0) o.y = y;
                return o;
            }
        }
    }
    o.x = +1, o.y = +1; // u == 1 boundary, probability zero
    return o;
}

} // namespace

TrialOutcome sample_trial(const ModelSpec& m, int i, int j, RngStream rng) {
    check_indices(m, i, j);
    switch (m.kind) {
    case ModelKind::Singlet:
    case ModelKind::PhotonPair:
    case ModelKind::NSphereGraph:
        return sample_pair_law(correlation_exact(m, i, j), rng);
    case ModelKind::LoopOfFour: return sample_loop(m, i, j, rng);
    case ModelKind::SignLhv: return sample_sign_lhv(m, i, j, rng);
    case ModelKind::Eberhard: return sample_eberhard(m, i, j, rng);
    case ModelKind::Automaton:
        throw std::invalid_argument("sample_trial: automatons are stateful; use make_sampler");
    }
    throw std::logic_error("unreachable");
}

int OutcomeDist::slot(int v) {
    if (v == -1) return 0;
    if (v == +1) return 1;
    if (v == 0) return 2;
    throw std::invalid_argument("OutcomeDist: outcome must be -1, +1 or 0");
}

double OutcomeDist::marginal_x(int x) const {
    const int xs = slot(x);
    return p_[xs][0] + p_[xs][1] + p_[xs][2];
}
double OutcomeDist::marginal_y(int y) const {
    const int ys = slot(y);
    return p_[0][ys] + p_[1][ys] + p_[2][ys];
}
double OutcomeDist::sum() const {
    double s = 0.0;
    for (const auto& row : p_)
        for (double v : row) s += v;
    return s;
}
double OutcomeDist::correlation() const {
    const double both = p_[0][0] + p_[0][1] + p_[1][0] + p_[1][1];
    if (both <= 0.0) return 0.0;
    return (p_[1][1] + p_[0][0] - p_[1][0] - p_[0][1]) / both;
}

OutcomeDist eberhard_probs(double r, double alpha, double beta_angle, double eff) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("eberhard_probs: r in [0,1]");
    if (!(eff >= 0.0 && eff <= 1.0)) throw std::invalid_argument("eberhard_probs: eff in [0,1]");

    // State (|HV> + r|VH>)/sqrt(1+r^2) as psi[p][q], p,q in {H=0, V=1}.
    const double norm = 1.0 / std::sqrt(1.0 + r * r);
    double psi[2][2] = {{0.0, norm}, {r * norm, 0.0}};

    // Analyzer eigenvectors in the {H, V} basis. Bob's basis is mirrored
    // (his '+' axis at angle beta from V) so that at r = 1 the pair law
    // depends on alpha - beta, matching the photon-pair probabilities.
    const double a_vec[2][2] = {{-std::sin(alpha), std::cos(alpha)},   // x = -1
                                {std::cos(alpha), std::sin(alpha)}};   // x = +1
    const double b_vec[2][2] = {{std::cos(beta_angle), -std::sin(beta_angle)},  // y = -1
                                {std::sin(beta_angle), std::cos(beta_angle)}};  // y = +1

    double q[2][2]; // both-detected ideal probabilities, [x][y] with 0 = -1
    for (int xs = 0; xs < 2; ++xs) {
        for (int ys = 0; ys < 2; ++ys) {
            double amp = 0.0;
            for (int p = 0; p < 2; ++p)
                for (int qq = 0; qq < 2; ++qq) amp += a_vec[xs][p] * b_vec[ys][qq] * psi[p][qq];
            q[xs][ys] = amp * amp;
        }
    }

    OutcomeDist d;
    const double miss = 1.0 - eff;
    for (int x : {-1, +1}) {
        for (int y : {-1, +1}) {
            const double pq = q[x == +1 ? 1 : 0][y == +1 ? 1 : 0];
            d.at(x, y) = eff * eff * pq;
            d.at(x, 0) += eff * miss * pq;
            d.at(0, y) += miss * eff * pq;
            d.at(0, 0) += miss * miss * pq;
        }
    }
    return d;
}

JointLaw4 counterfactual_extension(const DeterministicStrategy& s) {
    if (s.k < 2 || s.l < 2)
        throw std::invalid_argument("counterfactual_extension: needs 2 settings per party");
    JointLaw4 law;
    const double w = 1.0 / s.n_lambda;
    for (int lam = 0; lam < s.n_lambda; ++lam) {
        const int idx = JointLaw4::index(s.x(1, lam), s.x(2, lam), s.y(1, lam), s.y(2, lam));
        law.p[static_cast<std::size_t>(idx)] += w;
    }
    return law;
}

JointLaw4 counterfactual_extension(const ModelSpec& m, int n_grid) {
    if (m.kind == ModelKind::SignLhv) {
        if (m.k() < 2 || m.l() < 2)
            throw std::invalid_argument("counterfactual_extension: needs 2 settings per party");
        if (n_grid < 1) throw std::invalid_argument("counterfactual_extension: n_grid >= 1");
        JointLaw4 law;
        RngStream quad(0x62656C6C73696DULL, detail::fnv1a("counterfactual-quadrature"));
        const double w = 1.0 / n_grid;
        for (int g = 0; g < n_grid; ++g) {
            const Direction phi = uniform_direction(m.dim(), quad);
            const int x1 = sign_pm(dot(m.alice[0], phi));
            const int x2 = sign_pm(dot(m.alice[1], phi));
            const int y1 = sign_pm(-dot(m.bob[0], phi));
            const int y2 = sign_pm(-dot(m.bob[1], phi));
            law.p[static_cast<std::size_t>(JointLaw4::index(x1, x2, y1, y2))] += w;
        }
        return law;
    }
    if (m.kind == ModelKind::Automaton) {
        std::lock_guard<std::mutex> g(registry_mutex());
        auto it = registry().find(m.automaton_id);
        if (it == registry().end())
            throw std::invalid_argument("unknown automaton: " + m.automaton_id);
        if (!it->second.table)
            throw std::invalid_argument(
                "counterfactual_extension: automaton '" + m.automaton_id +
                "' has memory or stochastic outputs; no counterfactual joint law");
        return counterfactual_extension(*it->second.table);
    }
    throw std::invalid_argument(
        "counterfactual_extension: model is not deterministic given its hidden draw");
}

std::pair<std::vector<Direction>, std::vector<Direction>> carol_keys(int n, int k, int l,
                                                                     RngStream& rng) {
    if (k < 2 || l < 2) throw std::invalid_argument("carol_keys: k, l must be >= 2");
    std::vector<Direction> a, b;
    a.reserve(static_cast<std::size_t>(k));
    b.reserve(static_cast<std::size_t>(l));
    for (int i = 0; i < k; ++i) a.push_back(uniform_direction(n, rng));
    for (int j = 0; j < l; ++j) b.push_back(uniform_direction(n, rng));
    return {std::move(a), std::move(b)};
}

namespace {

class ClosedFormSampler final : public Sampler {
public:
    explicit ClosedFormSampler(ModelSpec m) : m_(std::move(m)) {}
    TrialOutcome sample(int i, int j, RngStream rng) override {
        return sample_trial(m_, i, j, rng);
    }

private:
    ModelSpec m_;
};

} // namespace

std::unique_ptr<Sampler> make_sampler(const ModelSpec& m) {
    m.validate();
    if (m.kind != ModelKind::Automaton) return std::make_unique<ClosedFormSampler>(m);
    std::lock_guard<std::mutex> g(registry_mutex());
    auto it = registry().find(m.automaton_id);
    if (it == registry().end()) {
        std::string known;
        for (const auto& [id, _] : registry()) known += (known.empty() ? "" : ", ") + id;
        throw std::invalid_argument("unknown automaton '" + m.automaton_id +
                                    "' (registered: " + known + ")");
    }
    return it->second.factory(m);
}

void register_automaton(const std::string& id, AutomatonFactory factory,
                        std::optional<DeterministicStrategy> table) {
    std::lock_guard<std::mutex> g(registry_mutex());
    registry()[id] = AutomatonEntry{std::move(factory), std::move(table)};
}

bool automaton_registered(const std::string& id) {
    std::lock_guard<std::mutex> g(registry_mutex());
    return registry().count(id) > 0;
}

std::vector<std::string> automaton_ids() {
    std::lock_guard<std::mutex> g(registry_mutex());
    std::vector<std::string> ids;
    for (const auto& [id, _] : registry()) ids.push_back(id);
    return ids;
}

} // namespace bellsim::models
