// Outcome models: per-trial samplers and exact-correlation evaluators for
// the singlet and photon-pair states, the Eberhard non-maximally-entangled
// pair, the shared-spin sign model, the n-sphere bipartite-graph model and
// its Loop-of-Four hidden-variable mechanism, plus custom automatons.
//
// Samplers are pure given (ModelSpec, setting indices, RngStream), except
// automatons, which may carry per-run state (memory strategies); those go
// through make_sampler().

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bellsim/direction.hpp"
#include "bellsim/geometry.hpp"
#include "bellsim/rng.hpp"
#include "bellsim/trial.hpp"

namespace bellsim::models {

enum class ModelKind {
    Singlet,      // E = -cos(angle)
    PhotonPair,   // E = cos(2 angle)
    Eberhard,     // (|HV> + r|VH>)/sqrt(1+r^2), polarizers at planar angles
    SignLhv,      // x = sign(cos(a, phi)), y = sign(cos(b, -phi)), shared phi
    LoopOfFour,   // loop hidden variable; correlations 1 - H_n(eta)
    NSphereGraph, // graph weights H_n(eta); correlations 1 - H_n(eta)
    Automaton,    // registered custom strategy
};

const char* kind_name(ModelKind k);
ModelKind kind_from_name(const std::string& name);

struct ModelSpec {
    ModelKind kind = ModelKind::Singlet;
    std::vector<Direction> alice; // k setting directions
    std::vector<Direction> bob;   // l setting directions
    double r = 1.0;               // Eberhard state parameter, in [0,1]
    std::string automaton_id;     // for ModelKind::Automaton
    int k_hint = 0, l_hint = 0;   // grid sizes when no directions (automatons)

    int k() const { return alice.empty() ? k_hint : static_cast<int>(alice.size()); }
    int l() const { return bob.empty() ? l_hint : static_cast<int>(bob.size()); }
    int dim() const { return alice.empty() ? 0 : alice.front().dim(); }

    // Checks r in [0,1], unit directions of one common dimension, valid grid.
    void validate() const;
};

// The 4-loop hidden state behind one Loop-of-Four trial. alpha is pinned to
// 0 (origin at A), beta = H_n(eta(a_i, b_j)) in [0,2], lambda uniform in
// [0,4). lambda_a = h(alpha, lambda) and lambda_b = h(beta, lambda); every
// sampled state satisfies the rectangle locus identity
// lambda_a + lambda_b in {beta, 4 - beta} or |lambda_a - lambda_b| = beta.
struct LoopState {
    double alpha = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
    double lambda_a = 0.0;
    double lambda_b = 0.0;
};

struct TrialOutcome {
    std::optional<int> x;
    std::optional<int> y;
    std::optional<LoopState> hidden;
};

// Joint law of the counterfactual quadruple (X1, X2, Y1, Y2) on {-1,+1}^4.
struct JointLaw4 {
    std::array<double, 16> p{};

    static int index(int x1, int x2, int y1, int y2);
    double prob(int x1, int x2, int y1, int y2) const;
    // E(X_i Y_j), i, j in {1, 2}.
    double correlation(int i, int j) const;
    double sum() const;
};

// The four CHSH combinations (one minus sign each) of a joint law, and
// their negations: 8 one-sided values, every one of which lies in [-2, 2]
// for any genuine joint law.
std::array<double, 8> one_sided_chsh(const JointLaw4& law);

// Exact single-pair correlation E(XY | a_i, b_j). Throws for automatons.
double correlation_exact(const ModelSpec& m, int i, int j);

// One trial at setting pair (i, j). Pure in (m, i, j, rng). Quantum-model
// pairs are drawn from P(x,y) = (1 + x y E)/4, the unique law with the
// model correlation and fair marginals. Throws for automatons; use
// make_sampler for those.
TrialOutcome sample_trial(const ModelSpec& m, int i, int j, RngStream rng);

// Outcome distribution over {-1,+1,no-detection}^2 for the Eberhard state
// with polarizers at planar angles alpha (Alice) and beta_angle (Bob), each
// arm detected independently with probability eff.
class OutcomeDist {
public:
    // x, y: -1, +1 or 0 for no detection.
    double& at(int x, int y) { return p_[slot(x)][slot(y)]; }
    double at(int x, int y) const { return p_[slot(x)][slot(y)]; }
    double marginal_x(int x) const;
    double marginal_y(int y) const;
    double sum() const;
    // E(XY) over both-detected mass, renormalized; 0 if no such mass.
    double correlation() const;

private:
    static int slot(int v);
    double p_[3][3] = {};
};

OutcomeDist eberhard_probs(double r, double alpha, double beta_angle, double eff);

// A two-party deterministic strategy table: responses depend on the own
// setting and a shared hidden value lambda in {0, .., n_lambda-1}, drawn
// equiprobably each trial.
struct DeterministicStrategy {
    int k = 2, l = 2;
    int n_lambda = 1;
    std::vector<int> alice; // [ (i-1)*n_lambda + lam ] -> -1/+1
    std::vector<int> bob;

    int x(int i, int lam) const { return alice[static_cast<std::size_t>(i - 1) * n_lambda + lam]; }
    int y(int j, int lam) const { return bob[static_cast<std::size_t>(j - 1) * n_lambda + lam]; }
};

// Brute-forces the joint law of (X1, X2, Y1, Y2) for a model that is
// deterministic given its hidden draw. SignLhv integrates over the shared
// direction with n_grid quadrature samples (deterministic internal stream);
// registered deterministic automatons are enumerated exactly. Models with
// memory or stochastic outputs are rejected with std::invalid_argument.
JointLaw4 counterfactual_extension(const ModelSpec& m, int n_grid);

// Exact enumeration for an explicit deterministic table (2x2 grids).
JointLaw4 counterfactual_extension(const DeterministicStrategy& s);

// k + l independent uniform directions on the n-sphere: Alice's keys first,
// then Bob's.
std::pair<std::vector<Direction>, std::vector<Direction>> carol_keys(int n, int k, int l,
                                                                     RngStream& rng);

// Stateful sampling interface. observe() feeds back the public record of a
// completed trial; memory strategies use it, closed-form models ignore it.
class Sampler {
public:
    virtual ~Sampler() = default;
    virtual TrialOutcome sample(int i, int j, RngStream rng) = 0;
    virtual void observe(const TrialRecord&) {}
};

std::unique_ptr<Sampler> make_sampler(const ModelSpec& m);

// Automaton registry. Factories receive the full ModelSpec; an optional
// deterministic table makes the automaton eligible for
// counterfactual_extension.
using AutomatonFactory = std::function<std::unique_ptr<Sampler>(const ModelSpec&)>;
void register_automaton(const std::string& id, AutomatonFactory factory,
                        std::optional<DeterministicStrategy> table = std::nullopt);
bool automaton_registered(const std::string& id);
std::vector<std::string> automaton_ids();

} // namespace bellsim::models
