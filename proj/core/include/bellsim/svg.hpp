// Self-contained SVG emission for the plots the CLI exposes: the H_n
// cumulative curves, the S_n(gamma) curve, the sorted-correlation
// distribution for a key grid, and the loop-coordinate rectangle scatter.
// Plain polyline/scatter primitives; no plotting dependency.

#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bellsim/models.hpp"
#include "bellsim/trial.hpp"

namespace bellsim::svg {

// Cumulative cap distributions H_n over [0, pi], one curve per entry of ns.
std::string hcurves(std::span<const int> ns, int points = 512);

// S_n(gamma) over [0, gamma_max]; marks the maximum.
std::string scurve(int n, double gamma_max, int points = 512);

// Sorted exact correlations E_ab of a model over its key grid, the
// highlighted row/column in color (all values grey, row `hi_i` red, column
// `hi_j` blue, the crossing cell black).
std::string correlation_distribution(const models::ModelSpec& m, int hi_i, int hi_j);

// Thrown by loop_rectangle when the log carries no hidden traces.
struct MissingTrace : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scatter of (lambda_a, lambda_b) for trials at key pair (i, j); red where
// x*y = +1, blue where x*y = -1. Points are capped to keep the file small.
std::string loop_rectangle(std::span<const TrialRecord> log, int i, int j,
                           std::size_t max_points = 4000);

} // namespace bellsim::svg
