// Closed-form kernel for the dimension-parameterized CHSH geometry:
// hyperspherical-cap integrals, the scaled cap CDFs H_n, the curve
// S_n(gamma) = 2 - 3 H_n(gamma) + H_n(3 gamma), and the 4-loop separation
// metric. Everything here is exact recursion in double precision; no
// quadrature.

#pragma once

#include "bellsim/direction.hpp"

namespace bellsim::geom {

// I(gamma, n) = integral of sin^(n-1) over [0, gamma], by the
// integration-by-parts recursion with base cases gamma (n = 1) and
// 1 - cos(gamma) (n = 2). Monotone nondecreasing in gamma. Throws
// std::domain_error for gamma outside [0, pi] or n < 1.
double cap_integral(double gamma, int n);

// H_n(gamma) = 2 I(gamma, n) / I(pi, n), the fraction (scaled to [0,2]) of
// the n-sphere within angular radius gamma of an apex point.
// H_n(0) = 0, H_n(pi/2) = 1, H_n(pi) = 2.
double cdf_h(double gamma, int n);

// Reduces an arbitrary angle to the closeness-angle domain [0, pi] by
// circular symmetry: theta mod 2*pi, then theta -> 2*pi - theta when above
// pi. cos(fold_angle(t)) == cos(t) for all t.
double fold_angle(double theta);

enum class EtaConvention {
    Singlet, // eta = pi - angle(u,v)
    Photon,  // eta = fold(2 * angle(u,v)); see below
};

// Closeness angle between two setting directions. The singlet convention is
// eta = pi - angle. For photon polarization the map is eta = fold(2*angle),
// chosen so that E = 1 - H_2(eta) = cos(2*angle) matches the two-channel
// polarizer probabilities p_xy; it also respects the pi-periodicity of a
// polarizer axis. Throws std::invalid_argument on dimension mismatch.
double closeness_eta(const Direction& u, const Direction& v, EtaConvention convention);

// S_n(gamma) = 2 - 3 H_n(gamma) + H_n(fold_angle(3 gamma)). Continuous on
// [0, pi]; S_n(0) = 2 for every n. The fold only matters for gamma > pi/3.
double s_curve(double gamma, int n);

struct SMax {
    double gamma_star; // pi/4
    double s;          // S_n(pi/4) = 4 - 4 H_n(pi/4)
};

// The maximizing angle is pi/4 for every n >= 1 (for n = 1 the curve is
// flat at 2 on [0, pi/3]); the value column reproduces the closed-form
// maxima table.
SMax s_max(int n);

// Shortest-arc separation on the circle of circumference 4:
// h(mu, nu) = min(|nu - mu|, 4 - |nu - mu|). Coordinates outside [0,4) are
// reduced mod 4. Symmetric, h <= 2, and a metric on the loop.
double loop_separation(double mu, double nu);

} // namespace bellsim::geom
