#include "bellsim/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bellsim::geom {

namespace {
constexpr double kPi = std::numbers::pi;
}

double cap_integral(double gamma, int n) {
    if (n < 1) throw std::domain_error("cap_integral: n must be >= 1");
    if (!(gamma >= 0.0 && gamma <= kPi))
        throw std::domain_error("cap_integral: gamma must lie in [0, pi]");

    // Unroll the two-step recursion from the parity base case upward,
    // carrying the sin power incrementally.
    const double s = std::sin(gamma);
    const double c = std::cos(gamma);
    const bool odd = (n % 2 == 1);
    double acc = odd ? gamma : 1.0 - c;
    double pow_s = odd ? s : s * s; // sin^(m-2) for the first step below
    for (int m = odd ? 3 : 4; m <= n; m += 2) {
        acc = -pow_s * c / (m - 1) + static_cast<double>(m - 2) / (m - 1) * acc;
        pow_s *= s * s;
    }
    return acc;
}

double cdf_h(double gamma, int n) {
    return 2.0 * cap_integral(gamma, n) / cap_integral(kPi, n);
}

double fold_angle(double theta) {
    const double two_pi = 2.0 * kPi;
    double t = std::fmod(theta, two_pi);
    if (t < 0.0) t += two_pi;
    return t > kPi ? two_pi - t : t;
}

double closeness_eta(const Direction& u, const Direction& v, EtaConvention convention) {
    const double ang = angle_between(u, v);
    switch (convention) {
    case EtaConvention::Singlet: return kPi - ang;
    case EtaConvention::Photon: return fold_angle(2.0 * ang);
    }
    throw std::invalid_argument("closeness_eta: unknown convention");
}

double s_curve(double gamma, int n) {
    return 2.0 - 3.0 * cdf_h(gamma, n) + cdf_h(fold_angle(3.0 * gamma), n);
}

SMax s_max(int n) {
    const double g = kPi / 4.0;
    // 3*pi/4 = pi - pi/4, so H_n(3g) = 2 - H_n(g) and S_n(g) = 4 - 4 H_n(g).
    return SMax{g, 4.0 - 4.0 * cdf_h(g, n)};
}

double loop_separation(double mu, double nu) {
    auto reduce = [](double v) {
        double r = std::fmod(v, 4.0);
        return r < 0.0 ? r + 4.0 : r;
    };
    const double d = std::fabs(reduce(nu) - reduce(mu));
    return std::min(d, 4.0 - d);
}

} // namespace bellsim::geom
