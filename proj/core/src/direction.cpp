#include "bellsim/direction.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bellsim {

Direction::Direction(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2)
        throw std::invalid_argument("Direction needs at least 2 coordinates (n >= 1)");
    double s = 0.0;
    for (double c : coords_) s += c * c;
    if (s <= 0.0 || !std::isfinite(s))
        throw std::invalid_argument("Direction: zero or non-finite vector");
    const double inv = 1.0 / std::sqrt(s);
    for (double& c : coords_) c *= inv;
}

Direction Direction::antipode() const {
    std::vector<double> c(coords_);
    for (double& x : c) x = -x;
    return Direction(std::move(c));
}

double dot(const Direction& u, const Direction& v) {
    if (u.coords_.size() != v.coords_.size())
        throw std::invalid_argument("Direction dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.coords_.size(); ++i) s += u.coords_[i] * v.coords_[i];
    return s;
}

Direction uniform_direction(int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("uniform_direction: n must be >= 1");
    std::vector<double> c(static_cast<std::size_t>(n) + 1);
    for (;;) {
        double s = 0.0;
        for (double& x : c) {
            x = rng.next_normal();
            s += x * x;
        }
        if (s > 1e-300) return Direction(std::move(c));
        // zero vector has probability zero; redraw
    }
}

double angle_between(const Direction& u, const Direction& v) {
    double d = dot(u, v);
    if (d > 1.0) d = 1.0;
    if (d < -1.0) d = -1.0;
    return std::acos(d);
}

Direction direction_from_angle(double theta) {
    return Direction({std::cos(theta), std::sin(theta)});
}

double angle_of(const Direction& u) {
    if (u.dim() != 1)
        throw std::invalid_argument("angle_of: expected a 1-sphere direction");
    double a = std::atan2(u[1], u[0]);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a;
}

} // namespace bellsim
