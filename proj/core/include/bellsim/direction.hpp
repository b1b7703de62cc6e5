// Points on the unit n-sphere. A Direction holds n+1 coordinates with unit
// Euclidean norm; n = 2 is the ordinary sphere in three-dimensional space.
// Coordinates are representation only: every model output downstream is a
// function of angles, and a property test pins that down by checking
// invariance under a global rotation.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bellsim/rng.hpp"

namespace bellsim {

class Direction {
public:
    Direction() = default;

    // Normalizes on construction; throws std::invalid_argument on a zero or
    // sub-dimensional vector.
    explicit Direction(std::vector<double> coords);

    // Sphere dimension n (= coords().size() - 1).
    int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
    std::span<const double> coords() const noexcept { return coords_; }
    double operator[](std::size_t i) const noexcept { return coords_[i]; }

    Direction antipode() const;

    friend double dot(const Direction& u, const Direction& v);

private:
    std::vector<double> coords_;
};

// Uniform draw on the n-sphere: n+1 standard normals, normalized. The
// measure-zero zero-vector draw is redrawn.
Direction uniform_direction(int n, RngStream& rng);

// Angle in [0, pi]; throws std::invalid_argument on dimension mismatch.
double angle_between(const Direction& u, const Direction& v);

// Direction on the 1-sphere at the given angle (radians); used for
// polarizer settings.
Direction direction_from_angle(double theta);

// Planar angle of a 1-sphere direction, in [0, 2*pi).
double angle_of(const Direction& u);

} // namespace bellsim
