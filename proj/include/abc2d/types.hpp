#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace abc2d {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a query needs medium points that were never sampled.
class InsufficientSampling : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Axis-aligned box [xmin, xmax] x [ymin, ymax].
struct Box {
    double xmin = 0.0;
    double xmax = 0.0;
    double ymin = 0.0;
    double ymax = 0.0;

    static Box centered_cube(double half_width) {
        return {-half_width, half_width, -half_width, half_width};
    }

    double area() const { return (xmax - xmin) * (ymax - ymin); }

    bool contains(const Vec2& p) const {
        return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
    }

    Box shrunk(double margin) const {
        return {xmin + margin, xmax - margin, ymin + margin, ymax - margin};
    }
};

} // namespace abc2d
