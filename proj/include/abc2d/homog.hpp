#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "abc2d/grid.hpp"

namespace abc2d {

/// Fundamental solution of -div(A grad) in the plane for symmetric positive
/// definite A: G(x) = -(4 pi sqrt(det A))^{-1} ln(x . A^{-1} x).
class GreenFunction2D {
public:
    explicit GreenFunction2D(const Mat2& tensor);

    const Mat2& tensor() const { return tensor_; }
    const Mat2& inverse() const { return inverse_; }

    double value(const Vec2& x) const;
    Vec2 gradient(const Vec2& x) const;
    Mat2 hessian(const Vec2& x) const;

private:
    void check(const Vec2& x) const;

    Mat2 tensor_;
    Mat2 inverse_;
    double scale_;  // 1 / (2 pi sqrt(det A))
};

/// Compactly supported right-hand side f with zero mean.
struct SourceTerm {
    std::function<double(const Vec2&)> f;
    double support_radius;

    double operator()(const Vec2& x) const { return f(x); }

    /// f(x) = x2 exp(-5 / (5 - |x|^2)) on B_sqrt5.
    static SourceTerm standard();
};

/// Lattice midpoint rule over the support: nodes (i h, j h) with f != 0.
struct SourceQuadrature {
    double spacing = 0.1;
    double support_radius = 0.0;
    std::vector<Vec2> nodes;
    std::vector<double> weights;  // f(z) h^2
};

SourceQuadrature source_quadrature(const SourceTerm& source, double h);

struct PotentialSample {
    double value = 0.0;
    Vec2 gradient = Vec2::Zero();
};

/// Decaying solution of -div(A grad u) = f and its gradient at points
/// outside B_{R + h}.
std::vector<PotentialSample> solve_homogenized_at(std::span<const Vec2> points, const GreenFunction2D& green,
                                                  const SourceQuadrature& source);

struct DipoleData {
    Vec2 xi = Vec2::Zero();
};

/// xi_i = -sum phi_i(z) f(z) h^2; the phi grids must contain the support.
DipoleData dipole_moment(const std::array<const GridField*, 2>& phi, const SourceQuadrature& source);

/// u_h = u~_h + xi_i d_i G and its gradient.
std::vector<PotentialSample> uh_and_grad_at(std::span<const Vec2> points, const GreenFunction2D& green,
                                            const SourceQuadrature& source, const DipoleData& dipole);

} // namespace abc2d
