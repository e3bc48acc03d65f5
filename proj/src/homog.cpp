#include "abc2d/homog.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace abc2d {

GreenFunction2D::GreenFunction2D(const Mat2& tensor) : tensor_(tensor) {
    if (std::abs(tensor(0, 1) - tensor(1, 0)) > 1e-12 * tensor.norm())
        throw InvalidArgument("Green function needs a symmetric tensor");
    const double det = tensor.determinant();
    if (!(tensor(0, 0) > 0.0 && det > 0.0)) throw InvalidArgument("Green function needs a positive definite tensor");
    inverse_ = tensor.inverse();
    scale_ = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det));
}

void GreenFunction2D::check(const Vec2& x) const {
    if (x.x() == 0.0 && x.y() == 0.0) throw InvalidArgument("Green function is singular at the origin");
}

double GreenFunction2D::value(const Vec2& x) const {
    check(x);
    return -0.5 * scale_ * std::log(x.dot(inverse_ * x));
}

Vec2 GreenFunction2D::gradient(const Vec2& x) const {
    check(x);
    const Vec2 w = inverse_ * x;
    return (-scale_ / x.dot(w)) * w;
}

Mat2 GreenFunction2D::hessian(const Vec2& x) const {
    check(x);
    const Vec2 w = inverse_ * x;
    const double q = x.dot(w);
    return -scale_ * (inverse_ / q - (2.0 / (q * q)) * (w * w.transpose()));
}

SourceTerm SourceTerm::standard() {
    return {[](const Vec2& x) {
                const double r2 = x.squaredNorm();
                if (r2 >= 5.0) return 0.0;
                return x.y() * std::exp(-5.0 / (5.0 - r2));
            },
            std::sqrt(5.0)};
}

SourceQuadrature source_quadrature(const SourceTerm& source, double h) {
    SourceQuadrature q;
    q.spacing = h;
    q.support_radius = source.support_radius;
    const int k = static_cast<int>(std::ceil(source.support_radius / h));
    for (int j = -k; j <= k; ++j)
        for (int i = -k; i <= k; ++i) {
            const Vec2 z(i * h, j * h);
            if (z.norm() >= source.support_radius) continue;
            const double f = source(z);
            if (f == 0.0) continue;
            q.nodes.push_back(z);
            q.weights.push_back(f * h * h);
        }
    return q;
}

namespace {

void require_outside(const Vec2& x, const SourceQuadrature& source) {
    if (x.norm() < source.support_radius + source.spacing)
        throw InvalidArgument("query point (" + std::to_string(x.x()) + ", " + std::to_string(x.y()) +
                              ") lies inside the source support");
}

} // namespace

std::vector<PotentialSample> solve_homogenized_at(std::span<const Vec2> points, const GreenFunction2D& green,
                                                  const SourceQuadrature& source) {
    std::vector<PotentialSample> out(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
        require_outside(points[p], source);
        PotentialSample s;
        for (std::size_t k = 0; k < source.nodes.size(); ++k) {
            const Vec2 d = points[p] - source.nodes[k];
            s.value += green.value(d) * source.weights[k];
            s.gradient += green.gradient(d) * source.weights[k];
        }
        out[p] = s;
    }
    return out;
}

DipoleData dipole_moment(const std::array<const GridField*, 2>& phi, const SourceQuadrature& source) {
    DipoleData d;
    for (int i = 0; i < 2; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < source.nodes.size(); ++k) s += phi[i]->at(source.nodes[k]) * source.weights[k];
        d.xi[i] = -s;
    }
    return d;
}

std::vector<PotentialSample> uh_and_grad_at(std::span<const Vec2> points, const GreenFunction2D& green,
                                            const SourceQuadrature& source, const DipoleData& dipole) {
    auto out = solve_homogenized_at(points, green, source);
    for (std::size_t p = 0; p < points.size(); ++p) {
        out[p].value += dipole.xi.dot(green.gradient(points[p]));
        out[p].gradient += green.hessian(points[p]) * dipole.xi;
    }
    return out;
}

} // namespace abc2d
