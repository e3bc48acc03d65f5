#include "abc2d/grid.hpp"

#include <cmath>
#include <string>

namespace abc2d {

Grid::Grid(double half_width, double spacing) : half_width_(half_width), spacing_(spacing) {
    if (!(half_width > 0.0) || !(spacing > 0.0))
        throw InvalidArgument("grid half width and spacing must be positive");
    const double ratio = half_width / spacing;
    const double k = std::round(ratio);
    if (k < 1.0 || std::abs(ratio - k) > 1e-9 * std::max(1.0, ratio))
        throw InvalidArgument("grid half width " + std::to_string(half_width) +
                              " is not a whole multiple of spacing " + std::to_string(spacing));
    n_ = 2 * static_cast<int>(k);
}

int Grid::axis_index(double x) const {
    const double r = x / spacing_;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-7) throw InvalidArgument("coordinate is not a grid node");
    const int i = static_cast<int>(k) + n_ / 2;
    if (i < 0 || i > n_) throw InvalidArgument("coordinate outside the grid");
    return i;
}

int Grid::offset_in(const Grid& larger) const {
    if (std::abs(larger.spacing_ - spacing_) > 1e-14 * spacing_)
        throw InvalidArgument("grids have different spacing");
    if (larger.n_ < n_) throw InvalidArgument("grid is not contained in the larger grid");
    return larger.n_ / 2 - n_ / 2;
}

std::vector<std::size_t> Grid::boundary_nodes() const {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(4 * n_));
    for (int i = 0; i < n_; ++i) out.push_back(index(i, 0));
    for (int j = 0; j < n_; ++j) out.push_back(index(n_, j));
    for (int i = n_; i > 0; --i) out.push_back(index(i, n_));
    for (int j = n_; j > 0; --j) out.push_back(index(0, j));
    return out;
}

GridField::GridField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.node_count()) throw InvalidArgument("field size does not match grid");
}

double GridField::at(const Vec2& p) const {
    return (*this)(grid.axis_index(p.x()), grid.axis_index(p.y()));
}

GridField restrict_to(const GridField& field, const Grid& smaller) {
    const int off = smaller.offset_in(field.grid);
    GridField out(smaller);
    for (int j = 0; j < smaller.side(); ++j)
        for (int i = 0; i < smaller.side(); ++i) out(i, j) = field(i + off, j + off);
    return out;
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace abc2d
