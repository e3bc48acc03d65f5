#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "abc2d/types.hpp"

namespace abc2d {

/// Uniform node-centred lattice on the closed cube [-M, M]^2 with spacing h.
/// The origin is always a node; node (i, j) sits at ((i - n/2) h, (j - n/2) h).
class Grid {
public:
    Grid() = default;

    /// Requires M / h to be a positive integer.
    Grid(double half_width, double spacing);

    double half_width() const { return half_width_; }
    double spacing() const { return spacing_; }
    /// Number of intervals per axis (2M/h).
    int intervals() const { return n_; }
    /// Nodes per axis (intervals + 1).
    int side() const { return n_ + 1; }
    std::size_t node_count() const {
        return static_cast<std::size_t>(side()) * static_cast<std::size_t>(side());
    }

    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(side()) +
               static_cast<std::size_t>(i);
    }
    int col(std::size_t k) const { return static_cast<int>(k % static_cast<std::size_t>(side())); }
    int row(std::size_t k) const { return static_cast<int>(k / static_cast<std::size_t>(side())); }

    double coord(int i) const { return static_cast<double>(i - n_ / 2) * spacing_; }
    Vec2 node(int i, int j) const { return {coord(i), coord(j)}; }

    /// Index along an axis of the node at coordinate x (must be a node).
    int axis_index(double x) const;

    bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == n_ || j == n_; }
    int origin_index() const { return n_ / 2; }

    /// Offset in nodes of this grid's corner inside a larger aligned grid.
    int offset_in(const Grid& larger) const;

    /// Nodes on the boundary in counter-clockwise order starting at (0, 0).
    std::vector<std::size_t> boundary_nodes() const;

    bool operator==(const Grid& other) const {
        return n_ == other.n_ && spacing_ == other.spacing_;
    }

private:
    double half_width_ = 0.0;
    double spacing_ = 1.0;
    int n_ = 0;
};

/// One scalar per grid node.
struct GridField {
    Grid grid;
    std::vector<double> values;

    GridField() = default;
    explicit GridField(const Grid& g, double fill = 0.0) : grid(g), values(g.node_count(), fill) {}
    GridField(const Grid& g, std::vector<double> v);

    double& operator()(int i, int j) { return values[grid.index(i, j)]; }
    double operator()(int i, int j) const { return values[grid.index(i, j)]; }

    /// Value at node coordinate p (p must be a node of the grid).
    double at(const Vec2& p) const;
};

/// Samples a function at every node.
template <class F>
GridField sample_field(const Grid& grid, F&& fn) {
    GridField out(grid);
    for (int j = 0; j < grid.side(); ++j)
        for (int i = 0; i < grid.side(); ++i) out(i, j) = fn(grid.node(i, j));
    return out;
}

/// Copies the part of field lying on the smaller aligned grid.
GridField restrict_to(const GridField& field, const Grid& smaller);

double max_abs(std::span<const double> v);

} // namespace abc2d
