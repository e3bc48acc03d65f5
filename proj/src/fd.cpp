#include "abc2d/fd.hpp"

#include "stencil.hpp"

namespace abc2d {

FaceCoefficients face_coefficients(const Medium& medium, const Grid& grid) {
    FaceCoefficients faces{grid, std::vector<float>(grid.node_count(), 0.0f),
                           std::vector<float>(grid.node_count(), 0.0f)};
    const int n = grid.intervals();
    const int half = n / 2;
    const double h = grid.spacing();
    for (int j = 0; j <= n; ++j) {
        const double y = grid.coord(j);
        const double ym = (static_cast<double>(j - half) + 0.5) * h;
        for (int i = 0; i <= n; ++i) {
            const double x = grid.coord(i);
            const double xm = (static_cast<double>(i - half) + 0.5) * h;
            const std::size_t k = grid.index(i, j);
            if (i < n) faces.east[k] = static_cast<float>(medium.eval({xm, y}));
            if (j < n) faces.north[k] = static_cast<float>(medium.eval({x, ym}));
        }
    }
    return faces;
}

SparseSystem::SparseSystem(Grid grid, std::shared_ptr<const FaceCoefficients> faces,
                           std::vector<double> rhs, std::vector<double> boundary)
    : grid_(grid), faces_(std::move(faces)), rhs_(std::move(rhs)), boundary_(std::move(boundary)) {
    if (rhs_.size() != grid_.node_count()) throw InvalidArgument("rhs size does not match grid");
    if (!boundary_.empty() && boundary_.size() != grid_.node_count())
        throw InvalidArgument("boundary size does not match grid");
    if (faces_ && !(faces_->grid == grid_)) throw InvalidArgument("face coefficients on another grid");
    if (grid_.intervals() < 2) throw InvalidArgument("grid has no interior nodes");
}

StencilView SparseSystem::stencil() const {
    StencilView v;
    v.n = grid_.intervals();
    v.h = grid_.spacing();
    if (faces_) {
        v.east = faces_->east.data();
        v.north = faces_->north.data();
    }
    return v;
}

void SparseSystem::apply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != grid_.node_count() || y.size() != grid_.node_count())
        throw InvalidArgument("vector size does not match system");
    detail::apply_all(stencil(), x.data(), y.data());
}

double SparseSystem::diagonal(std::size_t k) const {
    const StencilView v = stencil();
    return detail::faces_at(v, k).total() / (v.h * v.h);
}

std::vector<SparseSystem::Entry> SparseSystem::row(int i, int j) const {
    if (grid_.is_boundary(i, j)) throw InvalidArgument("boundary nodes carry no equation");
    const StencilView v = stencil();
    const std::size_t k = grid_.index(i, j);
    const double inv_h2 = 1.0 / (v.h * v.h);
    const detail::FaceSum a = detail::faces_at(v, k);
    std::vector<Entry> out{{k, a.total() * inv_h2}};
    auto add = [&](int ii, int jj, double coeff) {
        if (!grid_.is_boundary(ii, jj)) out.push_back({grid_.index(ii, jj), -coeff * inv_h2});
    };
    add(i + 1, j, a.e);
    add(i - 1, j, a.w);
    add(i, j + 1, a.n);
    add(i, j - 1, a.s);
    return out;
}

std::size_t SparseSystem::unknowns() const {
    const auto inner = static_cast<std::size_t>(grid_.intervals() - 1);
    return inner * inner;
}

SparseSystem assemble(std::shared_ptr<const FaceCoefficients> faces, const Grid& grid,
                      const GridField* boundary, const GridField& rhs) {
    if (!(rhs.grid == grid)) throw InvalidArgument("rhs lives on a different grid");
    if (boundary && !(boundary->grid == grid)) throw InvalidArgument("boundary data on a different grid");
    if (faces && !(faces->grid == grid)) throw InvalidArgument("face coefficients on a different grid");

    const int n = grid.intervals();
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    std::vector<double> b(grid.node_count(), 0.0);
    std::vector<double> g;
    if (boundary) {
        g.assign(grid.node_count(), 0.0);
        for (std::size_t k : grid.boundary_nodes()) g[k] = boundary->values[k];
    }
    auto east = [&](int i, int j) { return faces ? faces->e(i, j) : 1.0; };
    auto north = [&](int i, int j) { return faces ? faces->n(i, j) : 1.0; };
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            double v = rhs(i, j);
            if (boundary) {
                if (i == 1) v += inv_h2 * east(0, j) * (*boundary)(0, j);
                if (i == n - 1) v += inv_h2 * east(n - 1, j) * (*boundary)(n, j);
                if (j == 1) v += inv_h2 * north(i, 0) * (*boundary)(i, 0);
                if (j == n - 1) v += inv_h2 * north(i, n - 1) * (*boundary)(i, n);
            }
            b[grid.index(i, j)] = v;
        }
    return SparseSystem(grid, std::move(faces), std::move(b), std::move(g));
}

GridField apply_operator(const FaceCoefficients* faces, const GridField& u) {
    StencilView v;
    v.n = u.grid.intervals();
    v.h = u.grid.spacing();
    if (faces) {
        v.east = faces->east.data();
        v.north = faces->north.data();
    }
    GridField out(u.grid);
    detail::apply_all(v, u.values.data(), out.values.data());
    return out;
}

std::pair<GridField, GridField> gradient(const GridField& field) {
    const Grid& g = field.grid;
    const int n = g.intervals();
    if (n < 2) throw InvalidArgument("gradient needs at least three nodes per axis");
    const double inv2h = 1.0 / (2.0 * g.spacing());
    GridField gx(g), gy(g);
    auto d = [&](double um, double up) { return (up - um) * inv2h; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            if (i == 0)
                gx(i, j) = (-3.0 * field(0, j) + 4.0 * field(1, j) - field(2, j)) * inv2h;
            else if (i == n)
                gx(i, j) = (3.0 * field(n, j) - 4.0 * field(n - 1, j) + field(n - 2, j)) * inv2h;
            else
                gx(i, j) = d(field(i - 1, j), field(i + 1, j));
            if (j == 0)
                gy(i, j) = (-3.0 * field(i, 0) + 4.0 * field(i, 1) - field(i, 2)) * inv2h;
            else if (j == n)
                gy(i, j) = (3.0 * field(i, n) - 4.0 * field(i, n - 1) + field(i, n - 2)) * inv2h;
            else
                gy(i, j) = d(field(i, j - 1), field(i, j + 1));
        }
    return {std::move(gx), std::move(gy)};
}

FaceVectorField corrector_flux(const FaceCoefficients& faces, const GridField& phi, int direction) {
    if (!(faces.grid == phi.grid)) throw InvalidArgument("corrector and faces on different grids");
    if (direction != 0 && direction != 1) throw InvalidArgument("direction must be 0 or 1");
    const CorrectorFluxView view{&faces, &phi, direction};
    const Grid& g = phi.grid;
    FaceVectorField q(g);
    const int n = g.intervals();
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            if (i < n) q.east[g.index(i, j)] = view.east(i, j);
            if (j < n) q.north[g.index(i, j)] = view.north(i, j);
        }
    return q;
}

} // namespace abc2d
