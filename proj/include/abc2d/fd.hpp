#pragma once

#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "abc2d/grid.hpp"
#include "abc2d/media.hpp"

namespace abc2d {

/// Coefficient samples on cell faces. east[index(i, j)] is a at the midpoint
/// between nodes (i, j) and (i + 1, j); north[index(i, j)] is a between
/// (i, j) and (i, j + 1). Entries past the last column (east) or row (north)
/// are unused.
///
/// Stored in single precision: reference-scale boxes carry 10^8 faces per
/// direction and the working set has to fit next to two solver vectors.
struct FaceCoefficients {
    Grid grid;
    std::vector<float> east;
    std::vector<float> north;

    double e(int i, int j) const { return east[grid.index(i, j)]; }
    double n(int i, int j) const { return north[grid.index(i, j)]; }
};

/// Staggered vector field: x components on east faces, y components on
/// north faces, same layout as FaceCoefficients.
struct FaceVectorField {
    Grid grid;
    std::vector<double> east;
    std::vector<double> north;

    explicit FaceVectorField(const Grid& g)
        : grid(g), east(g.node_count(), 0.0), north(g.node_count(), 0.0) {}
};

/// Samples the medium at every face midpoint of the grid.
FaceCoefficients face_coefficients(const Medium& medium, const Grid& grid);

/// Lightweight view of the 5-point operator -div(a grad) on one grid;
/// east == nullptr means a == 1.
struct StencilView {
    int n = 0;
    double h = 1.0;
    const float* east = nullptr;
    const float* north = nullptr;

    std::size_t side() const { return static_cast<std::size_t>(n) + 1; }
};

/// Dirichlet problem -div(a grad u) = f on the interior nodes of a grid.
/// The operator is held matrix-free; vectors span all nodes and boundary
/// entries of unknown vectors stay zero. Boundary values enter through the
/// right-hand side lift.
class SparseSystem {
public:
    struct Entry {
        std::size_t column;
        double value;
    };

    SparseSystem(Grid grid, std::shared_ptr<const FaceCoefficients> faces, std::vector<double> rhs,
                 std::vector<double> boundary);

    const Grid& grid() const { return grid_; }
    /// Null for the unit-coefficient Laplacian.
    const FaceCoefficients* faces() const { return faces_.get(); }
    std::shared_ptr<const FaceCoefficients> shared_faces() const { return faces_; }
    StencilView stencil() const;

    /// Lifted right-hand side (zero on boundary nodes).
    std::span<const double> rhs() const { return rhs_; }
    std::vector<double>& mutable_rhs() { return rhs_; }
    /// Boundary values (zero on interior nodes); empty means zero data.
    std::span<const double> boundary() const { return boundary_; }

    /// y = A x on interior rows, 0 on boundary rows.
    void apply(std::span<const double> x, std::span<double> y) const;

    double diagonal(std::size_t k) const;

    /// Nonzeros of the interior row at node (i, j) over interior columns.
    std::vector<Entry> row(int i, int j) const;

    std::size_t unknowns() const;

private:
    Grid grid_;
    std::shared_ptr<const FaceCoefficients> faces_;
    std::vector<double> rhs_;
    std::vector<double> boundary_;
};

/// Builds the system for -div(a grad u) = rhs with u = boundary on the
/// boundary nodes. faces == nullptr selects a == 1.
SparseSystem assemble(std::shared_ptr<const FaceCoefficients> faces, const Grid& grid,
                      const GridField* boundary, const GridField& rhs);

/// A(u) at interior nodes for a field carrying its own boundary values.
GridField apply_operator(const FaceCoefficients* faces, const GridField& u);

/// Centred differences inside, second-order one-sided on the boundary.
std::pair<GridField, GridField> gradient(const GridField& field);

/// Flux a (e + grad phi) on faces, e = unit vector of direction (0 or 1).
FaceVectorField corrector_flux(const FaceCoefficients& faces, const GridField& phi, int direction);

/// Read access to a stored face field.
struct StoredFlux {
    const FaceVectorField* field;
    const Grid& grid() const { return field->grid; }
    double east(int i, int j) const { return field->east[field->grid.index(i, j)]; }
    double north(int i, int j) const { return field->north[field->grid.index(i, j)]; }
};

/// On-the-fly corrector flux a (e + grad phi); evaluates exactly the same
/// expression corrector_flux() stores, without the two face-sized buffers.
struct CorrectorFluxView {
    const FaceCoefficients* faces;
    const GridField* phi;
    int direction;

    const Grid& grid() const { return phi->grid; }
    double east(int i, int j) const {
        const double h = phi->grid.spacing();
        return faces->e(i, j) * ((direction == 0 ? 1.0 : 0.0) + ((*phi)(i + 1, j) - (*phi)(i, j)) / h);
    }
    double north(int i, int j) const {
        const double h = phi->grid.spacing();
        return faces->n(i, j) * ((direction == 1 ? 1.0 : 0.0) + ((*phi)(i, j + 1) - (*phi)(i, j)) / h);
    }
};

/// Discrete divergence at interior nodes (0 on boundary).
template <class Flux>
GridField divergence_of(const Flux& q) {
    const Grid& g = q.grid();
    const double h = g.spacing();
    GridField out(g);
    for (int j = 1; j < g.intervals(); ++j)
        for (int i = 1; i < g.intervals(); ++i)
            out(i, j) = (q.east(i, j) - q.east(i - 1, j)) / h + (q.north(i, j) - q.north(i, j - 1)) / h;
    return out;
}

/// d1 q2 - d2 q1 at interior nodes: face components are averaged to nodes
/// and differenced centrally. Boundary nodes are 0.
template <class Flux>
GridField curl_of(const Flux& q) {
    const Grid& g = q.grid();
    const double inv2h = 1.0 / (2.0 * g.spacing());
    GridField out(g);
    auto q2 = [&](int i, int j) { return 0.5 * (q.north(i, j) + q.north(i, j - 1)); };
    auto q1 = [&](int i, int j) { return 0.5 * (q.east(i, j) + q.east(i - 1, j)); };
    for (int j = 1; j < g.intervals(); ++j)
        for (int i = 1; i < g.intervals(); ++i)
            out(i, j) = (q2(i + 1, j) - q2(i - 1, j)) * inv2h - (q1(i, j + 1) - q1(i, j - 1)) * inv2h;
    return out;
}

/// Node average: x component from east/west faces, y from north/south.
/// Interior nodes only.
template <class Flux>
Vec2 node_average_of(const Flux& q, int i, int j) {
    return {0.5 * (q.east(i, j) + q.east(i - 1, j)), 0.5 * (q.north(i, j) + q.north(i, j - 1))};
}

inline GridField divergence(const FaceVectorField& flux) { return divergence_of(StoredFlux{&flux}); }
inline GridField curl_rhs(const FaceVectorField& flux) { return curl_of(StoredFlux{&flux}); }
inline Vec2 node_average(const FaceVectorField& flux, int i, int j) {
    return node_average_of(StoredFlux{&flux}, i, j);
}

} // namespace abc2d
