#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "abc2d/fd.hpp"
#include "abc2d/linsolve.hpp"

namespace abc2d {

/// omega(x) = L^-2 w(x / L) with w(y) = (15/16)^2 (1 - y1^2)^2 (1 - y2^2)^2
/// on Q_1; unit mass, support Q_L.
struct AveragingMask {
    double L = 1.0;

    explicit AveragingMask(double scale) : L(scale) {}
    double operator()(const Vec2& x) const;
};

struct HomogenizedTensor {
    Mat2 matrix = Mat2::Zero();

    Mat2 symmetric() const { return 0.5 * (matrix + matrix.transpose()); }
    /// Eigenvalues of the symmetric part, ascending.
    Vec2 eigenvalues() const;
    double asymmetry() const { return std::abs(matrix(0, 1) - matrix(1, 0)); }
};

/// Dirichlet correctors phi_i, flux correctors sigma_{i,12} and fluxes
/// q_i = a (e_i + grad phi_i) on Q_{2L}.
struct CorrectorSet {
    double L = 0.0;
    Grid grid;
    std::shared_ptr<const FaceCoefficients> faces;
    std::array<GridField, 2> phi;
    std::array<FaceVectorField, 2> flux{FaceVectorField(Grid()), FaceVectorField(Grid())};
    std::array<GridField, 2> sigma;
    bool has_sigma = false;
    std::array<SolveReport, 2> phi_reports;
    std::array<SolveReport, 2> sigma_reports;
};

/// Solves -div a (e_d + grad phi) = 0 on the grid of faces, phi = 0 on the
/// boundary.
GridField solve_corrector_component(std::shared_ptr<const FaceCoefficients> faces, int direction,
                                    const SolveOptions& options, SolveReport* report = nullptr);

/// Both correctors on Q_{2L} at spacing h. Requires the medium to be sampled
/// over Q_{2L + 1/2}.
CorrectorSet solve_correctors(const Medium& medium, double L, double h, const SolveOptions& options);
CorrectorSet solve_correctors(std::shared_ptr<const FaceCoefficients> faces, double L,
                              const SolveOptions& options);

/// -Lap sigma = curl(flux) with sigma = 0 on the boundary.
GridField solve_sigma_for_flux(const FaceVectorField& flux, const SolveOptions& options,
                               SolveReport* report = nullptr);
/// Same, with the curl given directly at the nodes.
GridField solve_sigma_for_curl(GridField curl, const SolveOptions& options,
                               SolveReport* report = nullptr);

void solve_sigma(CorrectorSet& correctors, const SolveOptions& options);

/// Mask-weighted node sum of a face field: column (q . e_r) for r = 0, 1.
template <class Flux>
Vec2 masked_flux_average(const Flux& q, const AveragingMask& mask) {
    const Grid& g = q.grid();
    const double h2 = g.spacing() * g.spacing();
    Vec2 acc = Vec2::Zero();
    for (int j = 1; j < g.intervals(); ++j) {
        const double y = g.coord(j);
        if (std::abs(y) >= mask.L) continue;
        for (int i = 1; i < g.intervals(); ++i) {
            const Vec2 x(g.coord(i), y);
            if (std::abs(x.x()) >= mask.L) continue;
            acc += (mask(x) * h2) * node_average_of(q, i, j);
        }
    }
    return acc;
}

HomogenizedTensor homogenized_tensor(const CorrectorSet& correctors, const AveragingMask& mask);

// ---------------------------------------------------------------------------
// Sublinearity radius
// ---------------------------------------------------------------------------

/// Quarter-octave radii 2^{k/4} from 1 up to r_max (r_max appended when it
/// falls between ladder points).
std::vector<double> radius_ladder(double r_max);

/// Running sums of squared fields over the nested cubes Q_r of a ladder.
class SublinearityAccumulator {
public:
    SublinearityAccumulator(const Grid& grid, std::vector<double> radii);

    /// Adds sum of field^2 over each cube (scaled by factor^2).
    void add(const GridField& field, double factor = 1.0);

    const std::vector<double>& radii() const { return radii_; }
    /// S(r) = r^-1 (mean over Q_r of the accumulated squares)^{1/2}.
    std::vector<double> profile() const;

private:
    Grid grid_;
    std::vector<double> radii_;
    std::vector<int> bin_of_;  // by max(|i - c|, |j - c|)
    std::vector<double> sums_;
    std::vector<double> counts_;
    bool counted_ = false;
};

struct RStarEstimate {
    double beta = 0.9;
    double r_star = 1.0;
    bool saturated = false;
    std::vector<std::pair<double, double>> profile;  // (r, S(r))
};

/// Smallest ladder radius rho with S(r) <= (rho / r)^beta for all ladder
/// r >= rho; saturates at the last radius.
RStarEstimate rstar_from_profile(const std::vector<double>& radii, const std::vector<double>& values,
                                 double beta);

RStarEstimate estimate_rstar(const CorrectorSet& correctors, double beta);

} // namespace abc2d
