#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "abc2d/corrector.hpp"
#include "abc2d/homog.hpp"

namespace abc2d {

enum class AlgorithmKind {
    /// u = 0 on the boundary of Q_L.
    dirichlet,
    /// Two-scale expansion (1 + phi_i d_i) u~_h of the decaying homogenized
    /// solution.
    no_dipole,
    /// Two-scale expansion of the dipole-corrected u_h.
    full,
    /// Plain homogenized data u~_h (diagnostic variant).
    homogenized_only,
};

const char* to_string(AlgorithmKind kind);
AlgorithmKind parse_algorithm(const std::string& name);
bool needs_correctors(AlgorithmKind kind);

struct GradientObservable {
    Vec2 pointwise = Vec2::Zero();
    Vec2 ball_average = Vec2::Zero();
    double radius = 1.0;
};

/// Centred-difference gradient at the origin node, and its average with the
/// weight (1 - |x|^2 / R^2)^2 normalised over the lattice nodes of B_R.
GradientObservable gradient_at_origin(const GridField& u, double radius);

struct RunOptions {
    double h = 0.1;
    SolveOptions solve;
    /// Also solve for the flux correctors and the sublinearity radius.
    bool compute_rstar = false;
    double beta = 0.9;
    double observation_radius = 1.0;
    SourceTerm source = SourceTerm::standard();

    RunOptions();
};

/// What the boundary-condition algorithms need from the correctors on
/// Q_{2L}. Computed one direction at a time so that the full fields never
/// coexist.
struct CorrectorSummary {
    double L = 0.0;
    double h = 0.1;
    HomogenizedTensor a_h;
    DipoleData dipole;
    /// phi_i at the boundary nodes of Q_L, in Grid::boundary_nodes() order.
    std::array<std::vector<double>, 2> trace;
    std::optional<RStarEstimate> rstar;
    std::array<SolveReport, 2> phi_reports;
    std::array<SolveReport, 2> sigma_reports;
    /// ||div q_i|| / ||div(a e_i)|| after the solve, worst direction.
    double divergence_residual = 0.0;
    double seconds = 0.0;
};

CorrectorSummary summarize_correctors(std::shared_ptr<const FaceCoefficients> faces, double L,
                                      const SourceQuadrature& source, const RunOptions& options);
CorrectorSummary summarize_correctors(const Medium& medium, double L, const RunOptions& options);

/// Dirichlet data on the boundary of Q_L (Grid::boundary_nodes() order) for
/// the given algorithm. Empty for dirichlet.
std::vector<double> boundary_data(AlgorithmKind kind, const Grid& box, const CorrectorSummary* correctors,
                                  const SourceQuadrature& source);

struct RunMetadata {
    std::uint64_t seed = 0;
    double L = 0.0;
    double h = 0.1;
    AlgorithmKind kind = AlgorithmKind::dirichlet;
    std::optional<Mat2> a_h;
    std::optional<Vec2> xi;
    std::optional<RStarEstimate> rstar;
    GradientObservable gradient;
    SolveReport solve_report;
    std::array<SolveReport, 2> corrector_reports;
    double corrector_seconds = 0.0;
    double seconds = 0.0;
};

struct AlgorithmRun {
    GridField u;
    RunMetadata meta;
};

/// Solves -div(a grad u) = f on Q_L with the boundary data of the algorithm.
/// The medium must be sampled over Q_{2L + 1}.
AlgorithmRun run_algorithm(AlgorithmKind kind, const Medium& medium, double L, const RunOptions& options);

/// Same, for several algorithms sharing one corrector computation. Fields
/// are dropped (u left empty) unless keep_fields is set.
std::vector<AlgorithmRun> run_algorithms(const std::vector<AlgorithmKind>& kinds, const Medium& medium, double L,
                                         const RunOptions& options, bool keep_fields = false);

/// Solve on Q_L with explicit boundary data (empty = zero).
AlgorithmRun solve_with_boundary(const Medium& medium, double L, const std::vector<double>& trace,
                                 const RunOptions& options);

/// Smallest admissible box: the source support plus one unit.
double minimum_box(const SourceTerm& source);

} // namespace abc2d
