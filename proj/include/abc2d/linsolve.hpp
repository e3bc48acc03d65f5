#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abc2d/fd.hpp"

namespace abc2d {

enum class SolverMethod {
    /// Preconditioned conjugate gradients.
    conjugate_gradient,
    /// Stationary V-cycle iteration: needs two grid vectors only, which is
    /// what lets reference-scale boxes fit in memory.
    multigrid,
};

enum class Preconditioner { none, diagonal, symmetric_gauss_seidel, multigrid };

struct SolveOptions {
    double relative_residual_tolerance = 1e-10;
    int max_iterations = 5000;
    SolverMethod method = SolverMethod::conjugate_gradient;
    Preconditioner preconditioner = Preconditioner::multigrid;
    int pre_smooth = 2;
    int post_smooth = 2;
    /// Called with each iterate of the conjugate gradient loop.
    std::function<void(int, std::span<const double>)> observer;

    void validate() const;
};

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;
    double seconds = 0.0;
    std::vector<double> residual_history;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, SolveReport report)
        : Error(what), report_(std::move(report)) {}
    const SolveReport& report() const { return report_; }
    const std::vector<double>& residual_history() const { return report_.residual_history; }

private:
    SolveReport report_;
};

/// Symmetric positive definite operator for the Krylov loop.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual std::size_t size() const = 0;
    virtual void apply(std::span<const double> x, std::span<double> y) const = 0;
    /// Diagonal entries; 0 marks entries that are not unknowns.
    virtual void diagonal(std::span<double> d) const = 0;
};

/// Diagonal matrix, used as the simplest test operator.
class DiagonalOperator final : public LinearOperator {
public:
    explicit DiagonalOperator(std::vector<double> diag) : diag_(std::move(diag)) {}
    std::size_t size() const override { return diag_.size(); }
    void apply(std::span<const double> x, std::span<double> y) const override;
    void diagonal(std::span<double> d) const override;

private:
    std::vector<double> diag_;
};

/// LinearOperator adapter over an assembled system (boundary entries are not
/// unknowns).
class SystemOperator final : public LinearOperator {
public:
    explicit SystemOperator(const SparseSystem& system) : system_(system) {}
    std::size_t size() const override { return system_.grid().node_count(); }
    void apply(std::span<const double> x, std::span<double> y) const override;
    void diagonal(std::span<double> d) const override;

private:
    const SparseSystem& system_;
};

using PreconditionerFn = std::function<void(std::span<const double>, std::span<double>)>;

/// Preconditioned CG on op x = b starting from the given x. Throws
/// NonConvergence when the tolerance is not met.
SolveReport conjugate_gradient(const LinearOperator& op, std::span<const double> b,
                               std::span<double> x, const PreconditionerFn& precondition,
                               const SolveOptions& options);

/// Geometric multigrid hierarchy for the 5-point operator: red-black
/// Gauss-Seidel smoothing, full-weighting restriction, bilinear
/// prolongation, coefficients coarsened by row-weighted harmonic means and
/// a banded Cholesky solve on the coarsest level.
class Multigrid {
public:
    Multigrid(const StencilView& fine, int pre_smooth, int post_smooth);
    ~Multigrid();
    Multigrid(const Multigrid&) = delete;
    Multigrid& operator=(const Multigrid&) = delete;

    /// One V-cycle on A x = b at the finest level, x updated in place.
    void vcycle(std::span<const double> b, std::span<double> x);

    /// z = M^{-1} r (V-cycle from a zero guess); symmetric in r.
    void precondition(std::span<const double> r, std::span<double> z);

    std::size_t levels() const;

private:
    struct Level;
    void cycle(std::size_t level, const double* b, double* x);
    std::vector<std::unique_ptr<Level>> levels_;
    int pre_smooth_;
    int post_smooth_;
};

/// ||b - A x||_2 over interior rows.
double residual_norm(const StencilView& op, std::span<const double> b, std::span<const double> x);

/// Solves the system; the returned field carries the boundary data.
std::pair<GridField, SolveReport> solve(const SparseSystem& system, const SolveOptions& options);

const char* to_string(Preconditioner p);
const char* to_string(SolverMethod m);

} // namespace abc2d
