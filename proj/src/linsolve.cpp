#include "abc2d/linsolve.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "stencil.hpp"

namespace abc2d {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

/// Banded Cholesky factor of the interior operator of a small grid.
class BandedCholesky {
public:
    explicit BandedCholesky(const StencilView& op) : op_(op) {
        inner_ = op.n - 1;
        const std::size_t size = static_cast<std::size_t>(inner_) * static_cast<std::size_t>(inner_);
        bw_ = static_cast<std::size_t>(inner_);
        band_.assign(size * (bw_ + 1), 0.0);
        const std::size_t m = op.side();
        const double inv_h2 = 1.0 / (op.h * op.h);
        // band_(r, d) holds A(r, r - d).
        for (int j = 1; j < op.n; ++j)
            for (int i = 1; i < op.n; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * m + static_cast<std::size_t>(i);
                const std::size_t r = unknown(i, j);
                const detail::FaceSum a = detail::faces_at(op, k);
                at(r, 0) = a.total() * inv_h2;
                if (i > 1) at(r, 1) = -a.w * inv_h2;
                if (j > 1) at(r, bw_) = -a.s * inv_h2;
            }
        for (std::size_t r = 0; r < size; ++r) {
            const std::size_t c0 = r >= bw_ ? r - bw_ : 0;
            for (std::size_t c = c0; c <= r; ++c) {
                double s = at(r, r - c);
                const std::size_t k0 = std::max(c0, c >= bw_ ? c - bw_ : 0);
                for (std::size_t k = k0; k < c; ++k) s -= at(r, r - k) * at(c, c - k);
                if (c == r) {
                    if (!(s > 0.0)) throw Error("coarse operator is not positive definite");
                    at(r, 0) = std::sqrt(s);
                } else {
                    at(r, r - c) = s / at(c, 0);
                }
            }
        }
    }

    void solve(const double* b, double* x) const {
        const std::size_t size = static_cast<std::size_t>(inner_) * static_cast<std::size_t>(inner_);
        const std::size_t m = op_.side();
        std::vector<double> y(size);
        for (int j = 1; j < op_.n; ++j)
            for (int i = 1; i < op_.n; ++i)
                y[unknown(i, j)] = b[static_cast<std::size_t>(j) * m + static_cast<std::size_t>(i)];
        for (std::size_t r = 0; r < size; ++r) {
            double s = y[r];
            const std::size_t c0 = r >= bw_ ? r - bw_ : 0;
            for (std::size_t c = c0; c < r; ++c) s -= at(r, r - c) * y[c];
            y[r] = s / at(r, 0);
        }
        for (std::size_t r = size; r-- > 0;) {
            double s = y[r];
            const std::size_t c1 = std::min(size - 1, r + bw_);
            for (std::size_t c = r + 1; c <= c1; ++c) s -= at(c, c - r) * y[c];
            y[r] = s / at(r, 0);
        }
        for (int j = 1; j < op_.n; ++j)
            for (int i = 1; i < op_.n; ++i)
                x[static_cast<std::size_t>(j) * m + static_cast<std::size_t>(i)] = y[unknown(i, j)];
    }

private:
    std::size_t unknown(int i, int j) const {
        return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(inner_) +
               static_cast<std::size_t>(i - 1);
    }
    double& at(std::size_t r, std::size_t d) { return band_[r * (bw_ + 1) + d]; }
    double at(std::size_t r, std::size_t d) const { return band_[r * (bw_ + 1) + d]; }

    StencilView op_;
    int inner_ = 0;
    std::size_t bw_ = 0;
    std::vector<double> band_;
};

constexpr int kMaxDirectInner = 160;

/// One red-black Gauss-Seidel half sweep over nodes with (i + j) % 2 == color.
void gs_color(const StencilView& op, const double* b, double* x, int color) {
    const std::size_t m = op.side();
    const double h2 = op.h * op.h;
    for (int j = 1; j < op.n; ++j) {
        const std::size_t base = static_cast<std::size_t>(j) * m;
        for (int i = 1 + ((j + 1 + color) & 1); i < op.n; i += 2) {
            const std::size_t k = base + static_cast<std::size_t>(i);
            const detail::FaceSum a = detail::faces_at(op, k);
            x[k] = (h2 * b[k] + a.e * x[k + 1] + a.w * x[k - 1] + a.n * x[k + m] + a.s * x[k - m]) /
                   a.total();
        }
    }
}

void residual_row(const StencilView& op, const double* b, const double* x, int j, double* out) {
    const std::size_t m = op.side();
    std::fill(out, out + m, 0.0);
    if (j <= 0 || j >= op.n) return;
    const std::size_t base = static_cast<std::size_t>(j) * m;
    for (int i = 1; i < op.n; ++i) {
        const std::size_t k = base + static_cast<std::size_t>(i);
        out[i] = b[k] - detail::apply_at(op, x, k);
    }
}

} // namespace

void SolveOptions::validate() const {
    if (!(relative_residual_tolerance > 0.0 && relative_residual_tolerance < 1.0))
        throw InvalidArgument("relative residual tolerance must lie in (0, 1)");
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be at least 1");
    if (pre_smooth < 0 || post_smooth < 0 || pre_smooth + post_smooth < 1)
        throw InvalidArgument("multigrid needs at least one smoothing step");
}

void DiagonalOperator::apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t k = 0; k < diag_.size(); ++k) y[k] = diag_[k] * x[k];
}

void DiagonalOperator::diagonal(std::span<double> d) const {
    std::copy(diag_.begin(), diag_.end(), d.begin());
}

void SystemOperator::apply(std::span<const double> x, std::span<double> y) const {
    system_.apply(x, y);
}

void SystemOperator::diagonal(std::span<double> d) const {
    const Grid& g = system_.grid();
    for (int j = 0; j < g.side(); ++j)
        for (int i = 0; i < g.side(); ++i) {
            const std::size_t k = g.index(i, j);
            d[k] = g.is_boundary(i, j) ? 0.0 : system_.diagonal(k);
        }
}

SolveReport conjugate_gradient(const LinearOperator& op, std::span<const double> b,
                               std::span<double> x, const PreconditionerFn& precondition,
                               const SolveOptions& options) {
    options.validate();
    const auto t0 = Clock::now();
    const std::size_t n = op.size();
    SolveReport report;
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        report.seconds = seconds_since(t0);
        return report;
    }
    // z shares storage with q: z is consumed before q = A p is formed.
    std::vector<double> r(n), p(n), q(n);
    op.apply(x, q);
    for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
    double rel = std::sqrt(dot(r, r)) / bnorm;
    report.residual_history.push_back(rel);
    double rz_old = 0.0;
    int it = 0;
    while (rel > options.relative_residual_tolerance && it < options.max_iterations) {
        if (precondition)
            precondition(r, q);
        else
            std::copy(r.begin(), r.end(), q.begin());
        const double rz = dot(r, q);
        if (it == 0) {
            std::copy(q.begin(), q.end(), p.begin());
        } else {
            const double beta = rz / rz_old;
            for (std::size_t k = 0; k < n; ++k) p[k] = q[k] + beta * p[k];
        }
        rz_old = rz;
        op.apply(p, q);
        const double pq = dot(p, q);
        if (!(pq > 0.0)) {
            report.iterations = it;
            report.relative_residual = rel;
            report.seconds = seconds_since(t0);
            throw NonConvergence("operator is not positive definite along a search direction", report);
        }
        const double alpha = rz / pq;
        for (std::size_t k = 0; k < n; ++k) {
            x[k] += alpha * p[k];
            r[k] -= alpha * q[k];
        }
        ++it;
        rel = std::sqrt(dot(r, r)) / bnorm;
        report.residual_history.push_back(rel);
        if (options.observer) options.observer(it, x);
    }
    report.iterations = it;
    report.relative_residual = rel;
    report.seconds = seconds_since(t0);
    if (rel > options.relative_residual_tolerance) {
        std::ostringstream msg;
        msg << "conjugate gradients stalled at relative residual " << rel << " after " << it
            << " iterations";
        throw NonConvergence(msg.str(), report);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Multigrid
// ---------------------------------------------------------------------------

struct Multigrid::Level {
    StencilView op;
    std::vector<float> east;
    std::vector<float> north;
    std::vector<double> x;
    std::vector<double> b;
    std::vector<double> rows;  // 3 rolling residual rows
    std::unique_ptr<BandedCholesky> direct;
    std::unique_ptr<SparseSystem> fallback;  // coarsest too large for the band solver
    std::shared_ptr<FaceCoefficients> fallback_faces;
};

namespace {

void coarsen_faces(const StencilView& fine, int nc, std::vector<float>& east, std::vector<float>& north) {
    const std::size_t mf = fine.side();
    const std::size_t mc = static_cast<std::size_t>(nc) + 1;
    east.assign(mc * mc, 0.0f);
    north.assign(mc * mc, 0.0f);
    const int nf = fine.n;
    auto fe = [&](int i, int j) { return static_cast<double>(fine.east[static_cast<std::size_t>(j) * mf + static_cast<std::size_t>(i)]); };
    auto fn = [&](int i, int j) { return static_cast<double>(fine.north[static_cast<std::size_t>(j) * mf + static_cast<std::size_t>(i)]); };
    auto clamp = [&](int v) { return std::clamp(v, 0, nf); };
    for (int J = 0; J <= nc; ++J)
        for (int I = 0; I <= nc; ++I) {
            const std::size_t k = static_cast<std::size_t>(J) * mc + static_cast<std::size_t>(I);
            if (I < nc) {
                const int i = 2 * I;
                double s = 0.0;
                const int rows[3] = {clamp(2 * J - 1), 2 * J, clamp(2 * J + 1)};
                const double w[3] = {0.25, 0.5, 0.25};
                for (int t = 0; t < 3; ++t) s += w[t] * harmonic(fe(i, rows[t]), fe(i + 1, rows[t]));
                east[k] = static_cast<float>(s);
            }
            if (J < nc) {
                const int j = 2 * J;
                double s = 0.0;
                const int cols[3] = {clamp(2 * I - 1), 2 * I, clamp(2 * I + 1)};
                const double w[3] = {0.25, 0.5, 0.25};
                for (int t = 0; t < 3; ++t) s += w[t] * harmonic(fn(cols[t], j), fn(cols[t], j + 1));
                north[k] = static_cast<float>(s);
            }
        }
}

} // namespace

Multigrid::Multigrid(const StencilView& fine, int pre_smooth, int post_smooth)
    : pre_smooth_(pre_smooth), post_smooth_(post_smooth) {
    if (fine.n < 2) throw InvalidArgument("multigrid needs interior nodes");
    auto top = std::make_unique<Level>();
    top->op = fine;
    top->rows.assign(3 * fine.side(), 0.0);
    levels_.push_back(std::move(top));
    while (true) {
        const StencilView& f = levels_.back()->op;
        if (f.n % 2 != 0 || f.n / 2 < 2) break;
        auto lvl = std::make_unique<Level>();
        const int nc = f.n / 2;
        lvl->op.n = nc;
        lvl->op.h = 2.0 * f.h;
        if (f.east != nullptr) {
            coarsen_faces(f, nc, lvl->east, lvl->north);
            lvl->op.east = lvl->east.data();
            lvl->op.north = lvl->north.data();
        }
        const std::size_t mc = lvl->op.side();
        lvl->x.assign(mc * mc, 0.0);
        lvl->b.assign(mc * mc, 0.0);
        lvl->rows.assign(3 * mc, 0.0);
        levels_.push_back(std::move(lvl));
    }
    Level& last = *levels_.back();
    if (last.op.n - 1 <= kMaxDirectInner) {
        last.direct = std::make_unique<BandedCholesky>(last.op);
    } else {
        const Grid g(0.5 * last.op.n * last.op.h, last.op.h);
        if (last.op.east != nullptr) {
            auto faces = std::make_shared<FaceCoefficients>();
            faces->grid = g;
            const std::size_t nn = g.node_count();
            faces->east.assign(last.op.east, last.op.east + nn);
            faces->north.assign(last.op.north, last.op.north + nn);
            last.fallback_faces = faces;
        }
        last.fallback = std::make_unique<SparseSystem>(g, last.fallback_faces,
                                                       std::vector<double>(g.node_count(), 0.0),
                                                       std::vector<double>{});
    }
}

Multigrid::~Multigrid() = default;

std::size_t Multigrid::levels() const { return levels_.size(); }

void Multigrid::cycle(std::size_t level, const double* b, double* x) {
    Level& L = *levels_[level];
    const StencilView& op = L.op;
    if (level + 1 == levels_.size()) {
        if (L.direct) {
            L.direct->solve(b, x);
        } else {
            SparseSystem& sys = *L.fallback;
            std::copy(b, b + op.side() * op.side(), sys.mutable_rhs().begin());
            SolveOptions inner;
            inner.relative_residual_tolerance = 1e-13;
            inner.max_iterations = 100000;
            SystemOperator A(sys);
            std::vector<double> diag(A.size());
            A.diagonal(diag);
            PreconditionerFn jacobi = [&](std::span<const double> r, std::span<double> z) {
                for (std::size_t k = 0; k < r.size(); ++k) z[k] = diag[k] > 0.0 ? r[k] / diag[k] : 0.0;
            };
            std::span<double> xs(x, op.side() * op.side());
            std::fill(xs.begin(), xs.end(), 0.0);
            conjugate_gradient(A, sys.rhs(), xs, jacobi, inner);
        }
        return;
    }
    for (int s = 0; s < pre_smooth_; ++s) {
        gs_color(op, b, x, 0);
        gs_color(op, b, x, 1);
    }

    // Full-weighting restriction of the residual with three rolling rows.
    Level& C = *levels_[level + 1];
    const int nc = C.op.n;
    const std::size_t m = op.side();
    const std::size_t mc = C.op.side();
    std::fill(C.b.begin(), C.b.end(), 0.0);
    std::fill(C.x.begin(), C.x.end(), 0.0);
    double* r0 = L.rows.data();
    double* r1 = r0 + m;
    double* r2 = r1 + m;
    residual_row(op, b, x, 1, r0);
    for (int J = 1; J < nc; ++J) {
        residual_row(op, b, x, 2 * J, r1);
        residual_row(op, b, x, 2 * J + 1, r2);
        for (int I = 1; I < nc; ++I) {
            const std::size_t i = 2 * static_cast<std::size_t>(I);
            const double v = 4.0 * r1[i] + 2.0 * (r1[i - 1] + r1[i + 1] + r0[i] + r2[i]) +
                             (r0[i - 1] + r0[i + 1] + r2[i - 1] + r2[i + 1]);
            C.b[static_cast<std::size_t>(J) * mc + static_cast<std::size_t>(I)] = v / 16.0;
        }
        std::swap(r0, r2);
    }

    cycle(level + 1, C.b.data(), C.x.data());

    // Bilinear prolongation of the correction.
    const double* e = C.x.data();
    for (int j = 1; j < op.n; ++j) {
        const std::size_t J = static_cast<std::size_t>(j / 2);
        const bool jodd = (j & 1) != 0;
        const std::size_t base = static_cast<std::size_t>(j) * m;
        for (int i = 1; i < op.n; ++i) {
            const std::size_t I = static_cast<std::size_t>(i / 2);
            const bool iodd = (i & 1) != 0;
            const std::size_t c = J * mc + I;
            double v;
            if (!iodd && !jodd)
                v = e[c];
            else if (iodd && !jodd)
                v = 0.5 * (e[c] + e[c + 1]);
            else if (!iodd && jodd)
                v = 0.5 * (e[c] + e[c + mc]);
            else
                v = 0.25 * (e[c] + e[c + 1] + e[c + mc] + e[c + mc + 1]);
            x[base + static_cast<std::size_t>(i)] += v;
        }
    }

    for (int s = 0; s < post_smooth_; ++s) {
        gs_color(op, b, x, 1);
        gs_color(op, b, x, 0);
    }
}

void Multigrid::vcycle(std::span<const double> b, std::span<double> x) {
    cycle(0, b.data(), x.data());
}

void Multigrid::precondition(std::span<const double> r, std::span<double> z) {
    std::fill(z.begin(), z.end(), 0.0);
    cycle(0, r.data(), z.data());
}

double residual_norm(const StencilView& op, std::span<const double> b, std::span<const double> x) {
    const std::size_t m = op.side();
    double s = 0.0;
    for (int j = 1; j < op.n; ++j)
        for (int i = 1; i < op.n; ++i) {
            const std::size_t k = static_cast<std::size_t>(j) * m + static_cast<std::size_t>(i);
            const double r = b[k] - detail::apply_at(op, x.data(), k);
            s += r * r;
        }
    return std::sqrt(s);
}

namespace {

void stationary_multigrid(const SparseSystem& system, std::span<double> x, const SolveOptions& options,
                          SolveReport& report) {
    const StencilView op = system.stencil();
    const auto b = system.rhs();
    const double bnorm = std::sqrt(dot(b, b));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return;
    }
    Multigrid mg(op, options.pre_smooth, options.post_smooth);
    double rel = residual_norm(op, b, x) / bnorm;
    report.residual_history.push_back(rel);
    int it = 0;
    while (rel > options.relative_residual_tolerance && it < options.max_iterations) {
        mg.vcycle(b, x);
        ++it;
        const double next = residual_norm(op, b, x) / bnorm;
        report.residual_history.push_back(next);
        // Rounding floor: no further progress possible.
        if (next > 0.9 * rel && it > 5) {
            rel = next;
            break;
        }
        rel = next;
    }
    report.iterations = it;
    report.relative_residual = rel;
}

} // namespace

std::pair<GridField, SolveReport> solve(const SparseSystem& system, const SolveOptions& options) {
    options.validate();
    const auto t0 = Clock::now();
    GridField u(system.grid());
    SolveReport report;
    if (options.method == SolverMethod::multigrid) {
        stationary_multigrid(system, u.values, options, report);
    } else {
        SystemOperator A(system);
        PreconditionerFn pc;
        std::unique_ptr<Multigrid> mg;
        std::vector<double> diag;
        const StencilView op = system.stencil();
        switch (options.preconditioner) {
        case Preconditioner::none:
            break;
        case Preconditioner::diagonal:
            diag.resize(A.size());
            A.diagonal(diag);
            pc = [&diag](std::span<const double> r, std::span<double> z) {
                for (std::size_t k = 0; k < r.size(); ++k) z[k] = diag[k] > 0.0 ? r[k] / diag[k] : 0.0;
            };
            break;
        case Preconditioner::symmetric_gauss_seidel:
            pc = [op](std::span<const double> r, std::span<double> z) {
                std::fill(z.begin(), z.end(), 0.0);
                const std::size_t m = op.side();
                const double h2 = op.h * op.h;
                auto relax = [&](int i, int j) {
                    const std::size_t k = static_cast<std::size_t>(j) * m + static_cast<std::size_t>(i);
                    const detail::FaceSum a = detail::faces_at(op, k);
                    z[k] = (h2 * r[k] + a.e * z[k + 1] + a.w * z[k - 1] + a.n * z[k + m] + a.s * z[k - m]) /
                           a.total();
                };
                for (int j = 1; j < op.n; ++j)
                    for (int i = 1; i < op.n; ++i) relax(i, j);
                for (int j = op.n - 1; j >= 1; --j)
                    for (int i = op.n - 1; i >= 1; --i) relax(i, j);
            };
            break;
        case Preconditioner::multigrid:
            mg = std::make_unique<Multigrid>(op, options.pre_smooth, options.post_smooth);
            pc = [&mg](std::span<const double> r, std::span<double> z) { mg->precondition(r, z); };
            break;
        }
        report = conjugate_gradient(A, system.rhs(), u.values, pc, options);
    }
    report.seconds = seconds_since(t0);
    if (report.relative_residual > options.relative_residual_tolerance) {
        std::ostringstream msg;
        msg << "multigrid stalled at relative residual " << report.relative_residual << " after "
            << report.iterations << " cycles";
        throw NonConvergence(msg.str(), report);
    }
    if (!system.boundary().empty())
        for (std::size_t k : system.grid().boundary_nodes()) u.values[k] = system.boundary()[k];
    return {std::move(u), std::move(report)};
}

const char* to_string(Preconditioner p) {
    switch (p) {
    case Preconditioner::none: return "none";
    case Preconditioner::diagonal: return "diagonal";
    case Preconditioner::symmetric_gauss_seidel: return "symmetric-gauss-seidel";
    case Preconditioner::multigrid: return "geometric-multigrid";
    }
    return "?";
}

const char* to_string(SolverMethod m) {
    return m == SolverMethod::multigrid ? "multigrid" : "conjugate-gradient";
}

} // namespace abc2d
