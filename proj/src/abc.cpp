#include "abc2d/abc.hpp"

#include <chrono>
#include <cmath>

namespace abc2d {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ||div a (e_d + grad phi)|| and ||div a e_d|| over interior nodes.
std::pair<double, double> divergence_norms(const FaceCoefficients& faces, const GridField& phi, int d) {
    const CorrectorFluxView q{&faces, &phi, d};
    const Grid& g = phi.grid;
    const double inv_h = 1.0 / g.spacing();
    double s = 0.0, b = 0.0;
    for (int j = 1; j < g.intervals(); ++j)
        for (int i = 1; i < g.intervals(); ++i) {
            const double div = (q.east(i, j) - q.east(i - 1, j) + q.north(i, j) - q.north(i, j - 1)) * inv_h;
            const double rhs = d == 0 ? (faces.e(i, j) - faces.e(i - 1, j)) * inv_h
                                      : (faces.n(i, j) - faces.n(i, j - 1)) * inv_h;
            s += div * div;
            b += rhs * rhs;
        }
    return {std::sqrt(s), std::sqrt(b)};
}

GreenFunction2D green_for(const CorrectorSummary& c) { return GreenFunction2D(c.a_h.symmetric()); }

} // namespace

const char* to_string(AlgorithmKind kind) {
    switch (kind) {
    case AlgorithmKind::dirichlet: return "dirichlet";
    case AlgorithmKind::no_dipole: return "no_dipole";
    case AlgorithmKind::full: return "full";
    case AlgorithmKind::homogenized_only: return "homogenized_only";
    }
    return "?";
}

AlgorithmKind parse_algorithm(const std::string& name) {
    for (auto k : {AlgorithmKind::dirichlet, AlgorithmKind::no_dipole, AlgorithmKind::full,
                   AlgorithmKind::homogenized_only})
        if (name == to_string(k)) return k;
    throw InvalidArgument("unknown algorithm '" + name + "'");
}

bool needs_correctors(AlgorithmKind kind) {
    return kind == AlgorithmKind::no_dipole || kind == AlgorithmKind::full ||
           kind == AlgorithmKind::homogenized_only;
}

RunOptions::RunOptions() { solve.method = SolverMethod::multigrid; }

double minimum_box(const SourceTerm& source) { return source.support_radius + 1.0; }

GradientObservable gradient_at_origin(const GridField& u, double radius) {
    const Grid& g = u.grid;
    const double h = g.spacing();
    if (!(radius > 0.0)) throw InvalidArgument("observation radius must be positive");
    if (radius + h > g.half_width() * (1.0 + 1e-12)) throw InvalidArgument("observation ball leaves the grid");
    const int c = g.origin_index();
    auto grad = [&](int i, int j) {
        return Vec2((u(i + 1, j) - u(i - 1, j)) / (2.0 * h), (u(i, j + 1) - u(i, j - 1)) / (2.0 * h));
    };
    GradientObservable obs;
    obs.radius = radius;
    obs.pointwise = grad(c, c);
    const int k = static_cast<int>(std::floor(radius / h + 1e-9));
    double mass = 0.0;
    Vec2 acc = Vec2::Zero();
    for (int dj = -k; dj <= k; ++dj)
        for (int di = -k; di <= k; ++di) {
            const double r2 = (di * di + dj * dj) * h * h / (radius * radius);
            if (r2 >= 1.0) continue;
            const double w = (1.0 - r2) * (1.0 - r2);
            mass += w;
            acc += w * grad(c + di, c + dj);
        }
    obs.ball_average = acc / mass;
    return obs;
}

CorrectorSummary summarize_correctors(std::shared_ptr<const FaceCoefficients> faces, double L,
                                      const SourceQuadrature& source, const RunOptions& options) {
    if (!faces) throw InvalidArgument("corrector summary needs face coefficients");
    const auto t0 = Clock::now();
    const Grid& big = faces->grid;
    if (std::abs(big.half_width() - 2.0 * L) > 1e-9 * L) throw InvalidArgument("faces must live on Q_{2L}");
    const Grid box(L, big.spacing());
    const int off = box.offset_in(big);
    const auto bnodes = box.boundary_nodes();
    const AveragingMask mask(L);

    CorrectorSummary out;
    out.L = L;
    out.h = big.spacing();
    std::optional<SublinearityAccumulator> acc;
    if (options.compute_rstar) acc.emplace(big, radius_ladder(2.0 * L));

    for (int d = 0; d < 2; ++d) {
        GridField curl;
        {
            GridField phi = solve_corrector_component(faces, d, options.solve, &out.phi_reports[d]);
            const CorrectorFluxView q{faces.get(), &phi, d};
            out.a_h.matrix.col(d) = masked_flux_average(q, mask);
            auto [div, rhs] = divergence_norms(*faces, phi, d);
            if (rhs > 0.0) out.divergence_residual = std::max(out.divergence_residual, div / rhs);

            auto& tr = out.trace[d];
            tr.resize(bnodes.size());
            for (std::size_t k = 0; k < bnodes.size(); ++k)
                tr[k] = phi(box.col(bnodes[k]) + off, box.row(bnodes[k]) + off);

            double s = 0.0;
            for (std::size_t k = 0; k < source.nodes.size(); ++k) s += phi.at(source.nodes[k]) * source.weights[k];
            out.dipole.xi[d] = -s;

            if (acc) {
                acc->add(phi);
                curl = curl_of(q);
            }
        }
        if (acc) {
            GridField sigma = solve_sigma_for_curl(std::move(curl), options.solve, &out.sigma_reports[d]);
            acc->add(sigma);
        }
    }
    if (acc) out.rstar = rstar_from_profile(acc->radii(), acc->profile(), options.beta);
    out.seconds = seconds_since(t0);
    return out;
}

CorrectorSummary summarize_correctors(const Medium& medium, double L, const RunOptions& options) {
    const Grid big(2.0 * L, options.h);
    auto faces = std::make_shared<const FaceCoefficients>(face_coefficients(medium, big));
    return summarize_correctors(std::move(faces), L, source_quadrature(options.source, options.h), options);
}

std::vector<double> boundary_data(AlgorithmKind kind, const Grid& box, const CorrectorSummary* c,
                                  const SourceQuadrature& source) {
    if (kind == AlgorithmKind::dirichlet) return {};
    if (!c) throw InvalidArgument(std::string(to_string(kind)) + " needs correctors");
    const auto bnodes = box.boundary_nodes();
    if (c->trace[0].size() != bnodes.size()) throw InvalidArgument("corrector trace does not match the box");
    std::vector<Vec2> pts(bnodes.size());
    for (std::size_t k = 0; k < bnodes.size(); ++k) pts[k] = box.node(box.col(bnodes[k]), box.row(bnodes[k]));

    const GreenFunction2D G = green_for(*c);
    const auto u = kind == AlgorithmKind::full ? uh_and_grad_at(pts, G, source, c->dipole)
                                               : solve_homogenized_at(pts, G, source);
    std::vector<double> out(bnodes.size());
    for (std::size_t k = 0; k < bnodes.size(); ++k) {
        out[k] = u[k].value;
        if (kind != AlgorithmKind::homogenized_only)
            out[k] += c->trace[0][k] * u[k].gradient.x() + c->trace[1][k] * u[k].gradient.y();
    }
    return out;
}

AlgorithmRun solve_with_boundary(const Medium& medium, double L, const std::vector<double>& trace,
                                 const RunOptions& options) {
    const auto t0 = Clock::now();
    if (L < minimum_box(options.source)) throw InvalidArgument("box too small for the source support");
    const Grid box(L, options.h);
    auto faces = std::make_shared<const FaceCoefficients>(face_coefficients(medium, box));
    const GridField rhs = sample_field(box, options.source.f);
    std::optional<GridField> bc;
    if (!trace.empty()) {
        const auto bnodes = box.boundary_nodes();
        if (trace.size() != bnodes.size()) throw InvalidArgument("boundary data does not match the box");
        bc.emplace(box);
        for (std::size_t k = 0; k < bnodes.size(); ++k) bc->values[bnodes[k]] = trace[k];
    }
    const SparseSystem sys = assemble(std::move(faces), box, bc ? &*bc : nullptr, rhs);
    auto [u, report] = solve(sys, options.solve);
    AlgorithmRun run;
    run.meta.L = L;
    run.meta.h = options.h;
    run.meta.gradient = gradient_at_origin(u, options.observation_radius);
    run.meta.solve_report = std::move(report);
    run.meta.seconds = seconds_since(t0);
    run.u = std::move(u);
    return run;
}

std::vector<AlgorithmRun> run_algorithms(const std::vector<AlgorithmKind>& kinds, const Medium& medium, double L,
                                         const RunOptions& options, bool keep_fields) {
    if (L < minimum_box(options.source)) throw InvalidArgument("box too small for the source support");
    const SourceQuadrature source = source_quadrature(options.source, options.h);
    std::optional<CorrectorSummary> corr;
    for (auto k : kinds)
        if (needs_correctors(k) && !corr) corr = summarize_correctors(medium, L, options);

    const Grid box(L, options.h);
    std::vector<AlgorithmRun> runs;
    for (auto k : kinds) {
        const CorrectorSummary* c = needs_correctors(k) ? &*corr : nullptr;
        AlgorithmRun run = solve_with_boundary(medium, L, boundary_data(k, box, c, source), options);
        run.meta.kind = k;
        if (c) {
            run.meta.a_h = c->a_h.matrix;
            run.meta.xi = c->dipole.xi;
            run.meta.rstar = c->rstar;
            run.meta.corrector_reports = c->phi_reports;
            run.meta.corrector_seconds = c->seconds;
        }
        if (!keep_fields) run.u = GridField();
        runs.push_back(std::move(run));
    }
    return runs;
}

AlgorithmRun run_algorithm(AlgorithmKind kind, const Medium& medium, double L, const RunOptions& options) {
    return std::move(run_algorithms({kind}, medium, L, options, true).front());
}

} // namespace abc2d
