#include <doctest.h>

#include <cmath>

#include "abc2d/abc.hpp"

using namespace abc2d;

namespace {

RunOptions options() {
    RunOptions o;
    o.solve.relative_residual_tolerance = 1e-11;
    return o;
}

const std::vector<AlgorithmKind> kAll{AlgorithmKind::dirichlet, AlgorithmKind::no_dipole, AlgorithmKind::full,
                                      AlgorithmKind::homogenized_only};

} // namespace

TEST_CASE("algorithm names round-trip") {
    for (auto k : kAll) CHECK(parse_algorithm(to_string(k)) == k);
    CHECK_THROWS_AS(parse_algorithm("neumann"), InvalidArgument);
    CHECK_FALSE(needs_correctors(AlgorithmKind::dirichlet));
    CHECK(needs_correctors(AlgorithmKind::full));
}

TEST_CASE("gradient at the origin") {
    const Grid g(3.0, 0.1);
    const auto lin = gradient_at_origin(sample_field(g, [](const Vec2& x) { return x.x(); }), 1.0);
    CHECK(lin.pointwise.x() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(lin.pointwise.y()) < 1e-14);
    CHECK(lin.ball_average.x() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(lin.ball_average.y()) < 1e-13);

    const auto quad = gradient_at_origin(sample_field(g, [](const Vec2& x) { return 0.5 * x.squaredNorm(); }), 1.0);
    CHECK(quad.pointwise.norm() < 1e-14);
    CHECK(quad.ball_average.norm() < 1e-13);

    const auto s = gradient_at_origin(sample_field(g, [](const Vec2& x) { return std::sin(x.x()); }), 0.5);
    CHECK(s.pointwise.x() == doctest::Approx(std::sin(0.1) / 0.1).epsilon(1e-13));
    CHECK(1.0 - s.pointwise.x() == doctest::Approx(0.01 / 6.0).epsilon(1e-2));

    CHECK_THROWS_AS(gradient_at_origin(GridField(g), 3.0), InvalidArgument);
    CHECK_THROWS_AS(gradient_at_origin(GridField(g), 0.0), InvalidArgument);
}

TEST_CASE("boxes are nested") {
    for (double L : {4.0, 8.0, 16.0}) {
        const Grid a(L, 0.1), b(2.0 * L, 0.1);
        const int off = a.offset_in(b);
        for (int i = 0; i < a.side(); i += 7) CHECK(a.coord(i) == b.coord(i + off));
        CHECK(a.coord(a.intervals()) == b.coord(a.intervals() + off));
    }
}

TEST_CASE("constant medium") {
    const ConstantMedium m(0.7);
    const double L = 8.0;
    const auto opt = options();
    const auto c = summarize_correctors(m, L, opt);
    CHECK(c.dipole.xi.norm() == 0.0);
    CHECK(max_abs(c.trace[0]) == 0.0);
    CHECK(max_abs(c.trace[1]) == 0.0);
    CHECK((c.a_h.matrix - 0.7 * Mat2::Identity()).norm() < 1e-6);

    auto run = run_algorithm(AlgorithmKind::full, m, L, opt);
    CHECK(run.meta.solve_report.relative_residual <= opt.solve.relative_residual_tolerance);
    // Whole-space reference by quadrature with the exact tensor.
    const GreenFunction2D G(0.7 * Mat2::Identity());
    const auto q = source_quadrature(opt.source, opt.h);
    const Grid inner(4.0, 0.1);
    const int off = inner.offset_in(run.u.grid);
    std::vector<Vec2> pts;
    std::vector<double> fd;
    for (std::size_t k : inner.boundary_nodes()) {
        pts.push_back(inner.node(inner.col(k), inner.row(k)));
        fd.push_back(run.u(inner.col(k) + off, inner.row(k) + off));
    }
    const auto ref = solve_homogenized_at(pts, G, q);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        err = std::max(err, std::abs(fd[k] - ref[k].value));
        scale = std::max(scale, std::abs(ref[k].value));
    }
    CHECK(err / scale < 1e-3);
}

TEST_CASE("zero boundary data reproduces the Dirichlet solve") {
    const LaminateMedium m(0.5, 0.9);
    const double L = 6.0;
    const auto opt = options();
    const auto d = run_algorithm(AlgorithmKind::dirichlet, m, L, opt);
    const std::vector<double> zeros(Grid(L, opt.h).boundary_nodes().size(), 0.0);
    const auto z = solve_with_boundary(m, L, zeros, opt);
    CHECK(z.u.values == d.u.values);
    CHECK(z.meta.gradient.pointwise == d.meta.gradient.pointwise);
}

TEST_CASE("boundary data of the variants") {
    const LaminateMedium m(0.5, 0.9);
    const double L = 6.0;
    const auto opt = options();
    const Grid box(L, opt.h);
    const auto q = source_quadrature(opt.source, opt.h);
    auto c = summarize_correctors(m, L, opt);
    // phi_2 vanishes and phi_1 is even in x2, so both dipole entries vanish.
    CHECK(std::abs(c.dipole.xi.x()) < 1e-12);
    CHECK(std::abs(c.dipole.xi.y()) < 1e-12);

    CHECK(boundary_data(AlgorithmKind::dirichlet, box, &c, q).empty());
    CHECK_THROWS_AS(boundary_data(AlgorithmKind::full, box, nullptr, q), InvalidArgument);

    const auto plain = boundary_data(AlgorithmKind::homogenized_only, box, &c, q);
    const auto nd = boundary_data(AlgorithmKind::no_dipole, box, &c, q);
    std::vector<Vec2> pts;
    for (std::size_t k : box.boundary_nodes()) pts.push_back(box.node(box.col(k), box.row(k)));
    const auto ref = solve_homogenized_at(pts, GreenFunction2D(c.a_h.symmetric()), q);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        CHECK(plain[k] == ref[k].value);
        CHECK(nd[k] == doctest::Approx(ref[k].value + c.trace[0][k] * ref[k].gradient.x()).epsilon(1e-14));
    }

    c.dipole.xi = Vec2::Zero();
    CHECK(boundary_data(AlgorithmKind::full, box, &c, q) == nd);

    const auto runs = run_algorithms({AlgorithmKind::no_dipole, AlgorithmKind::full}, m, L, opt);
    CHECK((runs[0].meta.gradient.pointwise - runs[1].meta.gradient.pointwise).norm() < 1e-10);
}

TEST_CASE("media even in x2 give odd solutions") {
    const FunctionMedium m([](const Vec2& x) { return 0.65 + 0.2 * std::sin(1.3 * x.x() + 0.4) * std::cos(0.9 * x.y()); },
                           0.45, 0.85);
    const auto opt = options();
    const auto runs = run_algorithms(kAll, m, 5.0, opt, true);
    for (const auto& r : runs) {
        CAPTURE(to_string(r.meta.kind));
        CHECK(std::abs(r.meta.gradient.pointwise.x()) < 1e-9);
        CHECK(std::abs(r.meta.gradient.ball_average.x()) < 1e-9);
        CHECK(std::abs(r.meta.gradient.pointwise.y()) > 1e-3);
        CHECK(r.meta.solve_report.relative_residual <= opt.solve.relative_residual_tolerance);
        const Grid& g = r.u.grid;
        double odd = 0.0;
        for (int j = 0; j < g.side(); ++j)
            for (int i = 0; i < g.side(); ++i) odd = std::max(odd, std::abs(r.u(i, j) + r.u(i, g.intervals() - j)));
        CHECK(odd < 1e-9);
    }
}

TEST_CASE("metadata and preconditions") {
    PointProcessConfig cfg;
    cfg.master_seed = 21;
    const auto m = PoissonMedium::sample(cfg, Box::centered_cube(9.0));
    const auto opt = options();
    const auto runs = run_algorithms(kAll, m, 4.0, opt);
    REQUIRE(runs.size() == 4);
    CHECK_FALSE(runs[0].meta.a_h.has_value());
    for (std::size_t k = 1; k < 4; ++k) {
        CHECK(runs[k].meta.a_h.has_value());
        CHECK(*runs[k].meta.a_h == *runs[1].meta.a_h);
        CHECK(*runs[k].meta.xi == *runs[1].meta.xi);
        CHECK(runs[k].u.values.empty());
    }
    CHECK(runs[0].meta.kind == AlgorithmKind::dirichlet);
    CHECK(runs[2].meta.kind == AlgorithmKind::full);
    CHECK_THROWS_AS(run_algorithm(AlgorithmKind::dirichlet, m, 3.0, opt), InvalidArgument);
    CHECK_THROWS_AS(run_algorithm(AlgorithmKind::full, m, 8.0, opt), InsufficientSampling);

    RunOptions with_r = opt;
    with_r.compute_rstar = true;
    const auto c = summarize_correctors(m, 4.0, with_r);
    REQUIRE(c.rstar.has_value());
    CHECK(c.rstar->r_star <= 8.0);
    CHECK(c.divergence_residual <= 100.0 * opt.solve.relative_residual_tolerance);
    // The lean pipeline agrees with the stored-field route.
    auto set = solve_correctors(m, 4.0, 0.1, opt.solve);
    solve_sigma(set, opt.solve);
    const auto direct = estimate_rstar(set, 0.9);
    CHECK(direct.r_star == c.rstar->r_star);
    for (std::size_t k = 0; k < direct.profile.size(); ++k)
        CHECK(direct.profile[k].second == doctest::Approx(c.rstar->profile[k].second).epsilon(1e-12));
    CHECK((homogenized_tensor(set, AveragingMask(4.0)).matrix - c.a_h.matrix).norm() < 1e-14);
}
