#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "abc2d/homog.hpp"
#include "abc2d/linsolve.hpp"

using namespace abc2d;

namespace {

Mat2 diag(double a, double b) {
    Mat2 m;
    m << a, 0.0, 0.0, b;
    return m;
}

Mat2 tilted() {
    Mat2 m;
    m << 0.7, 0.08, 0.08, 0.62;
    return m;
}

// Independent 1D radial quadrature of int x2^2 exp(-5/(5-r^2)) dx = pi int r^3 e(r) dr.
double second_moment() {
    const int n = 200000;
    const double R = std::sqrt(5.0);
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        const double r = (k + 0.5) * R / n;
        s += r * r * r * std::exp(-5.0 / (5.0 - r * r));
    }
    return std::numbers::pi * s * R / n;
}

} // namespace

TEST_CASE("isotropic Green function") {
    const GreenFunction2D G(Mat2::Identity());
    for (Vec2 x : {Vec2(1.0, 0.0), Vec2(0.3, -2.0), Vec2(10.0, 7.0)})
        CHECK(G.value(x) == doctest::Approx(-std::log(x.norm()) / (2.0 * std::numbers::pi)).epsilon(1e-14));
    CHECK_THROWS_AS(G.value(Vec2::Zero()), InvalidArgument);
    CHECK_THROWS_AS(G.gradient(Vec2::Zero()), InvalidArgument);
    CHECK_THROWS_AS(G.hessian(Vec2::Zero()), InvalidArgument);
}

TEST_CASE("invalid tensors are rejected") {
    Mat2 skew;
    skew << 1.0, 0.2, 0.0, 1.0;
    CHECK_THROWS_AS(GreenFunction2D{skew}, InvalidArgument);
    CHECK_THROWS_AS(GreenFunction2D{diag(1.0, -0.5)}, InvalidArgument);
}

TEST_CASE("unit flux through circles") {
    for (const Mat2& A : {Mat2(Mat2::Identity()), diag(0.6, 0.8), tilted()}) {
        const GreenFunction2D G(A);
        for (double R : {0.5, 1.0, 3.0}) {
            const int n = 1024;
            double flux = 0.0;
            for (int k = 0; k < n; ++k) {
                const double t = 2.0 * std::numbers::pi * k / n;
                const Vec2 nrm(std::cos(t), std::sin(t));
                flux -= (A * G.gradient(R * nrm)).dot(nrm) * R * 2.0 * std::numbers::pi / n;
            }
            CHECK(flux == doctest::Approx(1.0).epsilon(1e-8));
        }
    }
}

TEST_CASE("derivatives match finite differences") {
    const GreenFunction2D G(diag(0.6, 0.8));
    const Vec2 x(1.0, 0.5);
    const double d = 1e-5;
    const Vec2 e1(d, 0.0), e2(0.0, d);
    const Vec2 fd((G.value(x + e1) - G.value(x - e1)) / (2 * d), (G.value(x + e2) - G.value(x - e2)) / (2 * d));
    CHECK((fd - G.gradient(x)).norm() < 1e-6);

    const GreenFunction2D T(tilted());
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int k = 0; k < 20; ++k) {
        const Vec2 y(u(rng), u(rng));
        if (y.norm() < 0.3) continue;
        const double s = 1e-4;
        Mat2 fdh;
        fdh.col(0) = (T.gradient(y + Vec2(s, 0)) - T.gradient(y - Vec2(s, 0))) / (2 * s);
        fdh.col(1) = (T.gradient(y + Vec2(0, s)) - T.gradient(y - Vec2(0, s))) / (2 * s);
        const Mat2 H = T.hessian(y);
        CHECK((fdh - H).norm() < 1e-6 * (1.0 + 1.0 / std::pow(y.norm(), 4)));
        CHECK(std::abs(H(0, 1) - H(1, 0)) < 1e-15);
        CHECK(std::abs((tilted().array() * H.array()).sum()) < 1e-10 * H.norm());
    }
}

TEST_CASE("source term") {
    const auto f = SourceTerm::standard();
    CHECK(f.support_radius == doctest::Approx(std::sqrt(5.0)));
    CHECK(f(Vec2(0.0, 3.0)) == 0.0);
    CHECK(f(Vec2(2.0, 1.0)) == 0.0);
    CHECK(f(Vec2(0.0, 1.0)) == doctest::Approx(std::exp(-1.25)));
    const auto q = source_quadrature(f, 0.1);
    double mass = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
        mass += q.weights[k];
        m2 += q.nodes[k].y() * q.weights[k];
    }
    CHECK(std::abs(mass) < 1e-15);
    // Lattice rule error is ~1e-6 at h = 0.1 and falls off rapidly under refinement.
    CHECK(m2 == doctest::Approx(second_moment()).epsilon(1e-5));
    const auto fine = source_quadrature(f, 0.05);
    double m2f = 0.0;
    for (std::size_t k = 0; k < fine.nodes.size(); ++k) m2f += fine.nodes[k].y() * fine.weights[k];
    CHECK(m2f == doctest::Approx(second_moment()).epsilon(1e-8));
    CHECK(q.nodes.size() > 1400);
    CHECK(q.nodes.size() < 1600);
}

TEST_CASE("homogenized solution") {
    const auto f = SourceTerm::standard();
    const auto q = source_quadrature(f, 0.1);
    const GreenFunction2D G(tilted());

    SUBCASE("zero source") {
        SourceQuadrature empty = q;
        for (auto& w : empty.weights) w = 0.0;
        const Vec2 p(5.0, 1.0);
        const auto s = solve_homogenized_at(std::span(&p, 1), G, empty);
        CHECK(s[0].value == 0.0);
        CHECK(s[0].gradient.norm() == 0.0);
    }
    SUBCASE("points inside the support are rejected") {
        const Vec2 p(2.0, 0.0);
        CHECK_THROWS_AS(solve_homogenized_at(std::span(&p, 1), G, q), InvalidArgument);
    }
    SUBCASE("dipole-order decay") {
        std::vector<Vec2> pts;
        for (double r : {20.0, 40.0, 80.0}) pts.push_back(r * Vec2(0.6, 0.8));
        const auto s = solve_homogenized_at(pts, G, q);
        const double slope1 = std::log2(s[0].gradient.norm() / s[1].gradient.norm());
        const double slope2 = std::log2(s[1].gradient.norm() / s[2].gradient.norm());
        CHECK(slope1 == doctest::Approx(2.0).epsilon(0.05));
        CHECK(slope2 == doctest::Approx(2.0).epsilon(0.05));
        // Far field -m . grad G with m = int z f.
        const Vec2 m(0.0, second_moment());
        CHECK(s[2].value == doctest::Approx(-m.dot(G.gradient(pts[2]))).epsilon(0.01));
    }
    SUBCASE("superposition") {
        SourceTerm a{[](const Vec2& x) { return bump(x - Vec2(0.5, 0.0)) - bump(x + Vec2(0.5, 0.0)); },
                     std::sqrt(5.0)};
        SourceTerm b{[](const Vec2& x) { return bump(x - Vec2(0.0, 0.6)) - bump(x); }, std::sqrt(5.0)};
        SourceTerm ab{[&](const Vec2& x) { return 2.0 * a(x) - 3.0 * b(x); }, std::sqrt(5.0)};
        std::vector<Vec2> pts{Vec2(4.0, 0.0), Vec2(-3.0, 7.0), Vec2(30.0, 30.0)};
        const auto sa = solve_homogenized_at(pts, G, source_quadrature(a, 0.1));
        const auto sb = solve_homogenized_at(pts, G, source_quadrature(b, 0.1));
        const auto sab = solve_homogenized_at(pts, G, source_quadrature(ab, 0.1));
        for (std::size_t k = 0; k < pts.size(); ++k) {
            CHECK(sab[k].value == doctest::Approx(2.0 * sa[k].value - 3.0 * sb[k].value).epsilon(1e-12));
            CHECK((sab[k].gradient - (2.0 * sa[k].gradient - 3.0 * sb[k].gradient)).norm() <
                  1e-12 * sab[k].gradient.norm());
        }
    }
}

TEST_CASE("dipole moment") {
    const auto q = source_quadrature(SourceTerm::standard(), 0.1);
    const Grid g(4.0, 0.1);
    const GridField zero(g);
    CHECK(dipole_moment({&zero, &zero}, q).xi.norm() == 0.0);
    const GridField x1 = sample_field(g, [](const Vec2& x) { return x.x(); });
    const GridField x2 = sample_field(g, [](const Vec2& x) { return x.y(); });
    const auto d = dipole_moment({&x1, &x2}, q);
    CHECK(std::abs(d.xi[0]) < 1e-15);
    CHECK(d.xi[1] < 0.0);
    CHECK(d.xi[1] == doctest::Approx(-second_moment()).epsilon(1e-5));
    const auto swapped = dipole_moment({&x2, &x2}, q);
    CHECK(swapped.xi[0] == d.xi[1]);
}

TEST_CASE("dipole-corrected solution") {
    const auto q = source_quadrature(SourceTerm::standard(), 0.1);
    const GreenFunction2D G(Mat2::Identity());
    std::vector<Vec2> pts{Vec2(5.0, 0.0), Vec2(-3.0, 4.0), Vec2(20.0, -1.0)};

    SourceQuadrature empty = q;
    for (auto& w : empty.weights) w = 0.0;
    const auto pure = uh_and_grad_at(pts, G, empty, DipoleData{Vec2(1.0, 0.0)});
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const Vec2 x = pts[k];
        const double r2 = x.squaredNorm();
        CHECK(pure[k].value == doctest::Approx(-x.x() / (2.0 * std::numbers::pi * r2)).epsilon(1e-14));
        const Vec2 grad(-(r2 - 2 * x.x() * x.x()) / (r2 * r2), 2 * x.x() * x.y() / (r2 * r2));
        CHECK((pure[k].gradient - grad / (2.0 * std::numbers::pi)).norm() < 1e-14);
    }

    const auto base = solve_homogenized_at(pts, G, q);
    const auto none = uh_and_grad_at(pts, G, q, DipoleData{});
    const DipoleData xi{Vec2(0.3, -0.2)};
    const auto full = uh_and_grad_at(pts, G, q, xi);
    const auto dip = uh_and_grad_at(pts, G, empty, xi);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        CHECK(none[k].value == base[k].value);
        CHECK(full[k].value == doctest::Approx(base[k].value + dip[k].value).epsilon(1e-13));
        CHECK((full[k].gradient - base[k].gradient - dip[k].gradient).norm() < 1e-13);
    }
}

TEST_CASE("quadrature agrees with a large finite-difference solve") {
    // -(0.6 d11 + 0.8 d22) u = f on Q_256 with u = u~ on the boundary.
    const Mat2 A = diag(0.6, 0.8);
    const GreenFunction2D G(A);
    const auto f = SourceTerm::standard();
    const auto q = source_quadrature(f, 0.1);
    const Grid g(256.0, 0.1);
    auto faces = std::make_shared<FaceCoefficients>();
    faces->grid = g;
    faces->east.assign(g.node_count(), 0.6f);
    faces->north.assign(g.node_count(), 0.8f);

    std::vector<Vec2> bnodes;
    const auto bidx = g.boundary_nodes();
    for (std::size_t k : bidx) bnodes.push_back(g.node(g.col(k), g.row(k)));
    const auto bvals = solve_homogenized_at(bnodes, G, q);
    GridField bc(g), rhs(g);
    for (std::size_t k = 0; k < bidx.size(); ++k) bc.values[bidx[k]] = bvals[k].value;
    for (std::size_t k = 0; k < q.nodes.size(); ++k)
        rhs(g.axis_index(q.nodes[k].x()), g.axis_index(q.nodes[k].y())) = q.weights[k] / 0.01;
    const SparseSystem sys = assemble(faces, g, &bc, rhs);
    SolveOptions opt;
    opt.method = SolverMethod::multigrid;
    opt.relative_residual_tolerance = 1e-11;
    const GridField u = solve(sys, opt).first;

    const Grid inner(64.0, 0.1);
    const int off = inner.offset_in(g);
    std::vector<Vec2> pts;
    std::vector<double> fd;
    for (std::size_t k : inner.boundary_nodes()) {
        const int i = inner.col(k), j = inner.row(k);
        pts.push_back(inner.node(i, j));
        fd.push_back(u(i + off, j + off));
    }
    const auto exact = solve_homogenized_at(pts, G, q);
    double err = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        err = std::max(err, std::abs(fd[k] - exact[k].value));
        scale = std::max(scale, std::abs(exact[k].value));
    }
    MESSAGE("relative difference on the inner boundary: " << err / scale);
    CHECK(err / scale <= 1e-3);
}
