#include "abc2d/io.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace abc2d {

using nlohmann::json;

namespace {

json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
json to_json(const Mat2& m) { return json::array({json::array({m(0, 0), m(0, 1)}), json::array({m(1, 0), m(1, 1)})}); }

json to_json(const SolveReport& r) {
    return {{"iterations", r.iterations}, {"relative_residual", r.relative_residual}, {"seconds", r.seconds}};
}

json to_json(const RStarEstimate& e) {
    json profile = json::array();
    for (const auto& [r, s] : e.profile) profile.push_back(json::array({r, s}));
    return {{"beta", e.beta}, {"r_star", e.r_star}, {"saturated", e.saturated}, {"profile", profile}};
}

json to_json(const RunRecord& r) {
    const RunMetadata& m = r.meta;
    json j{{"seed", r.seed},
           {"L", r.L},
           {"h", m.h},
           {"kind", to_string(m.kind)},
           {"medium", r.medium},
           {"variant", r.variant},
           {"grad_u0", to_json(m.gradient.pointwise)},
           {"grad_u0_ball", to_json(m.gradient.ball_average)},
           {"observation_radius", m.gradient.radius},
           {"solve", to_json(m.solve_report)},
           {"seconds", m.seconds},
           {"corrector_seconds", m.corrector_seconds}};
    if (m.a_h) j["a_h"] = to_json(*m.a_h);
    if (m.xi) j["xi"] = to_json(*m.xi);
    if (m.rstar) j["r_star"] = to_json(*m.rstar);
    if (m.a_h) j["corrector_solves"] = json::array({to_json(m.corrector_reports[0]), to_json(m.corrector_reports[1])});
    return j;
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::filesystem::path ensure(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    return dir;
}

json failures_json(const std::vector<RunFailure>& f) {
    json a = json::array();
    for (const auto& x : f) a.push_back({{"seed", x.seed}, {"L", x.L}, {"what", x.what}, {"message", x.message}});
    return a;
}

double opt_or_nan(const std::optional<double>& v) { return v ? *v : std::nan(""); }

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::string& schema, std::vector<std::string> columns)
    : out_(path), columns_(columns.size()) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << "# schema: " << schema << " v1\n";
    for (std::size_t k = 0; k < columns.size(); ++k) out_ << (k ? "," : "") << columns[k];
    out_ << '\n';
}

void CsvWriter::row(std::initializer_list<Cell> cells) {
    if (cells.size() != columns_) throw InvalidArgument("CSV row width does not match the header");
    bool first = true;
    for (const auto& c : cells) {
        if (!first) out_ << ',';
        first = false;
        std::visit(
            [this](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, double>) out_ << format_double(v);
                else out_ << v;
            },
            c);
    }
    out_ << '\n';
    ++rows_;
}

Written write_runs(const std::filesystem::path& dir, const std::string& stem, const std::vector<RunRecord>& runs) {
    ensure(dir);
    const auto csv = dir / (stem + ".csv");
    const auto meta = dir / (stem + ".json");
    CsvWriter w(csv, "abc2d.runs",
                {"seed", "L", "algorithm", "variant", "du_dx1", "du_dx2", "ball_du_dx1", "ball_du_dx2", "a11", "a12",
                 "a21", "a22", "xi1", "xi2", "r_star", "iterations", "seconds"});
    json all = json::array();
    for (const auto& r : runs) {
        const auto& m = r.meta;
        const Mat2 a = m.a_h.value_or(Mat2::Constant(std::nan("")));
        const Vec2 xi = m.xi.value_or(Vec2::Constant(std::nan("")));
        w.row({r.seed, r.L, std::string(to_string(m.kind)), r.variant, m.gradient.pointwise.x(),
               m.gradient.pointwise.y(), m.gradient.ball_average.x(), m.gradient.ball_average.y(), a(0, 0), a(0, 1),
               a(1, 0), a(1, 1), xi.x(), xi.y(), m.rstar ? m.rstar->r_star : std::nan(""),
               static_cast<long long>(m.solve_report.iterations), m.seconds + m.corrector_seconds});
        all.push_back(to_json(r));
    }
    write_json(meta, all);
    return {csv, meta};
}

Written write_ahom(const std::filesystem::path& dir, const AhomStudy& study) {
    ensure(dir);
    Written out{dir / "ahom.csv", dir / "ahom_differences.csv", dir / "ahom.json"};
    CsvWriter w(out[0], "abc2d.ahom", {"seed", "L", "a11", "a12", "a21", "a22", "eig_min", "eig_max", "iterations", "seconds"});
    json meta = json::array();
    for (const auto& r : study.rows) {
        const Mat2& a = r.a_h.matrix;
        const Vec2 ev = r.a_h.eigenvalues();
        w.row({r.seed, r.L, a(0, 0), a(0, 1), a(1, 0), a(1, 1), ev[0], ev[1], static_cast<long long>(r.iterations),
               r.seconds});
        meta.push_back({{"seed", r.seed}, {"L", r.L}, {"a_h", to_json(a)}, {"eigenvalues", to_json(ev)},
                        {"iterations", r.iterations}, {"seconds", r.seconds}});
    }
    CsvWriter d(out[1], "abc2d.ahom_differences", {"seed", "L", "d11", "d12", "d21", "d22"});
    for (const auto& x : ahom_differences(study.rows))
        d.row({x.seed, x.L, x.difference(0, 0), x.difference(0, 1), x.difference(1, 0), x.difference(1, 1)});
    write_json(out[2], {{"rows", meta}, {"failures", failures_json(study.failures)}});
    return out;
}

Written write_convergence(const std::filesystem::path& dir, const ConvergenceStudy& study) {
    Written out = write_runs(ensure(dir), "convergence_runs", study.runs);
    out.push_back(dir / "convergence_differences.csv");
    out.push_back(dir / "convergence_slopes.csv");
    CsvWriter d(out[2], "abc2d.convergence_differences", {"seed", "algorithm", "L", "difference", "ball_difference"});
    for (const auto& x : study.differences)
        d.row({x.seed, std::string(to_string(x.kind)), x.L, x.difference, x.ball_difference});
    CsvWriter s(out[3], "abc2d.convergence_slopes", {"seed", "algorithm", "slope", "points"});
    for (const auto& x : study.slopes)
        s.row({x.seed, std::string(to_string(x.kind)), x.slope, static_cast<long long>(x.points)});
    out.push_back(dir / "convergence_failures.json");
    write_json(out.back(), failures_json(study.failures));
    return out;
}

Written write_sensitivity(const std::filesystem::path& dir, const SensitivityStudy& study) {
    ensure(dir);
    Written out = write_runs(dir, "sensitivity_reference", study.reference);
    const auto runs = write_runs(dir, "sensitivity_runs", study.runs);
    out.insert(out.end(), runs.begin(), runs.end());
    out.push_back(dir / "sensitivity.csv");
    CsvWriter w(out.back(), "abc2d.sensitivity", {"seed", "row", "L", "resample_seed", "difference"});
    for (const auto& e : study.entries)
        w.row({e.seed, e.row == 0 ? std::string("algorithm") : "resample_" + std::to_string(e.row), e.L,
               e.resample_seed, e.value});
    out.push_back(dir / "sensitivity_failures.json");
    write_json(out.back(), failures_json(study.failures));
    return out;
}

Written write_rstar(const std::filesystem::path& dir, const RStarStudy& study) {
    ensure(dir);
    Written out{dir / "rstar.csv", dir / "rstar_profile.csv", dir / "rstar.json"};
    CsvWriter w(out[0], "abc2d.rstar", {"seed", "L", "beta", "r_star", "saturated", "predicted_factor", "measured_difference"});
    CsvWriter p(out[1], "abc2d.rstar_profile", {"seed", "L", "r", "S"});
    json meta = json::array();
    for (const auto& r : study.rows) {
        w.row({r.seed, r.L, r.estimate.beta, r.estimate.r_star, static_cast<long long>(r.estimate.saturated),
               r.predicted, opt_or_nan(r.measured)});
        for (const auto& [rad, s] : r.estimate.profile) p.row({r.seed, r.L, rad, s});
        json j{{"seed", r.seed}, {"L", r.L}, {"estimate", to_json(r.estimate)}, {"predicted_factor", r.predicted}};
        if (r.measured) j["measured_difference"] = *r.measured;
        meta.push_back(j);
    }
    write_json(out[2], {{"rows", meta}, {"failures", failures_json(study.failures)}});
    return out;
}

Written write_points(const std::filesystem::path& dir, const PoissonMedium& medium, double half_width) {
    ensure(dir);
    Written out{dir / "points.csv", dir / "points.json"};
    CsvWriter w(out[0], "abc2d.points", {"cell_i", "cell_j", "x1", "x2"});
    const PointSet& p = medium.points();
    for (auto j = p.j_begin(); j < p.j_end(); ++j)
        for (auto i = p.i_begin(); i < p.i_end(); ++i)
            for (const Vec2& x : p.cell({i, j}))
                w.row({static_cast<long long>(i), static_cast<long long>(j), x.x(), x.y()});
    const Box safe = medium.safe_region();
    write_json(out[1], {{"seed", medium.config().master_seed},
                        {"intensity", medium.config().intensity},
                        {"cell_size", medium.config().cell_size},
                        {"half_width", half_width},
                        {"points", p.size()},
                        {"safe_region", json::array({safe.xmin, safe.xmax, safe.ymin, safe.ymax})},
                        {"coefficient", "0.5 + max_i exp(-1/(1-4|x-xi_i|^2)) on |x-xi_i| < 1/2"}});
    return out;
}

Written write_corrector_summary(const std::filesystem::path& dir, std::uint64_t seed, const CorrectorSummary& c) {
    ensure(dir);
    Written out{dir / "correctors.csv", dir / "correctors.json"};
    CsvWriter w(out[0], "abc2d.correctors",
                {"seed", "L", "a11", "a12", "a21", "a22", "xi1", "xi2", "r_star", "divergence_residual", "seconds"});
    const Mat2& a = c.a_h.matrix;
    w.row({seed, c.L, a(0, 0), a(0, 1), a(1, 0), a(1, 1), c.dipole.xi.x(), c.dipole.xi.y(),
           c.rstar ? c.rstar->r_star : std::nan(""), c.divergence_residual, c.seconds});
    json j{{"seed", seed},
           {"L", c.L},
           {"h", c.h},
           {"a_h", to_json(a)},
           {"a_h_eigenvalues", to_json(c.a_h.eigenvalues())},
           {"a_h_asymmetry", c.a_h.asymmetry()},
           {"xi", to_json(c.dipole.xi)},
           {"divergence_residual", c.divergence_residual},
           {"phi_solves", json::array({to_json(c.phi_reports[0]), to_json(c.phi_reports[1])})},
           {"seconds", c.seconds}};
    if (c.rstar) {
        j["r_star"] = to_json(*c.rstar);
        j["sigma_solves"] = json::array({to_json(c.sigma_reports[0]), to_json(c.sigma_reports[1])});
        out.push_back(dir / "rstar_profile.csv");
        CsvWriter p(out.back(), "abc2d.rstar_profile", {"seed", "L", "r", "S"});
        for (const auto& [r, s] : c.rstar->profile) p.row({seed, c.L, r, s});
    }
    write_json(out[1], j);
    return out;
}

Written write_boundary_trace(const std::filesystem::path& dir, const Grid& box, const CorrectorSummary& c,
                             const SourceQuadrature& source) {
    ensure(dir);
    Written out{dir / "boundary.csv"};
    const auto nodes = box.boundary_nodes();
    std::vector<Vec2> pts;
    for (auto k : nodes) pts.push_back(box.node(box.col(k), box.row(k)));
    const GreenFunction2D G(c.a_h.symmetric());
    const auto plain = solve_homogenized_at(pts, G, source);
    const auto uh = uh_and_grad_at(pts, G, source, c.dipole);
    const auto nd = boundary_data(AlgorithmKind::no_dipole, box, &c, source);
    const auto full = boundary_data(AlgorithmKind::full, box, &c, source);
    CsvWriter w(out[0], "abc2d.boundary",
                {"x1", "x2", "phi1", "phi2", "u_tilde", "u_h", "du_h_dx1", "du_h_dx2", "bc_no_dipole", "bc_full"});
    for (std::size_t k = 0; k < pts.size(); ++k)
        w.row({pts[k].x(), pts[k].y(), c.trace[0][k], c.trace[1][k], plain[k].value, uh[k].value,
               uh[k].gradient.x(), uh[k].gradient.y(), nd[k], full[k]});
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

std::string failure_text(const std::vector<RunFailure>& failures) {
    std::ostringstream s;
    for (const auto& f : failures) s << "FAILED seed " << f.seed << " L " << f.L << " (" << f.what << "): " << f.message << '\n';
    return s.str();
}

std::string summary_text(const AhomStudy& study) {
    std::ostringstream s;
    s << "homogenized coefficient study: " << study.rows.size() << " runs, " << study.failures.size() << " failed\n";
    for (const auto& r : study.rows) {
        const Mat2& a = r.a_h.matrix;
        const Vec2 ev = r.a_h.eigenvalues();
        char line[200];
        std::snprintf(line, sizeof line, "  seed %llu  L %6g  a_h = [%.6f %.6f; %.6f %.6f]  eig [%.5f, %.5f]\n",
                      static_cast<unsigned long long>(r.seed), r.L, a(0, 0), a(0, 1), a(1, 0), a(1, 1), ev[0], ev[1]);
        s << line;
    }
    s << failure_text(study.failures);
    return s.str();
}

std::string summary_text(const ConvergenceStudy& study) {
    std::ostringstream s;
    s << "convergence study: " << study.runs.size() << " runs, " << study.failures.size() << " failed\n";
    for (const auto& d : study.differences) {
        char line[160];
        std::snprintf(line, sizeof line, "  seed %llu  %-16s L %6g  |grad u(2L) - grad u(L)| = %.3e\n",
                      static_cast<unsigned long long>(d.seed), to_string(d.kind), d.L, d.difference);
        s << line;
    }
    for (const auto& r : study.slopes) {
        char line[160];
        std::snprintf(line, sizeof line, "  slope seed %llu  %-16s %.3f (%d points)\n",
                      static_cast<unsigned long long>(r.seed), to_string(r.kind), r.slope, r.points);
        s << line;
    }
    s << failure_text(study.failures);
    return s.str();
}

std::string summary_text(const SensitivityStudy& study) {
    std::ostringstream s;
    s << "sensitivity study: " << study.entries.size() << " entries, " << study.failures.size() << " failed\n";
    for (const auto& e : study.entries) {
        char line[160];
        std::snprintf(line, sizeof line, "  seed %llu  %-12s L %6g  %.3e\n", static_cast<unsigned long long>(e.seed),
                      e.row == 0 ? "algorithm" : ("resample " + std::to_string(e.row)).c_str(), e.L, e.value);
        s << line;
    }
    s << failure_text(study.failures);
    return s.str();
}

std::string summary_text(const RStarStudy& study) {
    std::ostringstream s;
    s << "sublinearity radius study: " << study.rows.size() << " runs, " << study.failures.size() << " failed\n";
    for (const auto& r : study.rows) {
        char line[200];
        std::snprintf(line, sizeof line, "  seed %llu  L %6g  r_star %8.4f%s  predicted %.3e  measured %s\n",
                      static_cast<unsigned long long>(r.seed), r.L, r.estimate.r_star,
                      r.estimate.saturated ? " (saturated)" : "", r.predicted,
                      r.measured ? format_double(*r.measured).c_str() : "-");
        s << line;
    }
    s << failure_text(study.failures);
    return s.str();
}

} // namespace abc2d
