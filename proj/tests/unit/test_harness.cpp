#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "abc2d/io.hpp"

using namespace abc2d;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("abc2d_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

ExperimentConfig small() {
    ExperimentConfig c;
    c.seeds = {5, 6};
    c.L_values = {4, 8};
    c.solver_tolerance = 1e-11;
    return c;
}

} // namespace

TEST_CASE("config file and settings") {
    const auto dir = scratch("config");
    {
        std::ofstream f(dir / "study.cfg");
        f << "# comment line\n"
             "seeds = 1, 2, 0x10\n"
             "L_values = 32,8,16   # unsorted on purpose\n"
             "h = 0.2\n"
             "beta = 0.5\n"
             "algorithms = full,dirichlet\n"
             "reference_L = 64\n"
             "resample_count = 2\n"
             "output_dir = results\n"
             "workers = 2\n"
             "medium = laminate:0.5,0.9\n";
    }
    const auto c = load_config(dir / "study.cfg");
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 16});
    CHECK(c.L_values == std::vector<double>{8, 16, 32});
    CHECK(c.h == 0.2);
    CHECK(c.beta == 0.5);
    CHECK(c.algorithms == std::vector<AlgorithmKind>{AlgorithmKind::full, AlgorithmKind::dirichlet});
    CHECK(*c.reference_L == 64.0);
    CHECK(c.resample_count == 2);
    CHECK(c.output_dir == fs::path("results"));
    CHECK(c.workers == 2);
    CHECK(c.medium.kind == MediumSpec::Kind::laminate);
    CHECK(c.medium.tag() == "laminate:0.5,0.90000000000000002");
    CHECK_NOTHROW(c.validate());

    ExperimentConfig d;
    CHECK_THROWS_AS(apply_setting(d, "colour", "blue"), InvalidArgument);
    CHECK_THROWS_AS(apply_setting(d, "h", "0.1x"), InvalidArgument);
    CHECK_THROWS_AS(apply_setting(d, "seeds", "1,-"), InvalidArgument);
    CHECK_THROWS_AS(apply_setting(d, "medium", "gaussian"), InvalidArgument);
    CHECK_THROWS_AS(load_config(dir / "missing.cfg"), InvalidArgument);
    {
        std::ofstream f(dir / "bad.cfg");
        f << "seeds 1\n";
    }
    CHECK_THROWS_AS(load_config(dir / "bad.cfg"), InvalidArgument);
    // describe() output reads back to the same config
    {
        std::ofstream f(dir / "round.cfg");
        f << describe(c);
    }
    const auto r = load_config(dir / "round.cfg");
    CHECK(describe(r) == describe(c));
}

TEST_CASE("config validation and memory guard") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.L_values = {16, 8};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.L_values = {8, 16};
    c.beta = 1.0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.beta = 0.9;
    c.L_values = {8, 1024};
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.L_values = {8, 256};
    CHECK_NOTHROW(c.validate());
    c.workers = 2;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    CHECK(estimated_run_bytes(16, 0.1, true) > estimated_run_bytes(16, 0.1, false));
}

TEST_CASE("media from specs") {
    CHECK(make_medium(MediumSpec::parse("constant:0.7"), 1, 4)->eval(Vec2(1, 2)) == 0.7);
    const auto lam = make_medium(MediumSpec::parse("laminate:0.5,0.9"), 1, 4);
    CHECK(lam->eval(Vec2(0.5, 0)) == 0.5);
    CHECK(lam->eval(Vec2(1.5, 0)) == 0.9);
    const auto p = make_medium(MediumSpec::parse("poisson"), 9, 4);
    const auto q = make_medium(MediumSpec::parse("poisson"), 9, 8);
    CHECK(p->eval(Vec2(0.3, -1.2)) == q->eval(Vec2(0.3, -1.2)));
    CHECK_THROWS_AS(MediumSpec::parse("constant"), InvalidArgument);
}

TEST_CASE("worker pool") {
    std::vector<int> out(50, -1);
    const auto errors = run_parallel(out.size(), 4, [&](std::size_t i) {
        if (i == 7) throw Error("seven");
        out[i] = static_cast<int>(i * i);
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i == 7) {
            CHECK(errors[i] == "seven");
            CHECK(out[i] == -1);
        } else {
            CHECK(errors[i].empty());
            CHECK(out[i] == static_cast<int>(i * i));
        }
    }
    CHECK(run_parallel(0, 3, [](std::size_t) {}).empty());
}

TEST_CASE("fits and seeds") {
    const std::vector<double> L{8, 16, 32, 64};
    std::vector<double> y;
    for (double l : L) y.push_back(3.0 * std::pow(l, -2.5));
    CHECK(loglog_slope(L, y) == doctest::Approx(-2.5).epsilon(1e-12));
    CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), InvalidArgument);
    CHECK_THROWS_AS(loglog_slope({1.0, 2.0}, {1.0, 0.0}), InvalidArgument);

    std::vector<GradientDifference> d;
    // the smallest L is an outlier and must not enter the fit
    d.push_back({1, AlgorithmKind::full, 8, 1.0, 0.0});
    for (double l : {16.0, 32.0, 64.0}) d.push_back({1, AlgorithmKind::full, l, std::pow(l, -3.0), 0.0});
    const auto fits = fit_rates(d);
    REQUIRE(fits.size() == 1);
    CHECK(fits[0].slope == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(fits[0].points == 3);

    CHECK(resample_seed(4, 64, 1) == resample_seed(4, 64, 1));
    CHECK(resample_seed(4, 64, 1) != resample_seed(4, 64, 2));
    CHECK(resample_seed(4, 64, 1) != resample_seed(4, 32, 1));
    for (int k = 1; k < 20; ++k) CHECK(resample_seed(4, 64, k) != 4);
}

TEST_CASE("CSV writer") {
    const auto dir = scratch("csv");
    {
        CsvWriter w(dir / "t.csv", "abc2d.test", {"a", "b", "c"});
        w.row({1.0 / 3.0, 7ll, std::string("x")});
        CHECK_THROWS_AS(w.row({1.0}), InvalidArgument);
        CHECK(w.rows() == 1);
    }
    const auto l = lines(dir / "t.csv");
    REQUIRE(l.size() == 3);
    CHECK(l[0] == "# schema: abc2d.test v1");
    CHECK(l[1] == "a,b,c");
    CHECK(l[2] == "0.33333333333333331,7,x");
    CHECK(std::stod(format_double(0.1 + 0.2)) == 0.1 + 0.2);
}

TEST_CASE("homogenized coefficient study on a constant medium") {
    ExperimentConfig c = small();
    c.medium = MediumSpec::parse("constant:0.6");
    const auto s = run_ahom_study(c);
    REQUIRE(s.rows.size() == 4);
    CHECK(s.failures.empty());
    for (const auto& r : s.rows) CHECK((r.a_h.matrix - 0.6 * Mat2::Identity()).norm() < 1e-6);
    for (const auto& d : ahom_differences(s.rows)) CHECK(d.difference.norm() < 1e-6);
    const auto dir = scratch("ahom");
    const auto files = write_ahom(dir, s);
    CHECK(lines(files[0]).size() == 6);
    CHECK(lines(files[1]).size() == 4);
    c.L_values = {8};
    CHECK_THROWS_AS(run_ahom_study(c), InvalidArgument);
}

TEST_CASE("convergence study output is reproducible and cached") {
    ExperimentConfig c = small();
    c.workers = 2;
    RunCache cache;
    const auto a = run_convergence_study(c, &cache);
    CHECK(a.failures.empty());
    CHECK(a.runs.size() == 12);
    CHECK(cache.size() == 12);
    // canonical order regardless of completion order
    for (std::size_t k = 1; k < a.runs.size(); ++k)
        CHECK(std::tie(a.runs[k - 1].seed, a.runs[k - 1].L) <= std::tie(a.runs[k].seed, a.runs[k].L));
    CHECK(a.differences.size() == 6);
    c.workers = 1;
    const auto b = run_convergence_study(c);
    const auto da = scratch("conv_a"), db = scratch("conv_b");
    const auto fa = write_convergence(da, a);
    const auto fb = write_convergence(db, b);
    // timing columns differ; compare every numeric field except it
    auto strip = [](const std::vector<std::string>& l) {
        std::vector<std::string> out;
        for (const auto& s : l) out.push_back(s.substr(0, s.rfind(',')));
        return out;
    };
    CHECK(strip(lines(fa[0])) == strip(lines(fb[0])));
    CHECK(lines(fa[2]) == lines(fb[2]));
    CHECK(lines(fa[3]) == lines(fb[3]));
    // one JSON record per CSV row
    const auto j = nlohmann::json::parse(slurp(fa[1]));
    CHECK(j.size() + 2 == lines(fa[0]).size());

    // cached runs come back unchanged
    const auto again = run_convergence_study(small(), &cache);
    CHECK(cache.size() == 12);
    for (std::size_t k = 0; k < again.runs.size(); ++k)
        CHECK(again.runs[k].meta.gradient.pointwise == a.runs[k].meta.gradient.pointwise);
}

TEST_CASE("per-run failures do not stop a study") {
    ExperimentConfig c = small();
    c.L_values = {2, 4};
    const auto s = run_convergence_study(c);
    CHECK(s.failures.size() == 2);
    CHECK(s.runs.size() == 6);
    CHECK(failure_text(s.failures).find("too small") != std::string::npos);
}

TEST_CASE("sensitivity study") {
    ExperimentConfig c;
    c.seeds = {3};
    c.L_values = {4, 8};
    c.resample_count = 2;
    CHECK_THROWS_AS(run_sensitivity_study(c), InvalidArgument);
    c.reference_L = 8;
    CHECK_THROWS_AS(run_sensitivity_study(c), InvalidArgument);
    c.reference_L = 16;
    c.medium = MediumSpec::parse("constant:0.6");
    CHECK_THROWS_AS(run_sensitivity_study(c), InvalidArgument);
    c.medium = MediumSpec{};
    RunCache cache;
    const auto s = run_sensitivity_study(c, &cache);
    CHECK(s.failures.empty());
    CHECK(s.reference.size() == 1);
    CHECK(s.entries.size() == 6);
    for (const auto& e : s.entries) CHECK(e.value > 0.0);
    const auto files = write_sensitivity(scratch("sens"), s);
    CHECK(files[4].filename() == "sensitivity.csv");
    CHECK(lines(files[4]).size() == 8);
}

TEST_CASE("r_star study on a constant medium") {
    ExperimentConfig c;
    c.seeds = {1};
    c.L_values = {4, 8};
    c.medium = MediumSpec::parse("constant:0.6");
    const auto s = run_rstar_study(c);
    REQUIRE(s.rows.size() == 2);
    for (const auto& r : s.rows) {
        CHECK(r.estimate.r_star == 1.0);
        CHECK(r.predicted == doctest::Approx(5.0 / (r.L * r.L) * std::pow(1.0 / r.L, 0.9)));
    }
    CHECK(s.rows[0].measured.has_value());
    CHECK_FALSE(s.rows[1].measured.has_value());
    const auto files = write_rstar(scratch("rstar"), s);
    CHECK(lines(files[0]).size() == 4);
}

TEST_CASE("a_h under grid refinement") {
    ExperimentConfig c;
    c.seeds = {2};
    c.L_values = {8, 16};
    const auto fine = run_ahom_study(c);
    c.h = 0.2;
    const auto coarse = run_ahom_study(c);
    REQUIRE(fine.rows.size() == 2);
    REQUIRE(coarse.rows.size() == 2);
    const Mat2 a = fine.rows[1].a_h.matrix, b = coarse.rows[1].a_h.matrix;
    CHECK((a - b).cwiseAbs().maxCoeff() <= 0.02 * a.norm());
    CHECK((a - b).cwiseAbs().maxCoeff() > 0.0);
}
