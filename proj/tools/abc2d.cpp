// Command-line driver: single runs and the experiment studies.

#include <cstdio>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "abc2d/io.hpp"

using namespace abc2d;

namespace {

struct Flags {
    std::string config;
    std::map<std::string, std::string> settings;  // config key -> value from flags
};

// Registers the shared flags; each maps onto a config key.
void add_flags(CLI::App& app, Flags& f) {
    app.add_option("--config", f.config, "key = value configuration file");
    struct Def {
        const char* flag;
        const char* key;
        const char* help;
    };
    static const Def defs[] = {
        {"--seed", "seeds", "master seed of the point process"},
        {"--seeds", "seeds", "comma-separated seed list"},
        {"--L", "L_values", "box half width L"},
        {"--L-ladder", "L_values", "comma-separated L values"},
        {"--h", "h", "grid spacing (default 0.1)"},
        {"--beta", "beta", "sublinearity exponent (default 0.9)"},
        {"--alg", "algorithms", "dirichlet, no_dipole, full, homogenized_only (comma-separated)"},
        {"--ref-L", "reference_L", "reference L of the sensitivity study"},
        {"--resamples", "resample_count", "re-sampled media per L"},
        {"--workers", "workers", "concurrent runs"},
        {"--out", "output_dir", "output directory"},
        {"--medium", "medium", "poisson, constant:<c> or laminate:<a>,<b>"},
        {"--tol", "solver_tolerance", "relative residual tolerance"},
        {"--memory-gb", "memory_budget_gb", "memory budget of the resource guard"},
        {"--radius", "observation_radius", "radius of the averaged gradient"},
    };
    for (const auto& d : defs) {
        const std::string key = d.key;
        app.add_option_function<std::string>(d.flag, [&f, key](const std::string& v) { f.settings[key] = v; }, d.help);
    }
}

ExperimentConfig build_config(const Flags& f) {
    ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
    for (const auto& [k, v] : f.settings) apply_setting(c, k, v);
    return c;
}

void finish(const ExperimentConfig& c, const std::string& summary, const Written& files) {
    std::filesystem::create_directories(c.output_dir);
    write_text(c.output_dir / "summary.txt", summary);
    write_text(c.output_dir / "config.txt", describe(c));
    std::cout << summary;
    for (const auto& p : files) std::cout << "wrote " << p.string() << '\n';
    std::cout << "wrote " << (c.output_dir / "summary.txt").string() << '\n';
}

int single_seed_L(const ExperimentConfig& c, std::uint64_t& seed, double& L) {
    if (c.seeds.size() != 1 || c.L_values.size() != 1) throw InvalidArgument("give exactly one --seed and one --L");
    seed = c.seeds[0];
    L = c.L_values[0];
    return 0;
}

int cmd_gen_media(const ExperimentConfig& c) {
    std::uint64_t seed;
    double L;
    single_seed_L(c, seed, L);
    if (c.medium.kind != MediumSpec::Kind::poisson) throw InvalidArgument("gen-media writes Poisson point sets");
    PointProcessConfig cfg;
    cfg.master_seed = seed;
    const double half = 2.0 * L + 1.0;
    const auto m = PoissonMedium::sample(cfg, Box::centered_cube(half));
    const auto files = write_points(c.output_dir, m, half);
    std::ostringstream s;
    s << "Poisson medium seed " << seed << " on Q_" << half << ": " << m.points().size() << " points\n";
    finish(c, s.str(), files);
    return 0;
}

int cmd_correctors(const ExperimentConfig& c, bool with_trace) {
    std::uint64_t seed;
    double L;
    single_seed_L(c, seed, L);
    c.validate();
    RunOptions opt = c.run_options();
    opt.compute_rstar = !with_trace;
    const auto medium = make_medium(c.medium, seed, 2.0 * L + 1.0);
    const auto summary = summarize_correctors(*medium, L, opt);
    Written files = write_corrector_summary(c.output_dir, seed, summary);
    if (with_trace) {
        const auto more = write_boundary_trace(c.output_dir, Grid(L, c.h), summary, source_quadrature(opt.source, c.h));
        files.insert(files.end(), more.begin(), more.end());
    }
    const Mat2& a = summary.a_h.matrix;
    char line[400];
    std::snprintf(line, sizeof line, "seed %llu  L %g  a_h = [%.8f %.8f; %.8f %.8f]  xi = (%.6e, %.6e)\n",
                  static_cast<unsigned long long>(seed), L, a(0, 0), a(0, 1), a(1, 0), a(1, 1), summary.dipole.xi.x(),
                  summary.dipole.xi.y());
    std::string text = line;
    if (summary.rstar) {
        std::snprintf(line, sizeof line, "r_star = %g%s (beta %g)\n", summary.rstar->r_star,
                      summary.rstar->saturated ? " saturated" : "", summary.rstar->beta);
        text += line;
    }
    finish(c, text, files);
    return 0;
}

int cmd_solve(const ExperimentConfig& c) {
    c.validate();
    std::vector<RunRecord> runs;
    std::vector<RunFailure> failures;
    for (auto seed : c.seeds)
        for (double L : c.L_values) {
            try {
                const auto medium = make_medium(c.medium, seed, 2.0 * L + 1.0);
                for (auto& r : run_algorithms(c.algorithms, *medium, L, c.run_options())) {
                    r.meta.seed = seed;
                    runs.push_back({seed, L, c.medium.tag(), "", std::move(r.meta)});
                }
            } catch (const Error& e) {
                failures.push_back({seed, L, "solve", e.what()});
            }
        }
    std::ostringstream s;
    for (const auto& r : runs) {
        char line[200];
        std::snprintf(line, sizeof line, "seed %llu  L %g  %-16s grad u(0) = (%.12e, %.12e)\n",
                      static_cast<unsigned long long>(r.seed), r.L, to_string(r.meta.kind), r.meta.gradient.pointwise.x(),
                      r.meta.gradient.pointwise.y());
        s << line;
    }
    s << failure_text(failures);
    finish(c, s.str(), write_runs(c.output_dir, "runs", runs));
    return failures.empty() ? 0 : 1;
}

template <class Study, class Run, class Write>
int cmd_study(const ExperimentConfig& c, Run run, Write write) {
    const Study study = run(c);
    finish(c, summary_text(study), write(c.output_dir, study));
    return study.failures.empty() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Boundary conditions for random elliptic problems: correctors, homogenization and convergence studies"};
    app.require_subcommand(1);
    Flags flags;
    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub subs[] = {
        {"gen-media", "sample a Poisson point set and write it"},
        {"correctors", "correctors, a_h, dipole moment and r_star on Q_2L"},
        {"homogenize", "a_h plus the homogenized boundary data on Q_L"},
        {"solve", "run boundary-condition algorithms"},
        {"convergence", "grad u(0) convergence study"},
        {"ahom", "homogenized coefficient study"},
        {"sensitivity", "algorithm error against re-sampling fluctuations"},
        {"rstar", "sublinearity radius study"},
    };
    std::map<std::string, CLI::App*> cmd;
    for (const auto& s : subs) {
        cmd[s.name] = app.add_subcommand(s.name, s.help);
        // -h is taken by the grid spacing
        cmd[s.name]->set_help_flag("--help", "print this help and exit");
        add_flags(*cmd[s.name], flags);
    }
    CLI11_PARSE(app, argc, argv);

    try {
        const ExperimentConfig c = build_config(flags);
        if (cmd["gen-media"]->parsed()) return cmd_gen_media(c);
        if (cmd["correctors"]->parsed()) return cmd_correctors(c, false);
        if (cmd["homogenize"]->parsed()) return cmd_correctors(c, true);
        if (cmd["solve"]->parsed()) return cmd_solve(c);
        if (cmd["convergence"]->parsed())
            return cmd_study<ConvergenceStudy>(c, [](const auto& cfg) { return run_convergence_study(cfg); },
                                               write_convergence);
        if (cmd["ahom"]->parsed()) return cmd_study<AhomStudy>(c, run_ahom_study, write_ahom);
        if (cmd["sensitivity"]->parsed())
            return cmd_study<SensitivityStudy>(c, [](const auto& cfg) { return run_sensitivity_study(cfg); },
                                               write_sensitivity);
        if (cmd["rstar"]->parsed())
            return cmd_study<RStarStudy>(c, [](const auto& cfg) { return run_rstar_study(cfg); }, write_rstar);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
